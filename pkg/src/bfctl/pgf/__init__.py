"""Generating-function solver: propagation, roots, boundary system, metrics."""

from .forms import (LinearForm, UnknownIndex, denominator, propagate_cycle,
                    propagate_forms, slot_forms_at)
from .metrics import (InversionInfo, Metrics, aggregate_metrics, lattice_coefficients,
                      overflow_pmf, queue_pmf, slot_mean, slot_pmfs, throughput)
from .roots import RootSet, find_roots, fixed_point_roots, winding_number
from .system import SolvedModel, assemble_system, solve

__all__ = [
    "LinearForm", "UnknownIndex", "denominator", "propagate_cycle", "propagate_forms",
    "slot_forms_at", "InversionInfo", "Metrics", "aggregate_metrics", "lattice_coefficients",
    "overflow_pmf", "queue_pmf", "slot_mean", "slot_pmfs", "throughput", "RootSet", "find_roots",
    "fixed_point_roots", "winding_number", "SolvedModel", "assemble_system", "solve",
]
