"""Queue-length analysis of fixed-cycle traffic lights whose turning
traffic can be blocked by crossing pedestrians."""

from .capacity import (CapacityReport, ServiceCounts, capacity_closed_form_q1, check_stability,
                       hcm_shared_lane_capacity, reward_recursion)
from .engines import EngineOptions, EngineResult, compare_results, run_engine
from .errors import BfctlError, ConfigError
from .model import ArrivalSpec, ModelConfig, ValidatedModel, load_config, validate_config
from .oracle import stationary
from .pgf import aggregate_metrics, queue_pmf, slot_pmfs, solve, throughput
from .scenarios import Scenario, evaluate_scenario, lane_scenario_expand
from .simulate import simulate
from .sweep import SweepSpec, run_sweep

__version__ = "0.1.0"

__all__ = [
    "ArrivalSpec", "BfctlError", "CapacityReport", "ConfigError", "EngineOptions",
    "EngineResult", "ModelConfig", "Scenario", "ServiceCounts", "SweepSpec", "ValidatedModel",
    "aggregate_metrics", "capacity_closed_form_q1", "check_stability", "compare_results",
    "evaluate_scenario", "hcm_shared_lane_capacity", "lane_scenario_expand", "load_config",
    "queue_pmf", "reward_recursion", "run_engine", "run_sweep", "simulate", "slot_pmfs", "solve",
    "stationary", "throughput", "validate_config",
]
