"""Uniform front end over the solvers so they can be compared and swept."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .capacity import check_stability
from .errors import Unstable
from .oracle import stationary
from .pgf import aggregate_metrics, slot_pmfs, solve, throughput
from .simulate import simulate

ENGINES = ("solve", "oracle", "simulate")


@dataclass
class EngineOptions:
    n_max: int = 50
    truncation: int = 200
    cycles: int = 10_000
    runs: int = 100
    seed: int = 0
    semantics: Optional[str] = None


@dataclass
class EngineResult:
    engine: str
    slot_means: np.ndarray
    slot_pmfs: Optional[np.ndarray]
    mean_queue: float
    mean_delay: float
    overflow_slot: int
    extras: dict = field(default_factory=dict)

    @property
    def overflow_mean(self):
        return float(self.slot_means[self.overflow_slot - 1])

    def overflow_cdf(self, upto=None):
        if self.slot_pmfs is None:
            return None
        pmf = self.slot_pmfs[self.overflow_slot - 1]
        cdf = np.minimum(np.cumsum(pmf), 1.0)
        return cdf if upto is None else cdf[: upto + 1]

    def to_dict(self, include_pmfs=True):
        out = {
            "engine": self.engine,
            "slot_means": [float(x) for x in self.slot_means],
            "mean_queue": self.mean_queue,
            "mean_delay": self.mean_delay,
            "overflow_slot": self.overflow_slot,
            "overflow_mean": self.overflow_mean,
        }
        if include_pmfs and self.slot_pmfs is not None:
            out["overflow_pmf"] = [float(x) for x in self.slot_pmfs[self.overflow_slot - 1]]
            out["overflow_cdf"] = [float(x) for x in self.overflow_cdf()]
        out.update(self.extras)
        return out


def _delay(mean_queue, model):
    rate = float(model.means.mean())
    return mean_queue / rate if rate > 0 else 0.0


def run_engine(name, model, opts: EngineOptions | None = None) -> EngineResult:
    opts = opts or EngineOptions()
    g = model.g1 + model.g2
    report = check_stability(model)
    if name != "simulate" and not report.stable:
        raise Unstable("arrival load is not below capacity", r0=report.r0,
                       arrival_load=report.arrival_load)
    if name == "solve":
        solved = solve(model)
        pmfs, info = slot_pmfs(solved, opts.n_max)
        met = aggregate_metrics(solved)
        extras = {
            "unknowns": solved.unknown_table(),
            "roots": solved.roots.to_dict(),
            "residual": solved.residual,
            "condition": solved.cond,
            "slot_variances": [float(x) for x in met.slot_variances],
            "overflow_variance": met.overflow_variance,
            "throughput": throughput(solved),
            "inversion": {"radius": info.radius, "points": info.points,
                          "aliasing_bound": info.aliasing_bound},
            "flags": met.flags,
        }
        return EngineResult(name, met.slot_means, pmfs, met.mean_queue, met.mean_delay, g, extras)
    if name == "oracle":
        res = stationary(model, opts.truncation, semantics=opts.semantics or "analytic")
        mq = float(res.means.mean())
        extras = {"truncation_mass": res.truncation_mass, "throughput": res.throughput,
                  "cycles": res.cycles, "L": res.L, "semantics": res.semantics}
        pmfs = res.pmfs[:, : opts.n_max + 1]
        return EngineResult(name, res.means, pmfs, mq, _delay(mq, model), g, extras)
    if name == "simulate":
        rep = simulate(model, opts.cycles, opts.runs, opts.seed,
                       semantics=opts.semantics or "listing")
        mq = float(rep.per_slot_mean.mean())
        extras = {"per_slot_ci": rep.to_dict()["per_slot_ci"], "overflow_ci": list(rep.overflow_ci),
                  "runs": rep.runs, "cycles_per_run": rep.cycles_per_run, "seed": rep.seed,
                  "semantics": rep.semantics}
        return EngineResult(name, rep.per_slot_mean, None, mq, _delay(mq, model), g, extras)
    raise ValueError(f"unknown engine {name!r}; choose from {ENGINES}")


def compare_results(a: EngineResult, b: EngineResult) -> dict:
    """Signed mean differences (a - b) plus pmf sup and total-variation distances."""
    diff = np.asarray(a.slot_means) - np.asarray(b.slot_means)
    out = {
        "engines": [a.engine, b.engine],
        "mean_diff": [float(x) for x in diff],
        "max_abs_mean_diff": float(np.abs(diff).max()),
        "sup_distance": None,
        "sup_tv": None,
    }
    if a.slot_pmfs is not None and b.slot_pmfs is not None:
        n = min(a.slot_pmfs.shape[1], b.slot_pmfs.shape[1])
        d = a.slot_pmfs[:, :n] - b.slot_pmfs[:, :n]
        out["sup_distance"] = float(np.abs(d).max())
        out["sup_tv"] = float(0.5 * np.abs(d).sum(axis=1).max())
    return out
