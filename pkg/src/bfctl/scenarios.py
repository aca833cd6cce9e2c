"""Multi-lane layouts analysed as independent single-lane queues.

Each layout splits a total arrival rate ``mu`` (vehicles per slot) over
one or two lanes with their own turning probability; lane metrics are
summed afterwards.  Pedestrians cross in every blockable slot (q = 1).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .engines import run_engine
from .errors import UnknownScenario
from .model import ModelConfig, validate_config

# (turning probability, share of mu) per lane
LAYOUTS = {
    "single": ((0.3, 1.0),),
    "dedicated": ((1.0, 0.3), (0.0, 0.7)),
    "shared-2a": ((0.6, 0.5), (0.0, 0.5)),
    "shared-2b": ((0.75, 0.4), (0.0, 0.6)),
}
ALIASES = {"case1": "single", "case2": "dedicated", "case2a": "shared-2a", "case2b": "shared-2b"}

# signal timings (g1, g2, r) of the one-lane and two-lane comparisons
ONE_LANE_TIMING = (8, 20, 20)
TWO_LANE_TIMING = (8, 16, 16)
DEFAULT_TIMING = {"single": ONE_LANE_TIMING, "dedicated": ONE_LANE_TIMING,
                  "shared-2a": TWO_LANE_TIMING, "shared-2b": TWO_LANE_TIMING}


@dataclass(frozen=True)
class Scenario:
    layout: str
    mu: float
    timing: Optional[tuple] = None
    q: float = 1.0

    @property
    def resolved_timing(self):
        return tuple(self.timing) if self.timing else DEFAULT_TIMING[canonical_layout(self.layout)]


def canonical_layout(name):
    key = ALIASES.get(name, name)
    if key not in LAYOUTS:
        raise UnknownScenario(f"unknown layout {name!r}; known: {sorted(LAYOUTS)}", layout=name)
    return key


def lane_scenario_expand(scenario: Scenario):
    """Per-lane configurations of a layout."""
    key = canonical_layout(scenario.layout)
    g1, g2, r = scenario.resolved_timing
    return [
        ModelConfig.build(g1, g2, r, m=1, p=p, q=scenario.q, arrivals=share * scenario.mu)
        for p, share in LAYOUTS[key]
    ]


def evaluate_scenario(scenario: Scenario, engine="solve", opts=None):
    """Per-lane metrics and their sums for one layout at one total rate."""
    lanes = []
    for cfg in lane_scenario_expand(scenario):
        res = run_engine(engine, validate_config(cfg), opts)
        lanes.append({
            "p": cfg.p[0] if cfg.p else 0.0,
            "rate": cfg.arrivals[0].mean,
            "mean_queue": res.mean_queue,
            "mean_delay": res.mean_delay,
            "overflow_mean": res.overflow_mean,
        })
    return {
        "layout": canonical_layout(scenario.layout),
        "mu": scenario.mu,
        "timing": list(scenario.resolved_timing),
        "lanes": lanes,
        "total_mean_queue": sum(l["mean_queue"] for l in lanes),
        "total_overflow_mean": sum(l["overflow_mean"] for l in lanes),
    }
