"""Capacity and stability via a backward reward recursion over the cycle.

The cycle is a small Markov chain: states ``(i, u)``/``(i, b)`` for the
blockable green slots, plain ``i`` for the rest.  The expected reward
accumulated from the start of the cycle is the mean number of vehicles
that can depart per cycle when the queue never runs dry.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DivisionDomain, PreconditionUnmet

NEAR_CRITICAL_RHO = 0.999


@dataclass(frozen=True)
class ServiceCounts:
    """Reward (departures) granted per unblocked green slot.

    ``blockable`` has one entry per slot 1..g1, ``free`` one per slot
    g1+1..g1+g2.
    """

    blockable: np.ndarray
    free: np.ndarray

    @classmethod
    def uniform(cls, model):
        return cls(np.full(model.g1, float(model.m)), np.full(model.g2, float(model.m)))

    @classmethod
    def turning_corrected(cls, model, m_turn, m_through):
        """Per-slot rates mixing slower turning and faster through departures.

        Slots after the blockable part have no turning probability of their
        own, so they use the average turning fraction of the blockable part.
        """
        p = model.p
        p_free = float(p.mean()) if len(p) else 0.0
        blockable = np.array([effective_service(pi, m_turn, m_through) for pi in p])
        free = np.full(model.g2, effective_service(p_free, m_turn, m_through))
        return cls(blockable, free)


def effective_service(p_i, m_turn, m_through):
    """Mean departures per slot when a fraction ``p_i`` of batches turn."""
    return p_i * m_turn + (1.0 - p_i) * m_through


@dataclass
class CapacityReport:
    r0: float
    arrival_load: float
    stable: bool
    rho: float
    per_state_rewards: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "r0": self.r0,
            "arrival_load": self.arrival_load,
            "stable": self.stable,
            "rho": self.rho,
            "per_state_rewards": dict(self.per_state_rewards),
        }


def reward_recursion(model, service: ServiceCounts | None = None) -> CapacityReport:
    """Run the backward recursion and return the capacity report."""
    if service is None:
        service = ServiceCounts.uniform(model)
    g1, g2, c = model.g1, model.g2, model.c
    p, q = model.p, model.q
    rewards = {}
    nxt = 0.0
    for i in range(c, g1 + g2, -1):
        rewards[str(i)] = nxt
    for i in range(g1 + g2, g1, -1):
        nxt = service.free[i - g1 - 1] + nxt
        rewards[str(i)] = nxt
    after_blockable = nxt  # reward from the first block-free slot onward
    if g1 == 0:
        r0 = after_blockable
    else:
        # slot g1 reached: blocked loses its departure, unblocked serves
        r_b = after_blockable
        r_u = service.blockable[g1 - 1] + after_blockable
        rewards[f"({g1},b)"], rewards[f"({g1},u)"] = r_b, r_u
        for i in range(g1 - 1, 0, -1):
            pq = p[i] * q[i]
            new_b = q[i] * r_b + (1.0 - q[i]) * r_u
            new_u = service.blockable[i - 1] + pq * r_b + (1.0 - pq) * r_u
            r_b, r_u = new_b, new_u
            rewards[f"({i},b)"], rewards[f"({i},u)"] = r_b, r_u
        r0 = p[0] * q[0] * r_b + (1.0 - p[0] * q[0]) * r_u
    rewards["0"] = r0
    load = model.load
    rho = load / r0 if r0 > 0 else (0.0 if load == 0 else float("inf"))
    return CapacityReport(float(r0), load, bool(load < r0), float(rho), rewards)


def check_stability(model, service: ServiceCounts | None = None) -> CapacityReport:
    """Compare mean arrivals per cycle with capacity (strict inequality)."""
    report = reward_recursion(model, service)
    if report.stable and report.rho > NEAR_CRITICAL_RHO:
        warnings.warn(
            f"load ratio {report.rho:.6f} is close to 1; analytic solutions may be ill-conditioned",
            RuntimeWarning,
            stacklevel=2,
        )
    return report


def hcm_shared_lane_capacity(s_th, P_r, E_R, f_Rpb):
    """Saturation flow of a shared through/right-turn lane (HCM style)."""
    if f_Rpb <= 0:
        raise DivisionDomain(f"f_Rpb must be positive, got {f_Rpb}", f_Rpb=f_Rpb)
    return s_th / (1.0 + P_r * (E_R / f_Rpb - 1.0))


def capacity_closed_form_q1(model) -> float:
    """Closed-form capacity when every q_i = 1 or every p_i = 1.

    With q = 1 the head batch of each blockable slot is served only while no
    turning batch has appeared yet, giving
    ``m * (g2 + sum_i prod_{j<=i} (1 - p_j))``.  With p = 1 each crossing
    simply removes one slot of service: ``m * (g1 + g2 - sum q)``.
    """
    m, g1, g2 = model.m, model.g1, model.g2
    p, q = model.p, model.q
    if np.all(q == 1.0):
        return float(m * (g2 + np.cumprod(1.0 - p).sum()))
    if np.all(p == 1.0):
        return float(m * (g1 + g2 - q.sum()))
    raise PreconditionUnmet("closed form needs q_i = 1 for all i or p_i = 1 for all i")
