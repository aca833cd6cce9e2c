"""Independent stationary solver on the truncated (slot, queue, blocked) chain.

Queue lengths are truncated at ``L``; any mass that would exceed ``L`` is
lumped into ``L`` so distributions keep total mass 1, and the amount lumped
per cycle is reported as ``truncation_mass``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence
from .model import arrival_pmf, blocked_pmf_from

SEMANTICS = ("analytic", "listing")
ORACLE_EPS = 1e-16


def _conv_matrix(weights, L):
    """Column-stochastic matrix adding arrivals with pmf ``weights``.

    Returns the matrix and the per-column mass pushed beyond ``L``.
    """
    w = np.asarray(weights, dtype=float)
    w = w / w.sum()
    M = np.zeros((L + 1, L + 1))
    n = min(len(w), L + 1)
    for j in range(L + 1):
        top = min(n, L + 1 - j)
        M[j : j + top, j] = w[:top]
    below = M.sum(axis=0)
    overflow = 1.0 - below
    # mass at exactly L counts as exact, anything beyond is lumped
    M[L, :] += overflow
    return M, np.clip(overflow, 0.0, None)


def _lump(weights, L):
    w = np.zeros(L + 1)
    v = np.asarray(weights, dtype=float)
    v = v / v.sum()
    n = min(len(v), L + 1)
    w[:n] = v[:n]
    w[L] += v[n:].sum()
    return w, float(v[L + 1 :].sum()) if len(v) > L + 1 else 0.0


class _SlotOps:
    def __init__(self, model, L, semantics):
        if semantics not in SEMANTICS:
            raise ValueError(f"semantics must be one of {SEMANTICS}")
        self.model, self.L, self.m = model, L, model.m
        self.semantics = semantics
        # finer truncation than the model default keeps the oracle's own
        # arrival means within ~1e-14 of the exact ones
        eps = min(model.eps, ORACLE_EPS)
        pmfs = [arrival_pmf(a, eps) for a in model.config.arrivals]
        if model.config.blocked_arrivals_override is None:
            bpmfs = [blocked_pmf_from(pmfs[i], model.p[i]) for i in range(model.g1)]
        else:
            bpmfs = list(model.blocked_pmfs)
        self.conv = [_conv_matrix(p.weights, L) for p in pmfs]
        self.mean_y = np.array([p.mean / p.total for p in pmfs])
        self.yb = [_lump(p.weights, L) for p in bpmfs]
        self.mean_yb = np.array([p.mean / p.total for p in bpmfs])

    def add(self, i, v):
        M, over = self.conv[i - 1]
        return M @ v, over @ v

    def serve(self, i, v):
        """Departure of up to m vehicles, then arrivals; sub-m queues clear."""
        m, L = self.m, self.L
        shifted = np.zeros_like(v)
        shifted[: L + 1 - m] = v[m:]
        out, over = self.add(i, shifted)
        out[0] += v[:m].sum(axis=0)
        levels = np.minimum(np.arange(L + 1), m).astype(float)
        small = np.arange(L + 1) < m
        dep = levels @ v + self.mean_y[i - 1] * (small.astype(float) @ v)
        return out, over, dep

    def blockable(self, i, u, b):
        p, q = self.model.p[i - 1], self.model.q[i - 1]
        pq = p * q
        over = dep = 0.0
        if self.semantics == "analytic":
            u_pos = u.copy()
            u_pos[0] = 0.0
            nb, o1 = self.add(i, pq * u_pos + q * b)
            nu, o2, d = self.serve(i, (1 - pq) * u_pos + (1 - q) * b)
            yb, yb_over = self.yb[i - 1]
            u0 = u[0]
            nu[0] += (1 - q) * u0 + q * u0 * yb[0]
            yb_pos = yb.copy()
            yb_pos[0] = 0.0
            nb = nb + np.multiply.outer(yb_pos, q * u0)
            over = o1 + o2 + q * yb_over * u0
            dep = d + u0 * (self.mean_y[i - 1] - q * self.mean_yb[i - 1])
        else:
            nb, o1 = self.add(i, pq * u + q * b)
            nu, o2, dep = self.serve(i, (1 - pq) * u + (1 - q) * b)
            over = o1 + o2
        return nu, nb, over, dep

    def green(self, i, v):
        return self.serve(i, v)

    def red(self, i, v):
        out, over = self.add(i, v)
        return out, over, 0.0 * over


def _run_cycle(ops, start, record=False):
    """Push the end-of-cycle distribution(s) ``start`` through one cycle."""
    model = ops.model
    g1, g = model.g1, model.g1 + model.g2
    u, b = start, np.zeros_like(start)
    overflow = departures = 0.0
    slots = []
    for i in range(1, model.c + 1):
        if i <= g1:
            u, b, o, d = ops.blockable(i, u, b)
        elif i <= g:
            u, o, d = ops.green(i, u + b)
            b = np.zeros_like(u)
        else:
            u, o, d = ops.red(i, u)
        overflow = overflow + o
        departures = departures + d
        if record:
            slots.append((u.copy(), b.copy()))
    return u, overflow, departures, slots


def one_cycle_kernel(model, L, semantics="analytic"):
    """Column-stochastic matrix mapping the queue law at the end of slot c to
    the law one cycle later, with the per-column truncation overflow."""
    if L < model.m:
        raise ValueError("L must be at least m")
    ops = _SlotOps(model, L, semantics)
    P, over, _, _ = _run_cycle(ops, np.eye(L + 1))
    return P, over


@dataclass
class OracleResult:
    L: int
    pmfs: np.ndarray        # (c, L+1) queue law at the end of each slot
    unblocked: np.ndarray   # (g1, L+1)
    blocked: np.ndarray     # (g1, L+1)
    means: np.ndarray
    throughput: float
    truncation_mass: float
    cycles: int
    semantics: str

    def to_dict(self):
        return {
            "L": self.L,
            "semantics": self.semantics,
            "means": [float(x) for x in self.means],
            "throughput": self.throughput,
            "truncation_mass": self.truncation_mass,
            "cycles": self.cycles,
        }


def stationary(model, L=200, tol=1e-12, max_doublings=20, semantics="analytic") -> OracleResult:
    """Stationary per-slot laws by power iteration on the cycle kernel.

    The iteration is accelerated by repeated squaring of the kernel, so
    ``max_doublings = 20`` corresponds to about 10**6 cycles.
    """
    P, _ = one_cycle_kernel(model, L, semantics)
    pi = np.zeros(L + 1)
    pi[0] = 1.0
    power = P
    cycles = 1
    new = power @ pi
    for _ in range(max_doublings + 1):
        if 0.5 * np.abs(new - pi).sum() < tol:
            pi = new
            break
        pi = new
        power = power @ power
        cycles *= 2
        new = power @ pi
    else:
        raise NoConvergence(f"no convergence within {cycles} cycles", cycles=cycles)
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    ops = _SlotOps(model, L, semantics)
    _, overflow, departures, slots = _run_cycle(ops, pi, record=True)
    pmfs = np.array([u + b for u, b in slots])
    g1 = model.g1
    unblocked = np.array([slots[i][0] for i in range(g1)]).reshape(g1, L + 1)
    blocked = np.array([slots[i][1] for i in range(g1)]).reshape(g1, L + 1)
    means = pmfs @ np.arange(L + 1)
    return OracleResult(L, pmfs, unblocked, blocked, means, float(departures),
                        float(overflow), cycles, semantics)
