"""Zeros of the cleared denominator in the closed unit disk.

Stability guarantees exactly K = m*g zeros (counted with multiplicity) in
|z| <= 1.  They are located from the Taylor polynomial of the denominator
at 0, polished by Newton steps on the exact function, grouped into
multiplicities and certified by an argument-principle winding count.
When no blocking can happen and arrivals are Poisson, the classic
fixed-point iteration z = w_j * Y(z)**(1/K) per K-th root of unity is used.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..capacity import NEAR_CRITICAL_RHO, reward_recursion
from ..errors import NearCritical, RootCountMismatch, Unstable
from ..jet import Jet
from ..model import PoissonTransform, ConstantTransform
from .forms import clearing_power, cycle_jets, denominator

CONTOUR_RADIUS = 1.0 + 1e-6
DISK_TOL = 1e-7
CLUSTER_TOL = 1e-7


@dataclass
class RootSet:
    roots: np.ndarray          # distinct roots
    multiplicity: np.ndarray   # matching multiplicities
    winding: int
    method: str

    @property
    def count(self):
        return int(self.multiplicity.sum())

    def expanded(self):
        return np.repeat(self.roots, self.multiplicity)

    def to_dict(self):
        return {
            "roots": [[float(z.real), float(z.imag)] for z in self.roots],
            "multiplicity": [int(k) for k in self.multiplicity],
            "winding": self.winding,
            "method": self.method,
        }


def winding_number(func, radius=CONTOUR_RADIUS, initial=512, max_points=1 << 22):
    """Number of zeros of ``func`` inside |z| < radius (argument principle).

    The contour is refined until no step turns the argument by more than
    pi/4, which makes the sum of principal increments exact.
    """
    theta = np.linspace(0.0, 2 * np.pi, initial + 1)
    vals = func(radius * np.exp(1j * theta))
    while True:
        steps = np.angle(vals[1:] / vals[:-1])
        bad = np.nonzero(np.abs(steps) > np.pi / 4)[0]
        if len(bad) == 0:
            return int(round(steps.sum() / (2 * np.pi)))
        if len(theta) + len(bad) > max_points:
            raise RootCountMismatch("winding count did not resolve", points=len(theta))
        mid = 0.5 * (theta[bad] + theta[bad + 1])
        theta = np.insert(theta, bad + 1, mid)
        vals = np.insert(vals, bad + 1, func(radius * np.exp(1j * mid)))


def _denominator_taylor(model, order):
    a, _, _ = cycle_jets(model, Jet.variable(0.0, order), self_only=True)
    d = -a.c.copy()
    d[clearing_power(model)] += 1.0
    return d


def _taylor_candidates(model):
    """Zero multiplicity at the origin and the nonzero candidate roots."""
    K = clearing_power(model)
    order = max(64, 4 * K)
    while True:
        d = _denominator_taylor(model, order)
        scale = np.abs(d).max()
        if np.abs(d[-8:]).max() < 1e-17 * scale or order >= 4096:
            break
        order *= 2
    nz = np.nonzero(d != 0)[0]
    n0 = int(nz[0])
    poly = d[n0:]
    keep = np.nonzero(np.abs(poly) > 1e-22 * scale)[0]
    poly = poly[: keep[-1] + 1]
    cand = np.roots(poly[::-1]) if len(poly) > 1 else np.array([], dtype=complex)
    return n0, cand[np.abs(cand) <= 1.0 + 1e-3]


def _is_plain_poisson(model):
    no_blocking = all(p * q == 0 for p, q in zip(model.p, model.q))
    poisson = all(isinstance(t, (PoissonTransform, ConstantTransform)) for t in model.arrival_tfs)
    return no_blocking and poisson


def fixed_point_roots(model, iterations=2000, tol=1e-15):
    """Roots of z**K = exp(L (z - 1)) for total cycle load L (no blocking)."""
    K = clearing_power(model)
    lam = model.load / K
    w = np.exp(2j * np.pi * np.arange(K) / K)
    z = np.zeros(K, dtype=complex)
    for _ in range(iterations):
        new = w * np.exp(lam * (z - 1.0))
        if np.abs(new - z).max() < tol:
            z = new
            break
        z = new
    return z


def _newton(model, z, steps=60):
    z = z.copy()
    K = clearing_power(model)
    active = np.ones(len(z), dtype=bool)
    for _ in range(steps):
        if not active.any():
            break
        jz = Jet.variable(z[active], 1)
        a, _, _ = cycle_jets(model, jz, self_only=True)
        d = (jz ** K - a).c
        deriv = d[1]
        ok = np.abs(deriv) > 1e-300
        step = np.where(ok, d[0] / np.where(ok, deriv, 1.0), 0.0)
        idx = np.nonzero(active)[0]
        z[idx] -= step
        done = (np.abs(step) <= 1e-15 * np.maximum(np.abs(z[idx]), 1.0)) | ~ok
        active[idx[done]] = False
    return z


def _cluster(z):
    z = list(z)
    roots, mult = [], []
    used = [False] * len(z)
    for i, zi in enumerate(z):
        if used[i]:
            continue
        group = [zi]
        used[i] = True
        for j in range(i + 1, len(z)):
            if not used[j] and abs(z[j] - zi) < CLUSTER_TOL:
                used[j] = True
                group.append(z[j])
        roots.append(np.mean(group))
        mult.append(len(group))
    return np.array(roots, dtype=complex), np.array(mult, dtype=int)


def find_roots(model, check_load=True) -> RootSet:
    """All zeros of the cleared denominator in the closed unit disk."""
    K = clearing_power(model)
    if check_load:
        report = reward_recursion(model)
        if not report.stable:
            raise Unstable("arrival load is not below capacity", r0=report.r0,
                           arrival_load=report.arrival_load)
        if report.rho > NEAR_CRITICAL_RHO:
            raise NearCritical("load ratio too close to 1 for a reliable root search",
                               rho=report.rho)

    if _is_plain_poisson(model):
        method = "fixed-point"
        n0, cand = 0, fixed_point_roots(model)
    else:
        method = "taylor-companion"
        n0, cand = _taylor_candidates(model)
    if len(cand):
        cand = _newton(model, cand)
    cand = cand[np.abs(cand) <= 1.0 + DISK_TOL]
    if len(cand):
        near_one = int(np.argmin(np.abs(cand - 1.0)))
        if abs(cand[near_one] - 1.0) < 1e-6:
            cand[near_one] = 1.0
    roots, mult = _cluster(cand)
    if n0:
        roots = np.concatenate([[0.0], roots])
        mult = np.concatenate([[n0], mult])
    winding = winding_number(lambda z: denominator(model, z))
    result = RootSet(roots, mult.astype(int), winding, method)
    if winding != K or result.count != K:
        raise RootCountMismatch(
            f"found {result.count} roots, winding count {winding}, expected {K}",
            found=result.count, winding=winding, expected=K)
    if not np.any(roots == 1.0):
        raise RootCountMismatch("z = 1 not among the located roots", expected=K)
    return result
