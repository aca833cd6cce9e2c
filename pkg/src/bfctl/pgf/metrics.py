"""Performance measures from a solved model."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InversionUnstable
from ..jet import Jet
from ..model import Pmf
from .system import SolvedModel

INVERSION_BOUND_LIMIT = 1e-8
CLAMP_FLOOR = -1e-9


def slot_mean(solved: SolvedModel, i: int) -> float:
    """Mean queue length at the end of slot i."""
    return float(solved.means[i - 1])


@dataclass
class InversionInfo:
    radius: float
    points: int
    aliasing_bound: float


def lattice_coefficients(func, n_max, avoid=()):
    """First n_max+1 Taylor coefficients of a PGF by inversion on a circle.

    ``avoid`` lists points (e.g. denominator zeros) the circle must not pass
    near; the radius is nudged inward if needed.
    """
    points = 4 * (n_max + 1)
    radius = 10.0 ** (-8.0 / (2 * (n_max + 1)))
    avoid = np.asarray(avoid, dtype=complex)
    for _ in range(50):
        if not len(avoid) or np.min(np.abs(np.abs(avoid) - radius)) > 1e-3:
            break
        radius *= 0.995
    bound = radius ** points / (1.0 - radius ** points)
    if bound > INVERSION_BOUND_LIMIT:
        raise InversionUnstable(f"aliasing bound {bound:.3g} exceeds {INVERSION_BOUND_LIMIT:g}",
                                bound=bound)
    z = radius * np.exp(2j * np.pi * np.arange(points) / points)
    vals = func(z)
    coeffs = np.fft.fft(vals, axis=0) / points
    scale = radius ** np.arange(n_max + 1)
    coeffs = coeffs[: n_max + 1].real / scale.reshape((-1,) + (1,) * (coeffs.ndim - 1))
    return coeffs, InversionInfo(float(radius), points, float(bound))


def queue_pmf(solved: SolvedModel, i: int, n_max: int = 50, part="total", with_info=False):
    """P(X_i = n) for n = 0..n_max (or the u/b joint probabilities)."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    if solved.trivial:
        w = np.zeros(n_max + 1)
        w[0] = 1.0 if part != "b" else 0.0
        info = InversionInfo(1.0, 0, 0.0)
        pmf = Pmf(w, 0.0)
        return (pmf, info) if with_info else pmf
    coeffs, info = lattice_coefficients(lambda z: solved.pgf(i, z, part), n_max,
                                        avoid=solved.roots.roots)
    coeffs[(coeffs < 0) & (coeffs >= CLAMP_FLOOR)] = 0.0
    total = float(solved.moments()["unblocked_mass"][i - 1]) if part == "u" else 1.0
    if part == "b":
        total = 1.0 - float(solved.moments()["unblocked_mass"][i - 1])
    pmf = Pmf(coeffs, max(0.0, total - coeffs.sum()))
    return (pmf, info) if with_info else pmf


def overflow_pmf(solved: SolvedModel, n_max: int = 50) -> Pmf:
    return queue_pmf(solved, solved.overflow_slot, n_max)


@dataclass
class Metrics:
    mean_queue: float
    mean_delay: float
    delay_defined: bool
    overflow_mean: float
    overflow_variance: float
    slot_means: np.ndarray
    slot_variances: np.ndarray
    flags: list = field(default_factory=list)

    def to_dict(self):
        return {
            "mean_queue": self.mean_queue,
            "mean_delay": self.mean_delay,
            "delay_defined": self.delay_defined,
            "overflow_mean": self.overflow_mean,
            "overflow_variance": self.overflow_variance,
            "slot_means": [float(x) for x in self.slot_means],
            "slot_variances": [float(x) for x in self.slot_variances],
            "flags": list(self.flags),
        }


def aggregate_metrics(solved: SolvedModel) -> Metrics:
    """Queue at an arbitrary slot end and mean delay via Little's law.

    The arbitrary-slot queue averages the per-slot laws; the delay divides
    its mean by the average arrival rate per slot.
    """
    mom = solved.moments()
    means, var = mom["mean"], mom["variance"]
    mean_queue = float(means.mean())
    rate = float(solved.model.means.mean())
    flags = []
    if rate > 0:
        delay, defined = mean_queue / rate, True
    else:
        delay, defined = 0.0, False
        flags.append("ZeroArrivalDelay")
    g = solved.overflow_slot
    return Metrics(mean_queue, delay, defined, float(means[g - 1]), float(var[g - 1]),
                   means.copy(), var.copy(), flags)


def throughput(solved: SolvedModel) -> float:
    """Expected departures per cycle implied by the solved boundary probabilities.

    Only the probabilities of short queues (fewer than m vehicles) and the
    blocked/unblocked split enter, so agreement with the arrival load is a
    genuine stationarity check.
    """
    model = solved.model
    m, g1, g, c = model.m, model.g1, model.g1 + model.g2, model.c
    x = dict(zip(solved.index.labels, solved.unknowns))
    mass_u = solved.moments()["unblocked_mass"]
    ey = model.means
    eyb = [p.mean for p in model.blocked_pmfs]

    def served(i, probs_small, mass):
        # departures from a group of states whose queue law starts with probs_small
        small = sum(pr * (l + ey[i - 1]) for l, pr in probs_small)
        return m * (mass - sum(pr for _, pr in probs_small)) + small

    total = 0.0
    for i in range(1, g + 1):
        prev = c if i == 1 else i - 1
        if prev <= g1 and prev >= 1:
            pu = [(l, x[("u", prev, l)]) for l in range(m)]
            pb = [(l, x[("b", prev, l)]) for l in range(1, m)]
            mu, mb = mass_u[prev - 1], 1.0 - mass_u[prev - 1]
        else:
            pu = [(l, x[("x", prev, l)]) for l in range(m)]
            pb, mu, mb = [], 1.0, 0.0
        if i <= g1:
            p, q = model.p[i - 1], model.q[i - 1]
            p0 = pu[0][1]
            total += (1 - p * q) * served(i, pu[1:], mu - p0)
            total += (1 - q) * served(i, pb, mb)
            total += p0 * (ey[i - 1] - q * eyb[i - 1])
        else:
            total += served(i, pu + pb, mu + mb)
    return float(total)


def slot_pmfs(solved: SolvedModel, n_max: int = 50):
    """Queue laws of every slot (rows) from one batched inversion."""
    c = solved.model.c
    if solved.trivial:
        out = np.zeros((c, n_max + 1))
        out[:, 0] = 1.0
        return out, InversionInfo(1.0, 0, 0.0)

    def all_slots(z):
        jets = solved.slot_jets(Jet.variable(z, 0))
        return np.array([jets[(i, "total")].c[0] for i in range(1, c + 1)])

    coeffs, info = lattice_coefficients(lambda z: all_slots(z).T, n_max, avoid=solved.roots.roots)
    coeffs = coeffs.T
    coeffs[(coeffs < 0) & (coeffs >= CLAMP_FLOOR)] = 0.0
    return coeffs, info
