"""Lane-group configuration, arrival laws and their generating functions.

A cycle has ``c = g1 + g2 + r`` slots: ``g1`` green slots in which the head
batch can be blocked by crossing pedestrians, ``g2`` block-free green slots
and ``r`` red slots.  Up to ``m`` queued vehicles depart per green slot.
Slots are numbered 1..c throughout the package.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from .errors import ConfigError
from .jet import Jet, horner

DEFAULT_EPS = 1e-12
PMF_SUM_TOL = 1e-12
_ARRIVAL_KINDS = ("poisson", "geometric", "deterministic", "explicit")
_CONFIG_KEYS = {"g1", "g2", "r", "m", "p", "q", "arrivals", "blocked_arrivals"}


@dataclass(frozen=True, eq=False)
class Pmf:
    """Finite nonnegative distribution on 0, 1, 2, ...

    ``tail_eps`` is the probability mass cut off by truncation, so the
    weights sum to ``1 - tail_eps`` up to rounding.
    """

    weights: np.ndarray
    tail_eps: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))

    def __len__(self):
        return len(self.weights)

    def __getitem__(self, k):
        return self.weights[k] if 0 <= k < len(self.weights) else 0.0

    @property
    def mean(self):
        return float(np.dot(np.arange(len(self.weights)), self.weights))

    @property
    def total(self):
        return float(self.weights.sum())

    def cdf(self):
        return np.cumsum(self.weights)

    def evaluate(self, z):
        return np.polyval(self.weights[::-1], z)

    def __eq__(self, other):
        return (
            isinstance(other, Pmf)
            and np.array_equal(self.weights, other.weights)
            and self.tail_eps == other.tail_eps
        )

    __hash__ = None


def check_pmf(weights, tol=PMF_SUM_TOL):
    """Return a list of problems with an explicit pmf (empty when fine)."""
    w = np.asarray(weights, dtype=float)
    problems = []
    if w.ndim != 1 or len(w) == 0:
        problems.append("pmf must be a nonempty 1-d list")
        return problems
    if not np.all(np.isfinite(w)):
        problems.append("pmf has non-finite weights")
    elif np.any(w < 0):
        problems.append("pmf has negative weights")
    elif abs(w.sum() - 1.0) > tol:
        problems.append(f"pmf sums to {w.sum():.15g}, not 1")
    return problems


# ----------------------------------------------------------------------
# arrival laws


@dataclass(frozen=True)
class ArrivalSpec:
    """Law of the number of arrivals in one slot.

    ``value`` is the mean for poisson/geometric and the count for
    deterministic; ``pmf`` is used only by the explicit kind.
    """

    kind: str
    value: float = 0.0
    pmf: Optional[Pmf] = field(default=None, compare=False)

    @classmethod
    def poisson(cls, mean):
        return cls("poisson", float(mean))

    @classmethod
    def geometric(cls, mean):
        return cls("geometric", float(mean))

    @classmethod
    def deterministic(cls, k):
        return cls("deterministic", int(k))

    @classmethod
    def explicit(cls, weights):
        return cls("explicit", 0.0, Pmf(weights))

    @property
    def mean(self):
        if self.kind == "explicit":
            return self.pmf.mean
        return float(self.value)

    def problems(self):
        if self.kind not in _ARRIVAL_KINDS:
            return [("BadArrival", f"unknown arrival kind {self.kind!r}")]
        if self.kind == "explicit":
            if self.pmf is None:
                return [("MalformedPmf", "explicit arrival law without pmf")]
            return [("MalformedPmf", msg) for msg in check_pmf(self.pmf.weights)]
        if not math.isfinite(self.value) or self.value < 0:
            return [("BadArrival", f"{self.kind} mean must be finite and >= 0, got {self.value}")]
        if self.kind == "deterministic" and self.value != int(self.value):
            return [("BadArrival", "deterministic count must be an integer")]
        return []

    def to_dict(self):
        if self.kind == "explicit":
            return {"kind": "explicit", "pmf": [float(x) for x in self.pmf.weights]}
        if self.kind == "deterministic":
            return {"kind": "deterministic", "k": int(self.value)}
        return {"kind": self.kind, "mean": float(self.value)}

    @classmethod
    def from_dict(cls, d):
        if isinstance(d, (int, float)):
            return cls.poisson(d)
        d = dict(d)
        kind = d.pop("kind", "poisson")
        if kind == "explicit":
            spec = cls.explicit(d.pop("pmf"))
        elif kind == "deterministic":
            spec = cls("deterministic", d.pop("k"))
        else:
            spec = cls(kind, float(d.pop("mean")))
        if d:
            raise ConfigError([("UnknownKey", f"unexpected arrival keys {sorted(d)}")])
        return spec


def arrival_pmf(spec, eps=DEFAULT_EPS):
    """Truncated pmf of an arrival law; the discarded tail is at most ``eps``."""
    if spec.kind == "explicit":
        return Pmf(spec.pmf.weights.copy(), 0.0)
    if spec.kind == "deterministic":
        w = np.zeros(int(spec.value) + 1)
        w[-1] = 1.0
        return Pmf(w, 0.0)
    mu = spec.value
    if mu == 0:
        return Pmf([1.0], 0.0)
    if spec.kind == "poisson":
        k = int(stats.poisson.isf(eps, mu))
        while stats.poisson.sf(k, mu) > eps:
            k += 1
        while k > 0 and stats.poisson.sf(k - 1, mu) <= eps:
            k -= 1
        return Pmf(stats.poisson.pmf(np.arange(k + 1), mu), float(stats.poisson.sf(k, mu)))
    # geometric on {0,1,...}: P(k) = (1-a) a^k with mean a/(1-a)
    a = mu / (1.0 + mu)
    k = max(0, math.ceil(math.log(eps) / math.log(a)) - 1)
    w = (1 - a) * a ** np.arange(k + 1)
    return Pmf(w, a ** (k + 1))


class Transform:
    """Analytic probability generating function.

    Calling it with a complex scalar/array gives values; calling it with a
    :class:`Jet` gives the truncated Taylor expansion, which is how every
    derivative in the package is obtained.
    """

    mean = 0.0

    def jet(self, z: Jet) -> Jet:
        raise NotImplementedError

    def __call__(self, z):
        if isinstance(z, Jet):
            return self.jet(z)
        out = self.jet(Jet.variable(z, 0)).c[0]
        return out[()] if out.ndim == 0 else out

    def value_and_derivative(self, z):
        j = self.jet(Jet.variable(z, 1))
        return j.c[0][()], j.c[1][()]


class ConstantTransform(Transform):
    def __init__(self, value=1.0):
        self.value = value

    def jet(self, z):
        return Jet.constant(self.value, z.order, z.shape)


class PoissonTransform(Transform):
    def __init__(self, mean):
        self.mean = float(mean)

    def jet(self, z):
        return ((z - 1.0) * self.mean).exp()


class GeometricTransform(Transform):
    def __init__(self, mean):
        self.mean = float(mean)
        self.a = self.mean / (1.0 + self.mean)

    def jet(self, z):
        return (1.0 - self.a) / (1.0 - z * self.a)


class PowerTransform(Transform):
    def __init__(self, k):
        self.k = int(k)
        self.mean = float(k)

    def jet(self, z):
        return z ** self.k


class PolynomialTransform(Transform):
    def __init__(self, weights):
        self.weights = np.asarray(weights, dtype=float)
        self.mean = float(np.dot(np.arange(len(self.weights)), self.weights))

    def jet(self, z):
        return horner(self.weights, z)


class BlockedTransform(Transform):
    """Arrivals counted from the first turning vehicle of the slot.

    With ``w = 1 - p`` the closed form is
    ``Y(w) + p z (Y(z) - Y(w)) / (z - w)``; near ``z = w`` the difference
    quotient is replaced by its Taylor series around ``w``.
    """

    SERIES_RADIUS = 1e-4
    SERIES_TERMS = 14

    def __init__(self, base: Transform, p: float):
        self.base = base
        self.p = float(p)
        self.w = 1.0 - self.p
        self.y_w = complex(base(self.w))
        self._taylor = None
        self.mean = float(self.jet(Jet.variable(1.0, 1)).c[1].real)

    def _series_coeffs(self, n):
        # Taylor coefficients of (Y(z) - Y(w)) / (z - w) around w
        if self._taylor is None or len(self._taylor) < n:
            self._taylor = self.base.jet(Jet.variable(self.w, n)).c[1:]
        return self._taylor[:n]

    def _quotient(self, z):
        zc = z.c[0]
        near = np.abs(zc - self.w) < self.SERIES_RADIUS
        safe = Jet(z.c.copy())
        safe.c[0] = np.where(near, self.w + 1.0, zc)
        closed = (self.base.jet(safe) - self.y_w) / (safe - self.w)
        if not np.any(near):
            return closed
        series = horner(self._series_coeffs(self.SERIES_TERMS + z.order), z - self.w)
        mask = near.reshape((1,) + near.shape)
        return Jet(np.where(mask, series.c, closed.c))

    def jet(self, z):
        return self.y_w + z * self._quotient(z) * self.p


def arrival_pgf(spec):
    """Generating function of an arrival law; closed forms where available."""
    if spec.kind == "poisson":
        return ConstantTransform(1.0) if spec.value == 0 else PoissonTransform(spec.value)
    if spec.kind == "geometric":
        return ConstantTransform(1.0) if spec.value == 0 else GeometricTransform(spec.value)
    if spec.kind == "deterministic":
        return PowerTransform(spec.value)
    return PolynomialTransform(spec.pmf.weights)


def blocked_arrival_transform(spec, p):
    """PGF of the arrivals held behind a blockage that starts on an empty queue."""
    if p == 0:
        return ConstantTransform(1.0)
    base = arrival_pgf(spec)
    if p == 1:
        return base
    return BlockedTransform(base, p)


def blocked_pmf_from(base: Pmf, p):
    """Coefficient form: P(Yb=0) = sum_j P(Y=j)(1-p)^j and, for k >= 1,
    P(Yb=k) = p sum_{j>=k} P(Y=j)(1-p)^(j-k)."""
    y = base.weights
    if p == 0:
        return Pmf([1.0], 0.0)
    if p == 1:
        return Pmf(y.copy(), base.tail_eps)
    w = 1.0 - p
    tail = np.zeros(len(y) + 1)
    for k in range(len(y) - 1, -1, -1):
        tail[k] = y[k] + w * tail[k + 1]
    out = p * tail[: len(y)]
    out[0] = float(np.dot(y, w ** np.arange(len(y))))
    return Pmf(out, base.tail_eps)


def blocked_arrival_pmf(spec, p, eps=DEFAULT_EPS):
    return blocked_pmf_from(arrival_pmf(spec, eps), p)


# ----------------------------------------------------------------------
# configuration


def _broadcast(value, n, name):
    if np.isscalar(value):
        return tuple(float(value) for _ in range(n))
    out = tuple(float(v) for v in value)
    return out


@dataclass(frozen=True)
class ModelConfig:
    """User-facing lane-group description (not yet validated)."""

    g1: int
    g2: int
    r: int
    m: int = 1
    p: tuple = ()
    q: tuple = ()
    arrivals: tuple = ()
    blocked_arrivals_override: Optional[tuple] = None

    @property
    def c(self):
        return self.g1 + self.g2 + self.r

    @classmethod
    def build(cls, g1, g2, r, m=1, p=0.0, q=1.0, arrivals=0.0, blocked_arrivals=None):
        """Convenience constructor; scalars broadcast over slots.

        ``arrivals`` may be a mean (Poisson in every slot), a single
        :class:`ArrivalSpec`, or a per-slot sequence of either.
        """
        c = g1 + g2 + r
        if isinstance(arrivals, ArrivalSpec):
            arr = tuple(arrivals for _ in range(c))
        elif np.isscalar(arrivals):
            arr = tuple(ArrivalSpec.poisson(arrivals) for _ in range(c))
        else:
            arr = tuple(a if isinstance(a, ArrivalSpec) else ArrivalSpec.poisson(a) for a in arrivals)
        override = None
        if blocked_arrivals is not None:
            override = tuple(b if isinstance(b, Pmf) else Pmf(b) for b in blocked_arrivals)
        return cls(int(g1), int(g2), int(r), int(m), _broadcast(p, g1, "p"),
                   _broadcast(q, g1, "q"), arr, override)

    def replace(self, **changes):
        """Rebuild with some fields changed, re-broadcasting scalars."""
        d = dict(g1=self.g1, g2=self.g2, r=self.r, m=self.m, p=self.p, q=self.q,
                 arrivals=self.arrivals, blocked_arrivals=self.blocked_arrivals_override)
        d.update(changes)
        return ModelConfig.build(**d)

    # JSON schema ------------------------------------------------------
    def to_dict(self):
        d = {"g1": self.g1, "g2": self.g2, "r": self.r, "m": self.m,
             "p": list(self.p), "q": list(self.q),
             "arrivals": [a.to_dict() for a in self.arrivals]}
        if self.blocked_arrivals_override is not None:
            d["blocked_arrivals"] = [list(map(float, b.weights)) for b in self.blocked_arrivals_override]
        return d

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - _CONFIG_KEYS
        missing = {"g1", "g2", "r"} - set(d)
        problems = []
        if unknown:
            problems.append(("UnknownKey", f"unknown config keys {sorted(unknown)}"))
        if missing:
            problems.append(("MissingKey", f"missing config keys {sorted(missing)}"))
        if problems:
            raise ConfigError(problems)
        g1, g2, r = int(d["g1"]), int(d["g2"]), int(d["r"])
        arr = d.get("arrivals", 0.0)
        if isinstance(arr, dict):
            arr = ArrivalSpec.from_dict(arr)
        elif not np.isscalar(arr):
            arr = [ArrivalSpec.from_dict(a) for a in arr]
        return cls.build(g1, g2, r, m=int(d.get("m", 1)), p=d.get("p", 0.0), q=d.get("q", 1.0),
                         arrivals=arr, blocked_arrivals=d.get("blocked_arrivals"))


def load_config(path):
    with open(path) as fh:
        return ModelConfig.from_dict(json.load(fh))


@dataclass(frozen=True, eq=False)
class ValidatedModel:
    """A checked configuration with materialized per-slot laws.

    ``arrival_pmfs``/``arrival_tfs`` are indexed 0..c-1 for slots 1..c;
    ``blocked_pmfs``/``blocked_tfs`` are indexed 0..g1-1.
    """

    config: ModelConfig
    arrival_pmfs: tuple
    arrival_tfs: tuple
    blocked_pmfs: tuple
    blocked_tfs: tuple
    eps: float = DEFAULT_EPS

    g1 = property(lambda self: self.config.g1)
    g2 = property(lambda self: self.config.g2)
    r = property(lambda self: self.config.r)
    m = property(lambda self: self.config.m)
    c = property(lambda self: self.config.c)
    g = property(lambda self: self.config.g1 + self.config.g2)
    p = property(lambda self: np.asarray(self.config.p, dtype=float))
    q = property(lambda self: np.asarray(self.config.q, dtype=float))

    @property
    def means(self):
        """E[Y_i] for slots 1..c."""
        return np.array([a.mean for a in self.config.arrivals])

    @property
    def load(self):
        """Mean arrivals per cycle."""
        return float(self.means.sum())

    def Y(self, i):
        return self.arrival_tfs[i - 1]

    def Yb(self, i):
        return self.blocked_tfs[i - 1]


def validate_config(raw: ModelConfig, eps=DEFAULT_EPS) -> ValidatedModel:
    """Check every invariant of ``raw``; raise one ConfigError listing all failures."""
    v = []
    if raw.g2 < 1:
        v.append(("G2Zero", f"g2 must be >= 1, got {raw.g2}"))
    if raw.g1 < 0 or raw.r < 0:
        v.append(("NegativeDuration", "g1 and r must be >= 0"))
    if raw.m < 1:
        v.append(("BadLaneCount", f"m must be >= 1, got {raw.m}"))
    g1 = max(raw.g1, 0)
    for name in ("p", "q"):
        vec = getattr(raw, name)
        if len(vec) != g1:
            v.append(("LengthMismatch", f"{name} has length {len(vec)}, expected g1={g1}"))
        if any(not (0.0 <= x <= 1.0) for x in vec):
            v.append(("ProbabilityRange", f"{name} entries must lie in [0, 1]"))
    if len(raw.arrivals) != raw.c:
        v.append(("LengthMismatch", f"arrivals has length {len(raw.arrivals)}, expected c={raw.c}"))
    for i, a in enumerate(raw.arrivals, start=1):
        v.extend((code, f"slot {i}: {msg}") for code, msg in a.problems())
    override = raw.blocked_arrivals_override
    if override is not None:
        if len(override) != g1:
            v.append(("LengthMismatch", f"blocked_arrivals has length {len(override)}, expected g1={g1}"))
        for i, b in enumerate(override, start=1):
            v.extend(("MalformedPmf", f"blocked_arrivals[{i}]: {msg}") for msg in check_pmf(b.weights))
    elif raw.m > 1 and any(0.0 < x < 1.0 for x in raw.p):
        v.append(("MixedBatchUnsupported",
                  "m > 1 with turning probabilities outside {0, 1} needs explicit blocked_arrivals"))
    if v:
        raise ConfigError(v)

    pmfs = tuple(arrival_pmf(a, eps) for a in raw.arrivals)
    tfs = tuple(arrival_pgf(a) for a in raw.arrivals)
    if override is not None:
        bpmfs = tuple(Pmf(b.weights.copy()) for b in override)
        btfs = tuple(PolynomialTransform(b.weights) for b in override)
    else:
        bpmfs = tuple(blocked_pmf_from(pmfs[i], raw.p[i]) for i in range(g1))
        btfs = tuple(blocked_arrival_transform(raw.arrivals[i], raw.p[i]) for i in range(g1))
    return ValidatedModel(raw, pmfs, tfs, bpmfs, btfs, eps)
