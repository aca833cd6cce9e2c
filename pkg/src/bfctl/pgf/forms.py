"""Cycle propagation of the per-slot generating functions as linear forms.

Every slot generating function is written as

    z**k_i * X_i(z) = mult_i(z) * X_g(z) + coeffs_i(z) . c

where ``X_g`` is the queue at the end of green (slot g = g1 + g2), ``c``
is the vector of unknown boundary probabilities and ``k_i`` is a clearing
power that keeps every coefficient analytic (``k_i = m*i`` for green slots,
0 for red ones).  Going once around the cycle gives

    z**K * X_g(z) = A(z) X_g(z) + B(z) . c,    K = m * g,

so ``X_g = B.c / (z**K - A)``.  All coefficients are carried as jets so
values, derivatives and Taylor coefficients come out of the same code.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import EvalDomain
from ..jet import Jet


@dataclass(frozen=True)
class UnknownIndex:
    """Catalogue of unknown boundary probabilities.

    Labels are ``("u", i, l)`` / ``("b", i, l)`` for P(X_i = l, S = u/b) in
    blockable slots and ``("x", i, l)`` for P(X_i = l) elsewhere.
    """

    labels: tuple

    def __post_init__(self):
        object.__setattr__(self, "_pos", {lab: j for j, lab in enumerate(self.labels)})

    @classmethod
    def for_model(cls, model):
        g1, g2, m, c = model.g1, model.g2, model.m, model.c
        labels = []
        for i in range(1, g1 + 1):
            labels += [("u", i, l) for l in range(m)]
            labels += [("b", i, l) for l in range(1, m)]
        for i in list(range(g1 + 1, g1 + g2)) + [c]:
            labels += [("x", i, l) for l in range(m)]
        return cls(tuple(labels))

    def __len__(self):
        return len(self.labels)

    def __contains__(self, label):
        return label in self._pos

    def position(self, label) -> Optional[int]:
        return self._pos.get(label)

    def label_strings(self):
        return [f"P(X{i}={l},{s})" if s != "x" else f"P(X{i}={l})" for s, i, l in self.labels]


@dataclass(frozen=True)
class LinearForm:
    """``const_term + coeffs . c + multiplier * X_g`` at one point."""

    const_term: complex
    coeffs: np.ndarray
    multiplier: complex

    def __add__(self, other):
        return LinearForm(self.const_term + other.const_term, self.coeffs + other.coeffs,
                          self.multiplier + other.multiplier)

    def scale(self, s):
        return LinearForm(self.const_term * s, self.coeffs * s, self.multiplier * s)

    def evaluate(self, overflow_value, unknowns):
        return self.const_term + self.coeffs @ unknowns + self.multiplier * overflow_value


@dataclass
class SlotForm:
    """Cleared form of one slot: jets of shape (order+1, *points, width).

    Column 0 is the X_g multiplier; columns 1.. are unknown coefficients
    (absent when propagated in self-only mode).
    """

    slot: int
    k: int
    total: Jet
    unblocked: Optional[Jet] = None
    blocked: Optional[Jet] = None

    def part(self, name):
        return {"total": self.total, "u": self.unblocked, "b": self.blocked}[name]


def _prev_labels(model, slot):
    """State tags used to read P(X_slot = l, S) from the catalogue."""
    return ("u", "b") if 1 <= slot <= model.g1 else ("x", None)


def propagate_forms(model, z: Jet, index: Optional[UnknownIndex] = None, self_only=False):
    """Propagate cleared forms through one cycle at the jet argument ``z``.

    Returns a list indexed by slot (entry 0 unused).  With ``self_only`` the
    unknown columns are dropped, which is all that is needed for the
    denominator and is much cheaper for high-order expansions.
    """
    g1, g2, m, c = model.g1, model.g2, model.m, model.c
    g = g1 + g2
    if index is None and not self_only:
        index = UnknownIndex.for_model(model)
    width = 1 if self_only else 1 + len(index)
    zz = Jet(z.c[..., None])
    powers = {0: Jet.constant(1.0, zz.order, zz.shape)}

    def zp(k):
        if k not in powers:
            powers[k] = zz ** k
        return powers[k]

    def add(form, label, term):
        if self_only:
            return
        j = index.position(label)
        if j is not None:
            form.c[..., 1 + j] += term.c[..., 0]

    arrivals = [None] + [model.Y(i)(zz) for i in range(1, c + 1)]
    forms = [None] * (c + 1)

    seed = np.zeros(zz.c.shape[:-1] + (width,), dtype=complex)
    seed[0, ..., 0] = 1.0
    cur = Jet(seed)
    for i in range(g + 1, c + 1):
        cur = cur * arrivals[i]
        forms[i] = SlotForm(i, 0, cur)

    prev_slot, prev_k = c, 0
    prev_u, prev_b = cur, None
    for i in range(1, g + 1):
        y = arrivals[i]
        k = prev_k + m
        tag_u, tag_b = _prev_labels(model, prev_slot)
        if i <= g1:
            p, q = model.p[i - 1], model.q[i - 1]
            pq = p * q
            into_b = prev_u * pq if prev_b is None else prev_u * pq + prev_b * q
            blocked = (zp(m) * into_b) * y
            stay_u = prev_u * (1.0 - pq) if prev_b is None else prev_u * (1.0 - pq) + prev_b * (1.0 - q)
            unblocked = stay_u * y
            if not self_only:
                yb = model.Yb(i)(zz)
                yb0 = complex(model.Yb(i)(0.0))
                add(blocked, (tag_u, prev_slot, 0), (yb - yb0 - y * p) * zp(k) * q)
                for l in range(1, m):
                    partial = zp(prev_k) * (zp(m) - y * zp(l))
                    add(unblocked, (tag_u, prev_slot, l), partial * (1.0 - pq))
                    if tag_b:
                        add(unblocked, (tag_b, prev_slot, l), partial * (1.0 - q))
                add(unblocked, (tag_u, prev_slot, 0),
                    zp(k) * (1.0 - q + q * yb0) - y * zp(prev_k) * (1.0 - pq))
            forms[i] = SlotForm(i, k, blocked + unblocked, unblocked, blocked)
            prev_u, prev_b = unblocked, blocked
        else:
            total = (prev_u if prev_b is None else prev_u + prev_b) * y
            if not self_only:
                for l in range(m):
                    partial = zp(prev_k) * (zp(m) - y * zp(l))
                    add(total, (tag_u, prev_slot, l), partial)
                    if tag_b and l >= 1:
                        add(total, (tag_b, prev_slot, l), partial)
            forms[i] = SlotForm(i, k, total)
            prev_u, prev_b = total, None
        prev_slot, prev_k = i, k
    return forms


def cycle_jets(model, z: Jet, index=None, self_only=False):
    """(A, B) jets of the cleared cycle relation at ``z``."""
    forms = propagate_forms(model, z, index, self_only)
    end = forms[model.g1 + model.g2].total
    return Jet(end.c[..., 0]), Jet(end.c[..., 1:]), forms


def clearing_power(model):
    return model.m * (model.g1 + model.g2)


def propagate_cycle(model, z, index=None):
    """Return ``(A, B)`` with ``X_g(z) = A(z) X_g(z) + B(z) . c`` at complex ``z``."""
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise EvalDomain("the cycle recursion divides by powers of z; z = 0 is excluded")
    a, b, _ = cycle_jets(model, Jet.variable(z, 0), index)
    scale = z ** clearing_power(model)
    return a.c[0] / scale, b.c[0] / scale[..., None]


def denominator(model, z):
    """Cleared denominator ``z**K - A(z)``; finite at z = 0."""
    z = np.asarray(z, dtype=complex)
    a, _, _ = cycle_jets(model, Jet.variable(z, 0), self_only=True)
    return z ** clearing_power(model) - a.c[0]


def denominator_jet(model, z: Jet) -> Jet:
    a, _, _ = cycle_jets(model, z, self_only=True)
    return z ** clearing_power(model) - a


def slot_forms_at(model, z, index=None):
    """Per-slot :class:`LinearForm` values (uncleared) at a nonzero point."""
    z = complex(z)
    if z == 0:
        raise EvalDomain("z = 0 is excluded")
    forms = propagate_forms(model, Jet.variable(z, 0), index)
    out = {}
    for f in forms[1:]:
        row = f.total.c[0] / z ** f.k
        out[f.slot] = LinearForm(0.0, row[1:], row[0])
    return out
