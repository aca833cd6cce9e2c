"""Linear system for the unknown boundary probabilities and the solved model."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..capacity import reward_recursion
from ..errors import SingularSystem, UnknownOutOfRange, Unstable
from ..jet import Jet
from .forms import UnknownIndex, clearing_power, propagate_forms
from .roots import RootSet, find_roots

COND_LIMIT = 1e12
RANGE_TOL = 1e-6


def _numerator_rows(model, index, z0, order):
    """Taylor coefficients 0..order of B(z) around z0, shape (order+1, n)."""
    forms = propagate_forms(model, Jet.variable(np.array([z0]), order), index)
    return forms[model.g1 + model.g2].total.c[:, 0, 1:]


def _split(rows, z0):
    out = [rows.real]
    if abs(z0.imag) > 1e-12:
        out.append(rows.imag)
    return out


def _root_rows(model, index, roots: RootSet):
    rows = []
    for z0, mult in zip(roots.roots, roots.multiplicity):
        if z0 == 1.0:
            # derivative rows only, if the root at 1 were ever repeated
            if mult > 1:
                coef = _numerator_rows(model, index, z0, mult - 1)[1:mult]
                rows += _split(coef, z0)
            continue
        rows += _split(_numerator_rows(model, index, z0, mult - 1), z0)
    return np.vstack(rows) if rows else np.zeros((0, len(index)))


def _normalization_row(model, index):
    """X_g(1) = 1: B'(1) . c = K - A'(1)."""
    forms = propagate_forms(model, Jet.variable(np.array([1.0]), 1), index)
    end = forms[model.g1 + model.g2].total.c[1, 0]
    return end[1:].real, clearing_power(model) - end[0].real


def _boundary_rows(model, index):
    """Blocked-state probabilities P(X_i = k, S = b) for 1 <= k <= m-1."""
    m, g1, c = model.m, model.g1, model.c
    rows, rhs = [], []
    for i in range(1, g1 + 1):
        p, q = model.p[i - 1], model.q[i - 1]
        y = model.arrival_pmfs[i - 1]
        yb = model.blocked_pmfs[i - 1]
        if i == 1:
            from_u, from_b = ("x", c), None
        else:
            from_u, from_b = ("u", i - 1), ("b", i - 1)
        for k in range(1, m):
            row = np.zeros(len(index))
            row[index.position(("b", i, k))] = 1.0
            for l in range(1, k + 1):
                row[index.position((from_u[0], from_u[1], l))] -= p * q * y[k - l]
                if from_b:
                    row[index.position((from_b[0], from_b[1], l))] -= q * y[k - l]
            row[index.position((from_u[0], from_u[1], 0))] -= q * yb[k]
            rows.append(row)
            rhs.append(0.0)
    return rows, rhs


def _origin_rows(model, index):
    """Rows read off the Taylor expansion at 0 wherever X_g drops out.

    If the X_g multiplier of slot i vanishes to order j, then the j-th
    Taylor coefficient of z**k_i X_i(z) depends on the unknowns only; it
    must be 0 for j < k_i and P(X_i = j - k_i) otherwise.  These rows are
    implied by the root rows in the generic case and supply the missing
    information when the denominator and numerator share a zero at 0.
    """
    g, m = model.g1 + model.g2, model.m
    order = clearing_power(model) + m - 1
    forms = propagate_forms(model, Jet.variable(np.array([0.0]), order), index)
    rows = []
    for i in range(1, g + 1):
        f = forms[i]
        parts = ("u", "b") if i <= model.g1 else ("x",)
        for part in parts:
            jet = f.part({"u": "u", "b": "b", "x": "total"}[part]).c[:, 0, :]
            mult = jet[:, 0]
            nz = np.nonzero(mult != 0)[0]
            limit = min(nz[0] if len(nz) else order + 1, f.k + m)
            for j in range(limit):
                row = jet[j, 1:].real.copy()
                if j >= f.k:
                    l = j - f.k
                    if part == "b" and l == 0:
                        pass
                    else:
                        pos = index.position((part, i, l))
                        if pos is None:
                            continue
                        row[pos] -= 1.0
                if np.abs(row).max() > 1e-14:
                    rows.append(row)
    return rows


def assemble_system(model, roots: RootSet, index: Optional[UnknownIndex] = None):
    """Stack root, normalization, boundary and origin rows; returns (M, rhs, kinds)."""
    if index is None:
        index = UnknownIndex.for_model(model)
    blocks, rhs, kinds = [], [], []
    root_rows = _root_rows(model, index, roots)
    blocks.append(root_rows)
    rhs += [0.0] * len(root_rows)
    kinds += ["root"] * len(root_rows)
    norm_row, norm_rhs = _normalization_row(model, index)
    blocks.append(norm_row[None, :])
    rhs.append(norm_rhs)
    kinds.append("normalization")
    b_rows, b_rhs = _boundary_rows(model, index)
    if b_rows:
        blocks.append(np.vstack(b_rows))
        rhs += b_rhs
        kinds += ["boundary"] * len(b_rows)
    o_rows = _origin_rows(model, index)
    if o_rows:
        blocks.append(np.vstack(o_rows))
        rhs += [0.0] * len(o_rows)
        kinds += ["origin"] * len(o_rows)
    return np.vstack(blocks), np.array(rhs), kinds


def solve_system(M, rhs):
    """Least-squares solve of the (possibly overdetermined) row-scaled system."""
    norms = np.linalg.norm(M, axis=1)
    keep = norms > 0
    A = M[keep] / norms[keep, None]
    b = rhs[keep] / norms[keep]
    sv = np.linalg.svd(A, compute_uv=False)
    n = A.shape[1]
    if len(sv) < n or sv[n - 1] == 0:
        raise SingularSystem("boundary system is rank deficient", rows=A.shape[0], unknowns=n)
    cond = sv[0] / sv[n - 1]
    if cond > COND_LIMIT:
        raise SingularSystem(f"condition estimate {cond:.3g} exceeds {COND_LIMIT:g}", cond=cond)
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    residual = float(np.abs(A @ x - b).max())
    return x, residual, float(cond)


@dataclass
class SolvedModel:
    model: object
    index: UnknownIndex
    roots: RootSet
    unknowns: np.ndarray
    residual: float
    cond: float
    trivial: bool = False
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def K(self):
        return clearing_power(self.model)

    @property
    def overflow_slot(self):
        return self.model.g1 + self.model.g2

    def unknown_table(self):
        return dict(zip(self.index.label_strings(), map(float, self.unknowns)))

    # evaluation -------------------------------------------------------
    def _overflow(self, z: Jet, forms):
        """X_g as a jet; uses the quotient of shifted jets at z = 1."""
        end = forms[self.overflow_slot].total
        num = Jet(end.c[..., 1:] @ self.unknowns)
        den = z ** self.K - Jet(end.c[..., 0])
        if self.trivial:
            return Jet.constant(1.0, z.order, z.shape)
        at_one = np.isclose(z.c[0], 1.0, rtol=0, atol=1e-14)
        if np.any(at_one):
            if not np.all(at_one):
                raise ValueError("evaluate z = 1 separately from other points")
            return num.shift() / den.shift()
        return num / den

    def slot_jets(self, z: Jet, slots=None, parts=("total",)):
        """Jets of X_i (or its u/b partial PGFs) for every requested slot.

        At z = 1 the returned jets have one order less than ``z``.
        """
        forms = propagate_forms(self.model, z, self.index)
        xg = self._overflow(z, forms)
        order = xg.order
        zt = z.truncate(order)
        out = {}
        for i in slots or range(1, self.model.c + 1):
            f = forms[i]
            inv = (zt ** f.k).reciprocal() if f.k else None
            for part in parts:
                form = f.part(part) if i <= self.model.g1 else (f.total if part == "total" else None)
                if form is None:
                    continue
                c = form.c[: order + 1]
                val = Jet(c[..., 0]) * xg + Jet(c[..., 1:] @ self.unknowns)
                out[(i, part)] = val * inv if inv is not None else val
        return out

    def pgf(self, i, z, part="total"):
        """Values of X_i(z) (or the u/b partial PGF) at complex points."""
        z = np.asarray(z, dtype=complex)
        if np.all(z == 1.0):
            jet = self.slot_jets(Jet.variable(z, 1), [i], (part,))[(i, part)]
            return jet.c[0]
        jet = self.slot_jets(Jet.variable(z, 0), [i], (part,))[(i, part)]
        return jet.c[0]

    def moments(self):
        """Per-slot (P(S=u), P(S=b), mean, variance) from jets at z = 1."""
        if "moments" not in self._cache:
            c = self.model.c
            parts = ("total", "u", "b")
            jets = self.slot_jets(Jet.variable(np.array([1.0]), 3), parts=parts)
            mass = np.array([jets[(i, "total")].c[0, 0].real for i in range(1, c + 1)])
            d1 = np.array([jets[(i, "total")].c[1, 0].real for i in range(1, c + 1)])
            d2 = np.array([jets[(i, "total")].c[2, 0].real for i in range(1, c + 1)])
            pu = np.array([jets[(i, "u")].c[0, 0].real if (i, "u") in jets else mass[i - 1]
                           for i in range(1, c + 1)])
            self._cache["moments"] = {
                "mass": mass,
                "mean": d1,
                "variance": 2 * d2 + d1 - d1 ** 2,
                "unblocked_mass": pu,
            }
        return self._cache["moments"]

    @property
    def means(self):
        return self.moments()["mean"]

    def to_dict(self):
        return {
            "unknowns": self.unknown_table(),
            "roots": self.roots.to_dict(),
            "residual": self.residual,
            "condition": self.cond,
        }


def _trivial_unknowns(index):
    return np.array([1.0 if lab[0] in ("u", "x") and lab[2] == 0 else 0.0 for lab in index.labels])


def solve(model) -> SolvedModel:
    """Roots, boundary system and solved unknowns for a stable model."""
    report = reward_recursion(model)
    if not report.stable:
        raise Unstable("arrival load is not below capacity", r0=report.r0,
                       arrival_load=report.arrival_load)
    index = UnknownIndex.for_model(model)
    if model.load == 0:
        roots = RootSet(np.array([1.0 + 0j]), np.array([1]), 0, "none")
        return SolvedModel(model, index, roots, _trivial_unknowns(index), 0.0, 1.0, trivial=True)
    roots = find_roots(model)
    M, rhs, _ = assemble_system(model, roots, index)
    x, residual, cond = solve_system(M, rhs)
    low, high = x.min(), x.max()
    if low < -RANGE_TOL or high > 1 + RANGE_TOL:
        raise UnknownOutOfRange(
            f"solved probabilities span [{low:.3g}, {high:.3g}]", low=float(low), high=float(high))
    x = np.clip(x, 0.0, 1.0)
    return SolvedModel(model, index, roots, x, residual, cond)
