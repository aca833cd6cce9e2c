"""Monte Carlo simulation of the blocked fixed-cycle queue.

Runs are simulated side by side as numpy vectors.  Run ``k`` draws all of
its randomness from ``Generator(PCG64(seed).jumped(k))``, so results do not
depend on how many runs are simulated together.

Two semantics are offered for a queue that is empty when a blockage
starts.  ``"listing"`` (the default) follows the reference simulation: a
turning head batch plus crossing pedestrians blocks the lane and all of
the slot's arrivals join the queue, even if there are none.  ``"analytic"``
instead holds back only the vehicles from the first turning arrival on,
which is the law used by the generating-function and chain solvers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

SEMANTICS = ("listing", "analytic")
CHUNK_CYCLES = 1000


@dataclass
class SimReport:
    per_slot_mean: np.ndarray   # (c,)
    per_slot_ci: np.ndarray     # (c, 2)
    overflow_mean: float
    overflow_ci: tuple
    runs: int
    cycles_per_run: int
    seed: int
    semantics: str
    run_means: np.ndarray       # (runs, c)

    def brackets(self, values):
        """Boolean mask of slots whose CI contains the given value."""
        v = np.asarray(values)
        return (self.per_slot_ci[:, 0] <= v) & (v <= self.per_slot_ci[:, 1])

    def to_dict(self):
        return {
            "per_slot_mean": [float(x) for x in self.per_slot_mean],
            "per_slot_ci": [[float(a), float(b)] for a, b in self.per_slot_ci],
            "overflow_mean": self.overflow_mean,
            "overflow_ci": [float(x) for x in self.overflow_ci],
            "runs": self.runs,
            "cycles_per_run": self.cycles_per_run,
            "seed": self.seed,
            "semantics": self.semantics,
        }


def _sample_arrivals(rng, spec, size):
    if spec.kind == "poisson":
        return rng.poisson(spec.value, size)
    if spec.kind == "geometric":
        if spec.value == 0:
            return np.zeros(size, dtype=np.int64)
        return rng.geometric(1.0 / (1.0 + spec.value), size) - 1
    if spec.kind == "deterministic":
        return np.full(size, int(spec.value), dtype=np.int64)
    w = spec.pmf.weights
    return rng.choice(len(w), size=size, p=w / w.sum())


def _draw_chunk(rng, model, n):
    """Arrivals, crossing and turning indicators for n cycles of one run."""
    c, g1 = model.c, model.g1
    arrivals = np.empty((n, c), dtype=np.int64)
    for j, spec in enumerate(model.config.arrivals):
        arrivals[:, j] = _sample_arrivals(rng, spec, n)
    u = rng.random((n, g1, 3))
    cross = u[..., 0] < model.q
    turn = u[..., 1] < model.p
    return arrivals, cross, turn, u[..., 2]


def _blocked_from_empty(model, j, arrivals, uniform):
    """Vehicles held back when a blockage starts on an empty queue."""
    override = model.config.blocked_arrivals_override
    if override is not None:
        cdf = np.cumsum(override[j].weights)
        return np.minimum(np.searchsorted(cdf, uniform * cdf[-1], side="right"), len(cdf) - 1)
    p = model.p[j]
    if p == 0:
        return np.zeros_like(arrivals)
    if p == 1:
        return arrivals
    # non-turning vehicles ahead of the first turning one pass through
    ahead = np.floor(np.log1p(-uniform) / np.log1p(-p)).astype(np.int64)
    return np.maximum(arrivals - ahead, 0)


def simulate(model, ncycles=10_000, nruns=100, seed=0, semantics="listing", warmup=0):
    """Simulate ``nruns`` independent runs of ``ncycles`` cycles each.

    Per-slot means are averaged within each run; confidence intervals use
    the t-distribution over the run means.
    """
    if semantics not in SEMANTICS:
        raise ValueError(f"semantics must be one of {SEMANTICS}")
    if ncycles < 100 or nruns < 2:
        raise ValueError("need ncycles >= 100 and nruns >= 2")
    c, g1, g, m = model.c, model.g1, model.g1 + model.g2, model.m
    rngs = [np.random.Generator(np.random.PCG64(seed).jumped(k)) for k in range(nruns)]
    X = np.zeros(nruns, dtype=np.int64)
    blocked = np.zeros(nruns, dtype=bool)
    sums = np.zeros((nruns, c))
    total = warmup + ncycles
    done = 0
    while done < total:
        n = min(CHUNK_CYCLES, total - done)
        chunks = [_draw_chunk(rng, model, n) for rng in rngs]
        arr = np.stack([ch[0] for ch in chunks], axis=1)      # (n, runs, c)
        cross = np.stack([ch[1] for ch in chunks], axis=1)    # (n, runs, g1)
        turn = np.stack([ch[2] for ch in chunks], axis=1)
        unif = np.stack([ch[3] for ch in chunks], axis=1)
        for t in range(n):
            record = done + t >= warmup
            for j in range(c):
                y = arr[t, :, j]
                if j < g1:
                    cr = cross[t, :, j]
                    stay = blocked & cr
                    start = ~blocked & turn[t, :, j] & cr
                    if semantics == "analytic":
                        empty = ~blocked & (X == 0)
                        start = start & ~empty
                        held = _blocked_from_empty(model, j, y, unif[t, :, j])
                        from_empty = empty & cr & (held > 0)
                        X = np.where(from_empty, held, X)
                    else:
                        from_empty = np.zeros(nruns, dtype=bool)
                    X = np.where(stay | start, X + y, X)
                    blocked = stay | start | from_empty
                    serve = ~blocked
                elif j < g:
                    blocked[:] = False
                    serve = np.ones(nruns, dtype=bool)
                else:
                    X = X + y
                    serve = None
                if serve is not None:
                    X = np.where(serve, np.where(X < m, 0, X + y - m), X)
                if record:
                    sums[:, j] += X
        done += n
    run_means = sums / ncycles
    mean = run_means.mean(axis=0)
    sd = run_means.std(axis=0, ddof=1)
    half = stats.t.ppf(0.975, nruns - 1) * sd / np.sqrt(nruns)
    ci = np.column_stack([mean - half, mean + half])
    return SimReport(mean, ci, float(mean[g - 1]), (float(ci[g - 1, 0]), float(ci[g - 1, 1])),
                     nruns, ncycles, int(seed), semantics, run_means)
