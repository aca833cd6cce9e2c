"""Parameter sweeps: one configuration per point, one output row per point."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .capacity import (ServiceCounts, hcm_shared_lane_capacity, reward_recursion)
from .engines import EngineOptions, run_engine
from .errors import BfctlError
from .model import ArrivalSpec, ModelConfig, validate_config

SCHEMA_VERSION = 1
WORKERS_ENV = "BFCTL_WORKERS"
PARAMS = ("p", "q", "arrivals.mean", "m", "g1", "g2", "r", "rho")


def parse_range(text):
    """``"a:b:n"`` gives n evenly spaced values from a to b; ``"x,y,z"`` a list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range {text!r} must look like start:stop:steps")
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
        if n < 1:
            raise ValueError("steps must be at least 1")
        return [round(float(v), 12) for v in np.linspace(a, b, n)] if n > 1 else [a]
    return [float(v) for v in text.split(",") if v.strip()]


@dataclass(frozen=True)
class SweepSpec:
    """A parameter path and the values it takes.

    ``rho`` is derived rather than stored: the point sets a uniform Poisson
    rate so that mean arrivals per cycle equal ``rho`` times capacity.
    """

    param: str
    values: tuple

    def __post_init__(self):
        if self.param not in PARAMS:
            raise ValueError(f"unknown sweep parameter {self.param!r}; choose from {PARAMS}")

    @classmethod
    def parse(cls, text):
        if "=" not in text:
            raise ValueError(f"sweep {text!r} must look like param=range")
        name, rng = text.split("=", 1)
        return cls(name.strip(), tuple(parse_range(rng)))

    def configure(self, base: ModelConfig, value):
        """Configuration for one point; may raise on an impossible point."""
        if self.param in ("p", "q"):
            return base.replace(**{self.param: value})
        if self.param == "arrivals.mean":
            return base.replace(arrivals=value)
        if self.param in ("m", "g1", "g2", "r"):
            if value != int(value):
                raise ValueError(f"{self.param} must be an integer, got {value}")
            changes = {self.param: int(value)}
            if self.param == "g1":
                # keep per-slot probabilities uniform at their first value
                changes["p"] = base.p[0] if base.p else 0.0
                changes["q"] = base.q[0] if base.q else 1.0
            if self.param != "m":
                changes["arrivals"] = base.arrivals[0].mean if base.arrivals else 0.0
            return base.replace(**changes)
        # rho
        probe = validate_config(base.replace(arrivals=ArrivalSpec.poisson(1.0)))
        cap = reward_recursion(probe).r0
        return base.replace(arrivals=value * cap / base.c)


def _point(task):
    index, engine, spec, base_dict, value, opts = task
    row = {"schema_version": SCHEMA_VERSION, "index": index, "param": spec.param, "value": value}
    try:
        cfg = spec.configure(ModelConfig.from_dict(base_dict), value)
        model = validate_config(cfg)
        res = run_engine(engine, model, opts)
    except (BfctlError, ValueError) as exc:
        code = getattr(exc, "code", type(exc).__name__)
        row.update(status="skipped", reason=f"{code}: {exc}")
        return row, None
    row.update(status="ok", reason="", mean_queue=res.mean_queue, mean_delay=res.mean_delay,
               overflow_mean=res.overflow_mean)
    for i, v in enumerate(res.slot_means, start=1):
        row[f"mean_{i}"] = float(v)
    return row, res


def worker_count():
    raw = os.environ.get(WORKERS_ENV, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_sweep(engine, base: ModelConfig, spec: SweepSpec, opts: EngineOptions | None = None,
              cdf_max=None):
    """Rows (dicts) for every point, in sweep order.

    With ``cdf_max`` set, rows also carry ``cdf_0..cdf_<cdf_max>`` of the
    overflow queue when the engine produces distributions.
    """
    opts = opts or EngineOptions()
    base_dict = base.to_dict()
    tasks = [(k, engine, spec, base_dict, v, opts) for k, v in enumerate(spec.values)]
    workers = worker_count()
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_point, tasks))
    else:
        results = [_point(t) for t in tasks]
    rows = []
    for row, res in results:
        if cdf_max is not None and res is not None and res.slot_pmfs is not None:
            for n, v in enumerate(res.overflow_cdf(cdf_max)):
                row[f"cdf_{n}"] = float(v)
        rows.append(row)
    return rows


def sweep_configs(base: ModelConfig, spec: SweepSpec):
    """Configurations of every point (or the reason it was skipped)."""
    out = []
    for k, v in enumerate(spec.values):
        try:
            cfg = spec.configure(base, v)
            validate_config(cfg)
            out.append({"index": k, "value": v, "config": cfg.to_dict()})
        except (BfctlError, ValueError) as exc:
            out.append({"index": k, "value": v, "skipped": str(exc)})
    return out


def cdf_table(rows, cdf_max):
    """Pivot per-point overflow CDFs into one column per sweep value."""
    ok = [r for r in rows if r.get("status") == "ok" and "cdf_0" in r]
    table = []
    for n in range(cdf_max + 1):
        line = {"schema_version": SCHEMA_VERSION, "n": n}
        for r in ok:
            line[f"{r['param']}={r['value']:g}"] = r[f"cdf_{n}"]
        table.append(line)
    return table


# shared-lane capacity versus the HCM formula --------------------------------

def crossing_pattern(total, g1, kind):
    """Crossing probabilities for g1 slots adding up to ``total``.

    ``uniform`` spreads the mass evenly; ``step`` packs it into the first
    slots (certain crossings, then a remainder, then none).
    """
    if total < -1e-12 or total > g1 + 1e-12:
        raise ValueError(f"crossing total {total:g} outside [0, {g1}]")
    total = min(max(total, 0.0), float(g1))
    if kind == "uniform":
        return np.full(g1, total / g1 if g1 else 0.0)
    if kind == "step":
        q = np.zeros(g1)
        full = int(np.floor(total))
        q[:full] = 1.0
        if full < g1:
            q[full] = total - full
        return q
    raise ValueError(f"unknown crossing pattern {kind!r}")


def hcm_rows(g1, g2, s_th, P_r, E_R, f_values, m_turn=1.0, m_through=2.0):
    """Shared-lane capacity per cycle from the HCM formula and the reward
    recursion, the latter with uniform and stepped crossing patterns.

    The pedestrian factor ``f`` is read as the fraction of green left after
    blockages, so crossings add up to ``(1 - f)(g1 + g2)``.
    """
    rows = []
    for k, f in enumerate(f_values):
        row = {"schema_version": SCHEMA_VERSION, "index": k, "f_Rpb": float(f)}
        try:
            row["hcm"] = hcm_shared_lane_capacity(s_th, P_r, E_R, f)
        except BfctlError as exc:
            row.update(status="skipped", reason=f"{exc.code}: {exc}")
            rows.append(row)
            continue
        total = (1.0 - f) * (g1 + g2)
        try:
            for kind in ("uniform", "step"):
                cfg = ModelConfig.build(g1, g2, 0, m=1, p=P_r, q=crossing_pattern(total, g1, kind))
                model = validate_config(cfg)
                service = ServiceCounts.turning_corrected(model, m_turn, m_through)
                row[f"bfctl_{kind}"] = reward_recursion(model, service).r0
        except (BfctlError, ValueError) as exc:
            row.pop("bfctl_uniform", None)
            row.update(status="skipped", reason=str(exc))
            rows.append(row)
            continue
        row.update(status="ok", reason="")
        rows.append(row)
    return rows
