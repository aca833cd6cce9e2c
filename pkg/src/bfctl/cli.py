"""Command-line interface.

Exit codes:
  0  success
  1  unexpected error
  2  usage error (bad arguments)
  3  invalid configuration or scenario
  4  unstable or near-critical model
  5  numerical failure (roots, linear system, inversion, convergence)
  6  ``compare`` difference above ``--tol``

Errors are written to stdout as a JSON object with an ``error`` code.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from . import errors
from .capacity import ServiceCounts, hcm_shared_lane_capacity, reward_recursion
from .engines import ENGINES, EngineOptions, compare_results, run_engine
from .model import load_config, validate_config
from .scenarios import ALIASES, LAYOUTS, Scenario, evaluate_scenario
from .sweep import (SCHEMA_VERSION, SweepSpec, cdf_table, hcm_rows, parse_range, run_sweep,
                    sweep_configs)

EXIT_CODES = {
    errors.ConfigError: 3,
    errors.UnknownScenario: 3,
    errors.PreconditionUnmet: 3,
    errors.Unstable: 4,
    errors.NearCritical: 4,
    errors.EvalDomain: 5,
    errors.RootCountMismatch: 5,
    errors.SingularSystem: 5,
    errors.UnknownOutOfRange: 5,
    errors.InversionUnstable: 5,
    errors.NoConvergence: 5,
    errors.DivisionDomain: 5,
}
EXIT_TOLERANCE = 6


class _UsageError(Exception):
    pass


def _floats(text, n, name):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise _UsageError(f"{name} expects {n} comma-separated numbers") from None
    if len(vals) != n:
        raise _UsageError(f"{name} expects {n} comma-separated numbers")
    return vals


def _write(args, text):
    if getattr(args, "output", None):
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(obj):
    return json.dumps(obj, indent=2) + "\n"


def _csv(rows):
    if not rows:
        return ""
    fields = []
    for r in rows:
        fields.extend(k for k in r if k not in fields)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, restval="", lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _model(args):
    return validate_config(load_config(args.config))


def _options(args):
    return EngineOptions(
        n_max=getattr(args, "nmax", 50),
        truncation=getattr(args, "truncation", 200),
        cycles=getattr(args, "cycles", 10_000),
        runs=getattr(args, "runs", 100),
        seed=getattr(args, "seed", 0),
        semantics=getattr(args, "semantics", None),
    )


def _slot_rows(model, res):
    rows = []
    ci = res.extras.get("per_slot_ci")
    var = res.extras.get("slot_variances")
    for i, mean in enumerate(res.slot_means, start=1):
        phase = "blockable" if i <= model.g1 else ("green" if i <= model.g else "red")
        row = {"schema_version": SCHEMA_VERSION, "engine": res.engine, "slot": i,
               "phase": phase, "mean": float(mean)}
        if var is not None:
            row["variance"] = var[i - 1]
        if ci is not None:
            row["ci_low"], row["ci_high"] = ci[i - 1]
        rows.append(row)
    return rows


# subcommands ----------------------------------------------------------------

def cmd_capacity(args):
    service_args = _floats(args.service, 2, "--service") if args.service else None
    hcm = _floats(args.hcm, 4, "--hcm") if args.hcm else None
    if args.sweep:
        if hcm is None:
            raise _UsageError("--sweep needs --hcm s_th,P_r,E_R,f_Rpb")
        name, _, rng = args.sweep.partition("=")
        if name.strip() != "f_Rpb" or not rng:
            raise _UsageError("capacity --sweep must look like f_Rpb=start:stop:steps")
        cfg = load_config(args.config)
        m_turn, m_through = service_args or (1.0, 2.0)
        s_th, P_r, E_R, _ = hcm
        rows = hcm_rows(cfg.g1, cfg.g2, s_th, P_r, E_R, parse_range(rng), m_turn, m_through)
        _write(args, _csv(rows) if args.csv else _json({"schema_version": SCHEMA_VERSION,
                                                         "rows": rows}))
        return 0
    model = _model(args)
    service = ServiceCounts.turning_corrected(model, *service_args) if service_args else None
    out = {"schema_version": SCHEMA_VERSION, **reward_recursion(model, service).to_dict()}
    if hcm:
        out["hcm_capacity"] = hcm_shared_lane_capacity(*hcm)
    if args.csv:
        row = {k: v for k, v in out.items() if k != "per_state_rewards"}
        _write(args, _csv([row]))
    else:
        _write(args, _json(out))
    return 0


def _run_single(args, engine):
    model = _model(args)
    res = run_engine(engine, model, _options(args))
    if args.csv:
        _write(args, _csv(_slot_rows(model, res)))
    else:
        _write(args, _json({"schema_version": SCHEMA_VERSION, **res.to_dict()}))
    return 0


def cmd_solve(args):
    return _run_single(args, "solve")


def cmd_oracle(args):
    return _run_single(args, "oracle")


def cmd_simulate(args):
    return _run_single(args, "simulate")


def cmd_compare(args):
    model = _model(args)
    opts = _options(args)
    a = run_engine(args.engine_a, model, opts)
    b = run_engine(args.engine_b, model, opts)
    out = {"schema_version": SCHEMA_VERSION, **compare_results(a, b)}
    status = 0
    if args.tol is not None:
        worst = out["sup_distance"] if out["sup_distance"] is not None else out["max_abs_mean_diff"]
        out["tol"] = args.tol
        out["within_tol"] = bool(worst <= args.tol)
        status = 0 if out["within_tol"] else EXIT_TOLERANCE
    _write(args, _json(out))
    return status


def cmd_sweep(args):
    base = load_config(args.config)
    try:
        spec = SweepSpec.parse(args.param)
    except ValueError as exc:
        raise _UsageError(str(exc)) from None
    if args.dump_configs:
        _write(args, _json({"schema_version": SCHEMA_VERSION, "param": spec.param,
                            "points": sweep_configs(base, spec)}))
        return 0
    rows = run_sweep(args.engine, base, spec, _options(args), cdf_max=args.cdf)
    if args.cdf_wide:
        if args.cdf is None:
            raise _UsageError("--cdf-wide needs --cdf N")
        rows = cdf_table(rows, args.cdf)
    _write(args, _json({"schema_version": SCHEMA_VERSION, "rows": rows}) if args.json
           else _csv(rows))
    return 0


def cmd_scenario(args):
    timing = tuple(int(v) for v in _floats(args.timing, 3, "--timing")) if args.timing else None
    opts = _options(args)
    rows = []
    for layout in args.layout:
        for mu in parse_range(args.mu):
            sc = Scenario(layout, mu, timing)
            row = {"schema_version": SCHEMA_VERSION, "layout": layout, "mu": mu}
            try:
                res = evaluate_scenario(sc, args.engine, opts)
            except (errors.Unstable, errors.NearCritical) as exc:
                row.update(status="skipped", reason=f"{exc.code}: {exc}")
                rows.append(row)
                continue
            row.update(status="ok", reason="", layout=res["layout"],
                       total_mean_queue=res["total_mean_queue"],
                       total_overflow_mean=res["total_overflow_mean"])
            for j, lane in enumerate(res["lanes"], start=1):
                row[f"lane{j}_p"] = lane["p"]
                row[f"lane{j}_rate"] = lane["rate"]
                row[f"lane{j}_mean_queue"] = lane["mean_queue"]
            rows.append(row)
    _write(args, _json({"schema_version": SCHEMA_VERSION, "rows": rows}) if args.json
           else _csv(rows))
    return 0


# parser ---------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="bfctl",
        description="Queues at fixed-cycle traffic lights with pedestrian blocking.",
        epilog="exit codes: 0 ok, 1 unexpected, 2 usage, 3 config, 4 unstable, "
               "5 numerical, 6 compare tolerance exceeded",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, csv_flag=True):
        p.add_argument("-o", "--output", help="write to this file instead of stdout")
        if csv_flag:
            p.add_argument("--csv", action="store_true", help="emit CSV instead of JSON")

    def engine_flags(p):
        p.add_argument("--nmax", type=int, default=50, help="largest queue length in pmf output")
        p.add_argument("--truncation", type=int, default=200, help="oracle queue truncation L")
        p.add_argument("--cycles", type=int, default=10_000, help="simulated cycles per run")
        p.add_argument("--runs", type=int, default=100, help="independent simulation runs")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--semantics", choices=("analytic", "listing"),
                       help="blocking rule on an empty queue (oracle/simulate)")

    p = sub.add_parser("capacity", help="capacity and stability of a configuration")
    p.add_argument("config")
    p.add_argument("--hcm", metavar="S_TH,P_R,E_R,F_RPB", help="add the HCM shared-lane figure")
    p.add_argument("--service", metavar="M_TURN,M_THROUGH",
                   help="departures per slot for turning and through batches")
    p.add_argument("--sweep", metavar="f_Rpb=A:B:N", help="HCM comparison over f_Rpb")
    common(p)
    p.set_defaults(func=cmd_capacity)

    for name, func, text in (("solve", cmd_solve, "generating-function solution"),
                             ("oracle", cmd_oracle, "truncated Markov chain solution"),
                             ("simulate", cmd_simulate, "Monte Carlo simulation")):
        p = sub.add_parser(name, help=text)
        p.add_argument("config")
        engine_flags(p)
        common(p)
        p.set_defaults(func=func)

    p = sub.add_parser("compare", help="run two engines on one configuration and diff them")
    p.add_argument("engine_a", choices=ENGINES)
    p.add_argument("engine_b", choices=ENGINES)
    p.add_argument("config")
    p.add_argument("--tol", type=float, help="exit 6 if the pmf sup distance exceeds this")
    engine_flags(p)
    common(p, csv_flag=False)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="run an engine over a parameter range (CSV rows)")
    p.add_argument("engine", choices=ENGINES)
    p.add_argument("config")
    p.add_argument("--param", required=True,
                   help="PARAM=A:B:N or PARAM=x,y,z with PARAM in p, q, arrivals.mean, m, "
                        "g1, g2, r, rho")
    p.add_argument("--cdf", type=int, metavar="N", help="add overflow CDF columns 0..N")
    p.add_argument("--cdf-wide", action="store_true",
                   help="one row per queue length, one CDF column per sweep point")
    p.add_argument("--dump-configs", action="store_true",
                   help="print the configuration of every point instead of running")
    p.add_argument("--json", action="store_true", help="emit JSON instead of CSV")
    engine_flags(p)
    common(p, csv_flag=False)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("scenario", help="multi-lane layouts summed over independent lanes")
    p.add_argument("--layout", nargs="+", required=True,
                   choices=sorted(LAYOUTS) + sorted(ALIASES))
    p.add_argument("--mu", required=True, help="total rate per slot: A:B:N or x,y,z")
    p.add_argument("--timing", metavar="G1,G2,R", help="override the layout's signal timing")
    p.add_argument("--engine", choices=ENGINES, default="solve")
    p.add_argument("--json", action="store_true", help="emit JSON instead of CSV")
    engine_flags(p)
    common(p, csv_flag=False)
    p.set_defaults(func=cmd_scenario)
    return parser


def _fail(payload, code):
    sys.stdout.write(_json(payload))
    return code


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        return _fail({"error": "UsageError", "message": str(exc)}, 2)
    except errors.BfctlError as exc:
        code = next((c for cls, c in EXIT_CODES.items() if isinstance(exc, cls)), 1)
        return _fail(exc.to_dict(), code)
    except (OSError, json.JSONDecodeError) as exc:
        return _fail({"error": "ConfigError", "message": str(exc)}, 3)
    except ValueError as exc:
        return _fail({"error": "ValueError", "message": str(exc)}, 1)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
