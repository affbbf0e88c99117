"""Command-line front end.

Every subcommand is a thin wrapper over one library call.  Tables go out as
CSV (header first, ``#`` lines for comments and summaries), single results as
one JSON object.  Exit status: 0 ok, 2 bad usage or invalid input, 3 when the
truncated grid exceeds the cell budget.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import __version__
from ._grid import CELL_BUDGET_DEFAULT, CellBudgetExceeded
from .channel_core import (
    EPS_DEFAULT,
    STATE_LABELS,
    ChannelParams,
    DomainError,
    TimeAllocation,
)
from .detection import prob_correct_detection
from .info_metrics import INDIVIDUAL, JOINT, mi_derivative_at_zero, numerical_derivative_at_zero, vector_mutual_info
from .monte_carlo import McConfig, empirical_correct_rate
from .scheduler import (
    check_concavity_line,
    check_symmetry,
    sweep_intensity,
    sweep_prior,
    sweep_symmetry_line,
    sweep_ternary,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BUDGET = 3

DEFAULTS = {
    "lambda0": 10.0,
    "lambda1": 20.0,
    "prior": 0.25,
    "T": 1.0,
    "eps": EPS_DEFAULT,
    "cell_budget": CELL_BUDGET_DEFAULT,
    "format": None,
    "output": None,
    "threads": None,
    "alloc": None,
    "samples": 100_000,
    "seed": 0,
    "no_stratify": False,
    "sweep_points": None,
    "mode": "both",
    "h": 1e-6,
    "points": 100,
    "metric": None,
    "refine": False,
    "resolution": 20,
    "grid_n": 10,
    "lambda_max": 5.0,
    "quantity": "mi",
    "trials": 50,
}


class UsageError(Exception):
    pass


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % value
    if value is None:
        return ""
    return str(value)


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def _json(record) -> str:
    return json.dumps(_jsonable(record), allow_nan=True)


def _csv(header, rows, comments=(), footer=()) -> str:
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    for line in footer:
        buf.write(f"# {line}\n")
    return buf.getvalue()


def _float_list(text, n=None):
    try:
        values = [float(v) for v in str(text).split(",")]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}")
    if n is not None and len(values) != n:
        raise UsageError(f"expected {n} comma-separated numbers, got {text!r}")
    return values


def _parent_parser():
    parent = argparse.ArgumentParser(add_help=False)
    g = parent.add_argument_group("channel")
    g.add_argument("--lambda0", type=float, help="rate when a source bit is 0 (default 10)")
    g.add_argument("--lambda1", type=float, help="rate when a source bit is 1 (default 20)")
    g.add_argument("--prior", type=float, help="probability that a source bit is 1 (default 0.25)")
    g.add_argument("--T", type=float, help="total sensing time (default 1)")
    o = parent.add_argument_group("numerics and output")
    o.add_argument("--eps", type=float, help="pmf tail tolerance (default 2**-53)")
    o.add_argument("--cell-budget", type=int, help="largest truncated grid allowed (default 1e9)")
    o.add_argument("--format", choices=("csv", "json"))
    o.add_argument("--output", help="write to this file instead of stdout")
    o.add_argument("--config", help="JSON file whose keys mirror the long options")
    o.add_argument("--threads", type=int, help="worker cap (env POISSON_SCHED_THREADS)")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parent = _parent_parser()
    parser = argparse.ArgumentParser(prog="poisson-sched", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mi", parents=[parent], help="mutual information at one allocation")
    p.add_argument("--alloc", help="t1,t2,t3 summing to T (default T/2,T/2,0)")

    p = sub.add_parser("pd", parents=[parent], help="probability of correct MAP detection")
    p.add_argument("--alloc")

    p = sub.add_parser("montecarlo", parents=[parent], help="empirical MAP success rate")
    p.add_argument("--alloc")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--no-stratify", action="store_true", default=None)
    p.add_argument("--sweep-points", type=int, help="sweep t3 over this many points on the symmetry line")

    p = sub.add_parser("derivative", parents=[parent], help="dI/dT at T=0, analytic and numerical")
    p.add_argument("--mode", choices=(INDIVIDUAL, JOINT, "both"))
    p.add_argument("--h", type=float, help="forward-difference step (default 1e-6)")

    sweep = sub.add_parser("sweep", help="parameter sweeps").add_subparsers(dest="kind", required=True)
    p = sweep.add_parser("line", parents=[parent], help="symmetry line ((T-a)/2, (T-a)/2, a)")
    p.add_argument("--points", type=int)
    p.add_argument("--metric", choices=("mi", "pd", "both"))
    p.add_argument("--refine", action="store_true", default=None)
    p = sweep.add_parser("ternary", parents=[parent], help="barycentric grid over the simplex")
    p.add_argument("--resolution", type=int)
    p = sweep.add_parser("prior", parents=[parent], help="optimal t3 against the prior")
    p.add_argument("--points", type=int)
    p.add_argument("--metric", choices=("mi", "pd"))
    p = sweep.add_parser("intensity", parents=[parent], help="optimal t3 over (lambda0 T, lambda1 T)")
    p.add_argument("--grid-n", type=int)
    p.add_argument("--lambda-max", type=float)
    p.add_argument("--points", type=int)
    p.add_argument("--metric", choices=("mi", "pd"))

    check = sub.add_parser("check", help="diagnostics").add_subparsers(dest="kind", required=True)
    p = check.add_parser("concavity", parents=[parent], help="second differences along the symmetry line")
    p.add_argument("--points", type=int)
    p.add_argument("--quantity", choices=("mi", "term3"))
    p = check.add_parser("symmetry", parents=[parent], help="I(t1,t2,t3) against I(t2,t1,t3)")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    return parser


def resolve_options(args: argparse.Namespace) -> dict:
    """Built-in defaults, then the ``--config`` file, then explicit flags."""
    opts = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}")
        if not isinstance(doc, dict):
            raise UsageError("config file must hold a JSON object")
        for key, value in doc.items():
            key = key.lstrip("-").replace("-", "_")
            if key not in opts:
                raise UsageError(f"unknown config key {key!r}")
            opts[key] = value
    for key, value in vars(args).items():
        if value is not None and key in opts:
            opts[key] = value
    if opts["threads"] is None:
        env = os.environ.get("POISSON_SCHED_THREADS")
        opts["threads"] = int(env) if env else (os.cpu_count() or 1)
    if int(opts["threads"]) < 1:
        raise UsageError("--threads must be at least 1")
    return opts


def _params(opts) -> ChannelParams:
    return ChannelParams(float(opts["lambda0"]), float(opts["lambda1"]), float(opts["prior"]), float(opts["T"]))


def _alloc(opts, params) -> TimeAllocation:
    if opts["alloc"] is None:
        return TimeAllocation(params.T / 2.0, params.T / 2.0, 0.0)
    values = opts["alloc"]
    if isinstance(values, str):
        values = _float_list(values, 3)
    if len(values) != 3:
        raise UsageError("--alloc needs exactly three values")
    return TimeAllocation.on_simplex(*values, T=params.T)


def _channel_fields(params):
    return {"lambda0": params.lambda0, "lambda1": params.lambda1, "prior": params.p, "T": params.T}


def _record(record, opts, default="json"):
    fmt = opts["format"] or default
    if fmt == "json":
        return _json(record) + "\n"
    keys = list(record)
    return _csv(keys, [[record[k] if not isinstance(record[k], (list, tuple)) else ";".join(_fmt(v) for v in record[k])
                        for k in keys]])


def cmd_mi(opts, params):
    alloc = _alloc(opts, params)
    res = vector_mutual_info(params, alloc, opts["eps"], opts["cell_budget"], opts["threads"])
    record = _channel_fields(params) | {
        "t1": alloc.t1,
        "t2": alloc.t2,
        "t3": alloc.t3,
        "mi_bits": res.value,
        "h_y_bits": res.hY,
        "h_y_given_x_bits": res.hYgivenX,
        "truncation_upper": list(res.truncation_upper),
        "tail_bound_bits": res.tail_bound,
    }
    return _record(record, opts)


def cmd_pd(opts, params):
    alloc = _alloc(opts, params)
    res = prob_correct_detection(params, alloc, opts["eps"], opts["cell_budget"], opts["threads"])
    record = _channel_fields(params) | {"t1": alloc.t1, "t2": alloc.t2, "t3": alloc.t3, "pd": res.pd, "risk": res.risk}
    for label, value in zip(STATE_LABELS, res.per_hypothesis):
        record[f"pd_given_{label}"] = value
    record["tail_bound"] = res.tail_bound
    return _record(record, opts)


def cmd_montecarlo(opts, params):
    n = int(opts["samples"])
    if n < 1:
        raise UsageError("--samples must be at least 1")
    cfg = McConfig(n, int(opts["seed"]), not opts["no_stratify"])
    header = ["alpha", "t1", "t2", "t3", "cd", "n", "stderr", "pd"]
    header += [f"count_{s}" for s in STATE_LABELS] + [f"correct_{s}" for s in STATE_LABELS]
    if opts["sweep_points"] is not None:
        k = int(opts["sweep_points"])
        if k < 2:
            raise UsageError("--sweep-points must be at least 2")
        allocs = [TimeAllocation.symmetric(float(a), params.T) for a in np.linspace(0.0, params.T, k)]
    else:
        allocs = [_alloc(opts, params)]
    rows = []
    for alloc in allocs:
        mc = empirical_correct_rate(params, alloc, cfg)
        pd = prob_correct_detection(params, alloc, opts["eps"], opts["cell_budget"], opts["threads"]).pd
        rows.append([alloc.t3, alloc.t1, alloc.t2, alloc.t3, mc.cd, mc.n, mc.stderr, pd,
                     *mc.per_hypothesis_counts, *mc.per_hypothesis_correct])
    comments = [f"seed={cfg.seed} samples={cfg.n_samples} stratified={str(cfg.stratified).lower()}"]
    return _csv(header, rows, comments)


def cmd_derivative(opts, params):
    modes = (INDIVIDUAL, JOINT) if opts["mode"] == "both" else (opts["mode"],)
    h = float(opts["h"])
    record = _channel_fields(params) | {"h": h}
    for mode in modes:
        analytic = mi_derivative_at_zero(params, mode)
        numerical = numerical_derivative_at_zero(params, mode, h, opts["eps"])
        record[f"{mode}_analytic"] = analytic
        record[f"{mode}_numerical"] = numerical
        record[f"{mode}_abs_diff"] = abs(numerical - analytic)
    return _record(record, opts)


def cmd_sweep(opts, params, kind):
    workers = opts["threads"]
    if kind == "line":
        metric = opts["metric"] or "both"
        s = sweep_symmetry_line(params, int(opts["points"]), metric, opts["eps"], workers, bool(opts["refine"]),
                                opts["cell_budget"])
        rows = []
        for i, a in enumerate(s.alphas):
            al = s.allocation(i)
            rows.append([a, al.t1, al.t2, al.t3,
                         None if s.mi is None else s.mi[i], None if s.pd is None else s.pd[i]])
        return _csv(["alpha", "t1", "t2", "t3", "mi_bits", "pd"], rows, footer=[_json(s.summary())])
    if kind == "ternary":
        s = sweep_ternary(params, int(opts["resolution"]), opts["eps"], workers)
        best = s.argmax()
        summary = {"argmax": list(best[:3]), "max_mi": best[3]}
        return _csv(["t1", "t2", "t3", "mi_bits"], s.records, footer=[_json(summary)])
    if kind == "prior":
        metric = opts["metric"] or "mi"
        s = sweep_prior(params, metric, int(opts["points"]), opts["eps"], workers)
        rows = list(zip(s.priors, s.t3_opt, s.best))
        return _csv(["prior", "t3_opt", f"best_{metric}"], rows)
    if kind == "intensity":
        metric = opts["metric"] or "mi"
        s = sweep_intensity(params.p, int(opts["grid_n"]), float(opts["lambda_max"]), metric,
                            int(opts["points"]), opts["eps"], workers)
        return _csv(["lambda0_T", "lambda1_T", f"best_{metric}", "alpha_opt"], s.records)
    raise UsageError(f"unknown sweep {kind!r}")


def cmd_check(opts, params, kind):
    if kind == "concavity":
        r = check_concavity_line(params, int(opts["points"]), opts["quantity"], opts["eps"], opts["threads"])
        d2 = [None, *r.second_differences, None]
        rows = [[a, v, d] for a, v, d in zip(r.alphas, r.values, d2)]
        summary = {"quantity": r.quantity, "max_second_difference": r.max_second_difference, "passed": r.passed}
        return _csv(["alpha", "value_bits", "second_difference"], rows, footer=[_json(summary)])
    if kind == "symmetry":
        trials = int(opts["trials"])
        if trials < 1:
            raise UsageError("--trials must be at least 1")
        r = check_symmetry(params, trials, np.random.default_rng(int(opts["seed"])), opts["eps"])
        rows = [[*pt, d] for pt, d in zip(r.points, r.deviations)]
        summary = {"max_deviation": r.max_deviation, "passed": r.passed}
        return _csv(["t1", "t2", "t3", "deviation"], rows, [f"seed={int(opts['seed'])}"], [_json(summary)])
    raise UsageError(f"unknown check {kind!r}")


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        opts = resolve_options(args)
        params = _params(opts)
        if params.degenerate:
            print("warning: lambda0 == lambda1, the channel carries no information", file=stderr)
        if args.command == "mi":
            text = cmd_mi(opts, params)
        elif args.command == "pd":
            text = cmd_pd(opts, params)
        elif args.command == "montecarlo":
            text = cmd_montecarlo(opts, params)
        elif args.command == "derivative":
            text = cmd_derivative(opts, params)
        elif args.command == "sweep":
            text = cmd_sweep(opts, params, args.kind)
        else:
            text = cmd_check(opts, params, args.kind)
    except (UsageError, DomainError, ValueError, TypeError) as exc:
        print(f"poisson-sched: error: {exc}", file=stderr)
        return EXIT_USAGE
    except CellBudgetExceeded as exc:
        print(f"poisson-sched: {exc}", file=stderr)
        return EXIT_BUDGET

    if opts["output"]:
        with open(opts["output"], "w", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
