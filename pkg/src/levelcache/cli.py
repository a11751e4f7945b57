"""Command-line front end.

Exit codes: 0 success, 2 usage/input parse error, 3 model or validation hard
error, 4 simulation decode failure (reserved; the delivery scheme must never
trigger it).  ``--format csv|json`` selects the output encoding; CSV floats
carry 6 significant digits, JSON full precision.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

import numpy as np

from . import bounds, discretize, rates, sim
from .model import SpecError, parse_spec, to_json, validate
from .partition import interval_table
from .single_level import GeometryError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MODEL = 3
EXIT_DECODE = 4


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def _levels_csv(indices) -> str:
    return "-".join(str(i + 1) for i in sorted(indices))


def _read_spec(path: str):
    try:
        with open(path) as fh:
            return parse_spec(fh.read())
    except OSError as exc:
        raise SpecError("spec", f"cannot read {path}: {exc}") from None


def _read_popularity(path: str) -> np.ndarray:
    """Load a popularity CSV with header rank,weight; returns descending weights."""
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or "weight" not in reader.fieldnames:
                raise SpecError("popularity", f"{path}: expected header rank,weight")
            weights = [float(row["weight"]) for row in reader]
    except OSError as exc:
        raise SpecError("popularity", f"cannot read {path}: {exc}") from None
    except ValueError as exc:
        raise SpecError("popularity", f"{path}: {exc}") from None
    if not weights:
        raise SpecError("popularity", f"{path}: no rows")
    return np.sort(np.asarray(weights, dtype=float))[::-1]


def _parse_grid(text: str) -> list:
    """start:stop:step, endpoints included within half a step."""
    try:
        start, stop, step = (float(p) for p in text.split(":"))
    except ValueError:
        raise SpecError("m-grid", f"expected start:stop:step, got {text!r}") from None
    if step <= 0 or stop < start:
        raise SpecError("m-grid", "need step > 0 and stop >= start")
    out = []
    m = start
    while m <= stop + step / 2:
        out.append(m)
        m += step
    return out


def _emit(args, payload: dict, csv_rows=None, csv_header=None):
    """Write JSON (full precision) or CSV (six significant digits)."""
    if args.format == "json":
        text = json.dumps(payload, indent=2, default=str) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.writer(buf)
        if csv_header:
            writer.writerow(csv_header)
        for row in csv_rows or []:
            writer.writerow([_fmt(x) for x in row])
        text = buf.getvalue()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    elif not args.quiet:
        sys.stdout.write(text)


def _cmd_validate(args) -> int:
    spec = _read_spec(args.spec)
    report = validate(spec)
    payload = {
        "setup": spec.kind,
        "caches": spec.caches,
        "beta": str(report.beta),
        "satisfied": dict(report.satisfied),
        "ratios": list(report.ratios),
        "threshold": report.threshold,
        "warnings": list(report.warnings),
    }
    rows = [["files_vs_users", report.satisfied["files_vs_users"], ""],
            ["separation", report.satisfied["separation"],
             ";".join(_fmt(r) for r in report.ratios)]]
    _emit(args, payload, rows, ["condition", "satisfied", "detail"])
    return EXIT_OK


def _cmd_table(args) -> int:
    spec = _read_spec(args.spec)
    table = interval_table(spec)
    rows, entries = [], []
    for t, (entry, y, part) in enumerate(
        zip(table.thresholds, table.boundaries, table.partitions), start=1
    ):
        rows.append([t, entry.value, entry.kind, entry.level + 1, y,
                     _levels_csv(part.H), _levels_csv(part.I), _levels_csv(part.J)])
        entries.append({
            "t": t, "x_t": entry.value, "kind": entry.kind, "level": entry.level + 1,
            "Y_t": y, "H": sorted(i + 1 for i in part.H),
            "I": sorted(i + 1 for i in part.I), "J": sorted(i + 1 for i in part.J),
        })
    _emit(args, {"full_storage": table.full_storage, "intervals": entries},
          rows, ["t", "x_t", "kind", "level", "Y_t", "H", "I", "J"])
    return EXIT_OK


def _cmd_rate(args) -> int:
    spec = _read_spec(args.spec)
    if spec.is_multi_user:
        r = rates.multiuser_rate(spec, args.memory)
        payload = {
            "memory": args.memory,
            "total": r.total,
            "per_level": list(r.per_level),
            "approx": r.approx,
            "upper_bounds": list(r.upper_bounds),
            "allocation": list(r.allocation.per_level),
            "partition": {
                "H": sorted(i + 1 for i in r.partition_used.H),
                "I": sorted(i + 1 for i in r.partition_used.I),
                "J": sorted(i + 1 for i in r.partition_used.J),
            },
        }
        rows = [[i + 1, r.allocation.per_level[i], r.per_level[i], r.upper_bounds[i]]
                for i in range(spec.num_levels)]
        rows.append(["total", args.memory, r.total, sum(r.upper_bounds)])
        _emit(args, payload, rows, ["level", "memory", "rate", "upper_bound"])
    else:
        r = rates.singleuser_rate(spec, args.memory)
        part = r.partition_used
        payload = {
            "memory": args.memory,
            "total": r.total,
            "per_level": list(r.per_level),
            "refined_bound": r.refined_bound,
            "prior_rate": r.prior_rate,
            "partition": {
                "Hprime": sorted(i + 1 for i in part.Hprime),
                "Iprime": sorted(i + 1 for i in part.Iprime),
                "G": sorted(i + 1 for i in part.G),
                "H": sorted(i + 1 for i in part.H),
                "I": sorted(i + 1 for i in part.I),
                "J": sorted(i + 1 for i in part.J),
            },
        }
        rows = [[i + 1, r.per_level[i]] for i in range(spec.num_levels)]
        rows.append(["total", r.total])
        _emit(args, payload, rows, ["level", "rate"])
    return EXIT_OK


def _cmd_curve(args) -> int:
    spec = _read_spec(args.spec)
    grid = _parse_grid(args.m_grid)
    wanted = args.schemes.split(",") if args.schemes else None
    rows = rates.rate_curve(spec, grid, wanted)
    header = ["M", "R_ms", "R_lfu", "R_coded_lfu", "R_uniform", "R_su", "R_prior"]
    csv_rows = []
    for m, row in rows:
        csv_rows.append([m] + [row.get(s, "") for s in rates.CURVE_SCHEMES])
    payload = {"grid": grid, "rows": [dict(row, M=m) for m, row in rows]}
    _emit(args, payload, csv_rows, header)
    return EXIT_OK


def _cmd_bound(args) -> int:
    spec = _read_spec(args.spec)
    if spec.is_multi_user:
        value, params = bounds.best_multiuser_lower_bound(spec, args.memory)
        payload = {
            "memory": args.memory,
            "lower_bound": value,
            "origin": params.origin if params else "none",
            "params": None if params is None else {
                "t": params.t, "b": params.b, "s": list(params.s), "lambda": list(params.lam),
            },
        }
        rows = [[args.memory, value, payload["origin"]]]
    else:
        value = bounds.singleuser_lower_bound(spec, args.memory)
        payload = {"memory": args.memory, "lower_bound": value, "origin": "Appendix"}
        rows = [[args.memory, value, "Appendix"]]
    _emit(args, payload, rows, ["M", "R_lb", "origin"])
    return EXIT_OK


def _cmd_gap(args) -> int:
    spec = _read_spec(args.spec)
    grid = _parse_grid(args.m_grid)
    result = bounds.gap(spec, grid)
    rows = [[r.memory, r.achievable, r.lower, r.ratio, r.origin] for r in result]
    payload = {
        "max_ratio": max(r.ratio for r in result),
        "rows": [
            {"M": r.memory, "R_ach": r.achievable, "R_lb": r.lower,
             "ratio": r.ratio, "lb_origin": r.origin}
            for r in result
        ],
    }
    _emit(args, payload, rows, ["M", "R_ach", "R_lb", "ratio", "lb_origin"])
    return EXIT_OK


def _cmd_simulate(args) -> int:
    if args.stochastic:
        if not args.popularity or args.users is None:
            raise SpecError("stochastic", "--stochastic needs --popularity and --users")
        weights = _read_popularity(args.popularity)
        caches = args.caches
        if caches is None:
            if not args.spec:
                raise SpecError("caches", "give --caches or --spec for the cache count")
            caches = _read_spec(args.spec).caches
        report = sim.simulate_stochastic(
            weights, caches, args.users, args.memory, args.file_bits, args.seed, args.trials
        )
    else:
        if not args.spec:
            raise SpecError("spec", "--spec is required")
        spec = _read_spec(args.spec)
        report = sim.simulate(spec, args.memory, args.file_bits, args.seed, args.trials)
    payload = {
        "analytic_rate": report.analytic_rate,
        "empirical_mean": report.empirical_mean,
        "empirical_max": report.empirical_max,
        "decode_failures": report.decode_failures,
        "trials": report.trials,
        "seed": report.seed,
    }
    rows = [[report.analytic_rate, report.empirical_mean, report.empirical_max,
             report.decode_failures, report.trials, report.seed]]
    _emit(args, payload, rows,
          ["analytic_rate", "empirical_mean", "empirical_max", "decode_failures", "trials", "seed"])
    return EXIT_OK


def _cmd_discretize(args) -> int:
    weights = _read_popularity(args.popularity)
    memory = args.memory_frac * len(weights)
    split = discretize.split_levels(
        weights, args.levels, args.caches, memory, args.users,
        allow_empty=args.allow_empty, lattice=args.lattice,
    )
    payload = {
        "boundaries": list(split.boundaries),
        "objective": split.objective,
        "memory": memory,
        "spec": json.loads(to_json(split.spec)),
    }
    rows = [[list(split.boundaries), memory, split.objective]]
    _emit(args, payload, rows, ["boundaries", "M", "objective"])
    return EXIT_OK


def _cmd_access_opt(args) -> int:
    from .model import LevelSpec, make_spec

    spec = _read_spec(args.spec)
    try:
        d_avg = float(Fraction(args.d_avg))
    except (ValueError, ZeroDivisionError):
        raise SpecError("d-avg", f"not a rational: {args.d_avg!r}") from None
    degrees = discretize.optimize_access(spec, args.memory, args.d_max, d_avg)
    tuned = make_spec(
        spec.kind, spec.caches,
        [LevelSpec(files=lv.files, users_per_cache=lv.users_per_cache, degree=d)
         for lv, d in zip(spec.levels, degrees)],
        spec.level_separation,
    )
    rate = rates.multiuser_rate(tuned, args.memory).total
    payload = {"degrees": list(degrees), "memory": args.memory, "rate": rate}
    _emit(args, payload, [["-".join(map(str, degrees)), args.memory, rate]],
          ["degrees", "M", "rate"])
    return EXIT_OK


def _cmd_small_example(args) -> int:
    optimum = bounds.small_example_optimum(args.memory, args.n2)
    corners = {}
    for corner in sim.SMALL_CORNERS:
        res = sim.small_example_scheme(corner, args.n2, args.file_bits)
        corners[corner] = {
            "memory": res.memory,
            "rate": res.rate,
            "optimal": bounds.small_example_optimum(res.memory, args.n2),
            "vectors_checked": res.vectors_checked,
            "decoded_ok": res.decoded_ok,
        }
    payload = {"memory": args.memory, "optimal_rate": optimum, "corners": corners}
    rows = [[c, v["memory"], v["rate"], v["optimal"], v["vectors_checked"]]
            for c, v in corners.items()]
    rows.append(["query", args.memory, "", optimum, ""])
    _emit(args, payload, rows, ["corner", "M", "scheme_rate", "optimal_rate", "vectors"])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levelcache",
        description="Multi-level coded caching: allocations, rates, bounds, simulation.",
    )
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--out", help="write output to this path instead of stdout")
    parser.add_argument("--quiet", action="store_true", help="suppress stdout output")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(fn=fn)
        return p

    p = add("validate", _cmd_validate, help="check regularity conditions")
    p.add_argument("--spec", required=True)

    p = add("table", _cmd_table, help="memory intervals and their partitions")
    p.add_argument("--spec", required=True)

    p = add("rate", _cmd_rate, help="achievable rate at one memory")
    p.add_argument("--spec", required=True)
    p.add_argument("--memory", type=float, required=True)

    p = add("curve", _cmd_curve, help="scheme rates over a memory grid")
    p.add_argument("--spec", required=True)
    p.add_argument("--m-grid", required=True, help="start:stop:step")
    p.add_argument("--schemes", help="comma list of ms,lfu,coded_lfu,uniform,su,prior")

    p = add("bound", _cmd_bound, help="best lower bound at one memory")
    p.add_argument("--spec", required=True)
    p.add_argument("--memory", type=float, required=True)

    p = add("gap", _cmd_gap, help="achievable/lower-bound ratio over a grid")
    p.add_argument("--spec", required=True)
    p.add_argument("--m-grid", required=True, help="start:stop:step")

    p = add("simulate", _cmd_simulate, help="bit-exact placement and delivery")
    p.add_argument("--spec")
    p.add_argument("--memory", type=float, required=True)
    p.add_argument("--file-bits", type=int, default=2**14)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--stochastic", action="store_true")
    p.add_argument("--popularity", help="CSV with header rank,weight")
    p.add_argument("--users", type=int)
    p.add_argument("--caches", type=int)

    p = add("discretize", _cmd_discretize, help="split a popularity law into levels")
    p.add_argument("--popularity", required=True)
    p.add_argument("--levels", type=int, required=True)
    p.add_argument("--caches", type=int, required=True)
    p.add_argument("--memory-frac", type=float, required=True)
    p.add_argument("--users", type=int, required=True)
    p.add_argument("--lattice", type=int, default=200)
    p.add_argument("--allow-empty", action="store_true")

    p = add("access-opt", _cmd_access_opt, help="optimize access degrees under budgets")
    p.add_argument("--spec", required=True)
    p.add_argument("--memory", type=float, required=True)
    p.add_argument("--d-max", type=int, required=True)
    p.add_argument("--d-avg", required=True)

    p = add("small-example", _cmd_small_example, help="exact two-cache example oracle")
    p.add_argument("--n2", type=int, default=4)
    p.add_argument("--memory", type=float, required=True)
    p.add_argument("--file-bits", type=int, default=1024)

    return parser


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.fn(args)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except sim.DecodeFailure as exc:
        print(f"decode failure: {exc}", file=sys.stderr)
        return EXIT_DECODE
    except (GeometryError, bounds.InvalidBoundParams, bounds.OutOfModelError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
