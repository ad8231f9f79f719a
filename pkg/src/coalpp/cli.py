"""Command-line front end: ``simulate``, ``verify`` and ``moments``.

Exit codes: 0 success, 1 a verification check failed, 2 bad arguments,
3 the requested scale exceeds the leaf cap.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from typing import Sequence

from . import __version__, moments, stats
from .coupling import MAX_LEAVES, build_context, pi_union
from .errors import CoalppError, InvalidParameter, InvalidRect, NotDisjoint, ScaleLimit
from .geometry import Rect, RectUnion, format_rect, parse_union
from .harmonic import floor_power

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_SCALE = 0, 1, 2, 3

SUITES = ("void", "mean", "coupling", "gumbel", "poisson", "ewens", "watterson")
COUPLED_SUITES = ("void", "mean", "coupling", "poisson")

# window shared by every coupled suite, so they all read the same realizations
T1_MAX = 4.0
T2_MAX = 1.0

UNIT = Rect(0, 1, 0, 1)
VOID_REGIONS = [
    (RectUnion((UNIT,)), 0.02),
    (RectUnion((UNIT, Rect(2, 3, 0, 1))), 0.03),
]
# the finite-n mean overshoots the area by about 0.0577 / log n per unit of width
# resting on t2 = 0, so the L stands on a unit-wide foot
L_SHAPE = RectUnion((Rect(0, 1, 0, 0.5), Rect(0, 1, 0.5, 1), Rect(1, 2, 0.5, 1)))
MEAN_REGIONS = [
    RectUnion((UNIT,)),
    RectUnion((Rect(1, 2, 0, 1),)),
    L_SHAPE,
]
# unit-area cells clear of the t2 = 0 edge, where the finite-n mean bias is O(1/n**0.5)
POISSON_RECTS = [Rect(0, 2, 0.5, 1), Rect(2, 4, 0.5, 1)]
QUADRANT_CELLS = [Rect(0, 0.5, 0, 0.5), Rect(0.5, 1, 0, 0.5), Rect(0, 0.5, 0.5, 1),
                  Rect(0.5, 1, 0.5, 1)]
DELTA_T = (1.0, 1.0)
DECAY_NS = (10**2, 10**3, 10**4, 10**5)
EWENS_CASES = ((8, 0.5), (8, 1.0), (8, 2.0))
WATTERSON_CASES = ((100, 1.0), (1000, 0.5))
GUMBEL_N = 10**4

DEFAULT_REPS = {"void": 20_000, "mean": 20_000, "coupling": 20_000, "poisson": 20_000,
                "gumbel": 5_000, "ewens": 100_000, "watterson": 100_000}
DEFAULT_N = 10**5


class UsageError(Exception):
    def __init__(self, flag: str, message: str):
        super().__init__(f"{flag}: {message}")
        self.flag = flag


def _int(text: str) -> int:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value.is_integer():
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(value)


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer seed: {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    return [_int(x) for x in text.split(",") if x.strip()]


def _threads(args) -> int:
    if args.threads is not None:
        if args.threads < 1:
            raise UsageError("--threads", "must be >= 1")
        return args.threads
    return stats.default_threads()


def write_atomic(path: str, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, out: str | None) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _manifest(command: str, params: dict, started: float) -> dict:
    return {
        "command": command,
        "parameters": params,
        "seed": params.get("seed"),
        "version": __version__,
        "duration_s": round(time.perf_counter() - started, 3),
    }


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    try:
        union = parse_union(args.rects)
    except NotDisjoint as exc:
        raise UsageError("--rects", f"not-disjoint: rectangles {exc.indices[0]} and "
                                    f"{exc.indices[1]} overlap") from None
    except InvalidRect as exc:
        raise UsageError("--rects", f"invalid-rect: {exc}") from None
    if not len(union):
        raise UsageError("--rects", "need at least one rectangle")
    if args.reps < 1:
        raise UsageError("--reps", "must be >= 1")
    if args.n < 2:
        raise UsageError("--n", "must be >= 2")
    hi1, hi2 = union.bounds()
    t1_max = args.t1_max if args.t1_max is not None else max(hi1, 1e-12)
    t2_max = args.t2_max if args.t2_max is not None else max(hi2, 1e-12)
    if hi1 > t1_max:
        raise UsageError("--t1-max", f"rectangles reach t1 = {hi1:g} > {t1_max:g}")
    if hi2 > t2_max:
        raise UsageError("--t2-max", f"rectangles reach t2 = {hi2:g} > {t2_max:g}")
    rects = list(union)
    threads = _threads(args)
    if floor_power(args.n, t2_max) > MAX_LEAVES:
        raise ScaleLimit(f"floor(n**t2_max) exceeds {MAX_LEAVES}")

    def one(r: int) -> list[int]:
        ctx = build_context(args.n, t1_max, t2_max,
                            stats.replicate_rng(args.seed, stats.TAG_COUPLED, r))
        row = [r]
        for rect in rects:
            row += [pi_union(ctx, "S", rect), pi_union(ctx, "K", rect)]
        return row

    rows = stats.run_replicates(args.reps, one, threads)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["replicate"]
    for i in range(len(rects)):
        header += [f"rect{i}_pi_s", f"rect{i}_pi_k"]
    writer.writerow(header)
    writer.writerows(rows)
    params = {"n": args.n, "reps": args.reps, "seed": args.seed, "t1_max": t1_max,
              "t2_max": t2_max, "rects": [format_rect(r) for r in rects]}
    manifest = _manifest("simulate", params, started)
    _emit(buf.getvalue(), args.out)
    if args.out:
        write_atomic(args.out + ".manifest.json", _dumps(manifest))
    else:
        sys.stderr.write(json.dumps(manifest, sort_keys=True) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def run_suites(suites: Sequence[str], n: int, seed: int, reps: int | None,
               threads: int) -> list[stats.TestReport]:
    """Run the named suites and return their reports in a fixed order."""
    def reps_for(suite):
        return reps if reps is not None else DEFAULT_REPS[suite]

    reports: list[stats.TestReport] = []
    coupled = [s for s in suites if s in COUPLED_SUITES]
    table = None
    columns: dict[str, list[int]] = {}
    if coupled:
        coupled_reps = max(reps_for(s) for s in coupled)
        cfg = stats.MCConfig(n, coupled_reps, seed, T1_MAX, T2_MAX)
        regions: list = []

        def add(key, items):
            columns[key] = list(range(len(regions), len(regions) + len(items)))
            regions.extend(items)

        if "void" in coupled:
            add("void", [u for u, _ in VOID_REGIONS])
        if "mean" in coupled:
            add("mean", MEAN_REGIONS)
        if "coupling" in coupled:
            add("coupling", [Rect(0, DELTA_T[0], 0, DELTA_T[1])])
            add("joint", QUADRANT_CELLS)
        if "poisson" in coupled:
            add("poisson", POISSON_RECTS)
        table = stats.simulate_counts(cfg, regions, threads)

    for suite in suites:
        if suite == "void":
            for (u, tol), col in zip(VOID_REGIONS, columns["void"]):
                for which in ("S", "K"):
                    reports.append(stats.estimate_void_probability(
                        cfg, u, which, tol, table=table, column=col))
        elif suite == "mean":
            for u, col in zip(MEAN_REGIONS, columns["mean"]):
                for which in ("S", "K"):
                    reports.append(stats.estimate_mean_count(
                        cfg, u, which, table=table, column=col))
        elif suite == "coupling":
            reports.extend(_coupling_reports(cfg, table, columns, threads))
        elif suite == "poisson":
            for which in ("S", "K"):
                reports.append(stats.poisson_gof(cfg, POISSON_RECTS, which, table=table,
                                                 columns=columns["poisson"]))
        elif suite == "gumbel":
            gcfg = stats.MCConfig(GUMBEL_N, reps_for("gumbel"), seed, 1.0, 1.0)
            reports.append(stats.gumbel_ks(gcfg, threads))
        elif suite == "ewens":
            for n_sub, t1 in EWENS_CASES:
                reports.append(stats.ewens_consistency(n_sub, t1, reps_for("ewens"), seed,
                                                       threads=threads))
        elif suite == "watterson":
            for m, t1 in WATTERSON_CASES:
                reports.extend(stats.moment_agreement(m, t1, reps_for("watterson"), seed,
                                                      threads))
        else:
            raise InvalidParameter(f"unknown suite {suite!r}")
    return reports


def _coupling_reports(cfg, table, columns, threads) -> list[stats.TestReport]:
    col = columns["coupling"][0]
    delta = table.s[:, col] - table.k[:, col]
    mean_report = stats._delta_report(cfg, DELTA_T, delta)
    exact = moments.mean_delta(cfg.n, DELTA_T)
    prob = mean_report.details["prob_positive"]
    prob_se = mean_report.details["prob_positive_se"]
    out = [
        mean_report,
        stats.TestReport(f"delta closed form n={cfg.n} <= 0.005", exact, 0.0, 0.0, 0.005,
                         bool(exact <= 0.005), cfg.replicates, cfg.seed, cfg.n,
                         {"bound": moments.mean_delta_bound(cfg.n, DELTA_T)}),
        stats.TestReport(f"P(S != K on [0,1)^2) n={cfg.n} <= 0.01", prob, prob_se, 0.0, 0.01,
                         bool(prob <= 0.01), cfg.replicates, cfg.seed, cfg.n,
                         {"exact": moments.prob_delta_positive(cfg.n, DELTA_T)}),
        stats.joint_equality(cfg, QUADRANT_CELLS, table=table, columns=columns["joint"]),
    ]
    ns = [m for m in DECAY_NS if m < cfg.n] + [cfg.n]
    if len(ns) >= 2:
        known = {cfg.n: mean_report}
        out.append(stats.coupling_decay(ns, cfg.replicates, cfg.seed, DELTA_T, threads,
                                        known=known, t1_max=cfg.t1_max, t2_max=cfg.t2_max))
    return out


def cmd_verify(args) -> int:
    started = time.perf_counter()
    suites = SUITES if args.suite == "all" else (args.suite,)
    if args.n < 2:
        raise UsageError("--n", "must be >= 2")
    if args.reps is not None and args.reps < stats.MIN_REPLICATES:
        raise UsageError("--reps", f"replicates below the minimum of {stats.MIN_REPLICATES}")
    threads = _threads(args)
    reports = run_suites(suites, args.n, args.seed, args.reps, threads)
    params = {"suite": args.suite, "n": args.n, "seed": args.seed,
              "reps": args.reps if args.reps is not None
              else {s: DEFAULT_REPS[s] for s in suites}}
    body = {"manifest": _manifest("verify", params, started),
            "reports": [r.to_dict() for r in reports]}
    _emit(_dumps(body), args.out)
    for r in reports:
        sys.stderr.write(r.line() + "\n")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILED


# ---------------------------------------------------------------------------
# moments


def cmd_moments(args) -> int:
    started = time.perf_counter()
    for flag, values in (("--n", args.n), ("--t1", args.t1), ("--t2", args.t2)):
        if not values:
            raise UsageError(flag, "needs at least one value")
    if any(n < 2 for n in args.n):
        raise UsageError("--n", "every n must be >= 2")
    if any(t < 0 or not math.isfinite(t) for t in args.t1):
        raise UsageError("--t1", "values must be finite and >= 0")
    if any(t < 0 or not math.isfinite(t) for t in args.t2):
        raise UsageError("--t2", "values must be finite and >= 0")
    rows = []
    for n in args.n:
        if floor_power(n, max(args.t2)) > MAX_LEAVES:
            raise ScaleLimit(f"floor(n**t2) exceeds {MAX_LEAVES} for n={n}")
        for t1 in args.t1:
            for t2 in args.t2:
                rows.append(moments.moment_report(n, t1, t2, rescaled=args.rescaled).to_dict())
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        text = buf.getvalue()
    else:
        params = {"n": args.n, "t1": args.t1, "t2": args.t2, "rescaled": args.rescaled}
        text = _dumps({"manifest": _manifest("moments", params, started), "reports": rows})
    _emit(text, args.out)
    if args.format == "csv" and args.out:
        params = {"n": args.n, "t1": args.t1, "t2": args.t2, "rescaled": args.rescaled}
        write_atomic(args.out + ".manifest.json", _dumps(_manifest("moments", params, started)))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coalpp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, n_default):
        p.add_argument("--n", type=_int, default=n_default, help="base sample-size scale")
        p.add_argument("--seed", type=_seed, default=stats.DEFAULT_SEED,
                       help="64-bit seed (default 0x5EED)")
        p.add_argument("--threads", type=_int, default=None,
                       help="worker threads (default: $COALPP_THREADS or CPU count)")
        p.add_argument("--out", default=None, help="output path (default stdout)")

    sim = sub.add_parser("simulate", help="per-replicate counts on rectangles, as CSV")
    common(sim, 100)
    sim.add_argument("--reps", type=_int, default=100)
    sim.add_argument("--t1-max", dest="t1_max", type=float, default=None)
    sim.add_argument("--t2-max", dest="t2_max", type=float, default=None)
    sim.add_argument("--rects", required=True, help='"s1,u1,s2,u2[;...]"')
    sim.set_defaults(func=cmd_simulate)

    ver = sub.add_parser("verify", help="run the statistical verification suites")
    common(ver, DEFAULT_N)
    ver.add_argument("--suite", choices=SUITES + ("all",), default="all")
    ver.add_argument("--reps", type=_int, default=None,
                     help="replicates per suite (default: per-suite acceptance size)")
    ver.set_defaults(func=cmd_verify)

    mom = sub.add_parser("moments", help="closed-form moment table")
    mom.add_argument("--n", type=_int_list, default=[100])
    mom.add_argument("--t1", type=_float_list, default=[1.0])
    mom.add_argument("--t2", type=_float_list, default=[1.0])
    mom.add_argument("--rescaled", action="store_true",
                     help="substitute t1 / log n into the S and K moments")
    mom.add_argument("--format", choices=("json", "csv"), default="json")
    mom.add_argument("--out", default=None)
    mom.set_defaults(func=cmd_moments)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"coalpp {args.command}: error: {exc}\n")
        return EXIT_USAGE
    except ScaleLimit as exc:
        sys.stderr.write(f"coalpp {args.command}: scale-limit: {exc}\n")
        return EXIT_SCALE
    except CoalppError as exc:
        sys.stderr.write(f"coalpp {args.command}: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
