"""Command line entry point: ``normclust {solve,oracle,scatter,ballint,validate}``.

Exit status: 0 on success, 1 on bad input, 2 when the solver fails within
its restart budget.
"""
from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import ballint, epas, formats, oracle, scatter
from .metrics import MetricError
from .norms import NormError, load_norm

EXIT_OK, EXIT_INPUT, EXIT_FAIL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise formats.InputError(message)


def _add_metric_flags(p, required=True):
    g = p.add_argument_group("metric")
    g.add_argument("--points", help="points CSV (discrete or continuous Euclidean)")
    g.add_argument("--graph", help="edge list 'u v w'")
    g.add_argument("--matrix", help="explicit metric JSON")
    g.add_argument("--centers", help="centers CSV for discrete Euclidean")
    g.add_argument("--continuous", action="store_true", help="centers range over R^d")
    g.add_argument("--graph-points", help="ids of P, one per line")
    g.add_argument("--graph-centers", help="ids of F, one per line")
    g.add_argument("--no-triangle-check", action="store_true")


def _metric(args):
    return formats.read_metric(
        points=args.points, graph=args.graph, matrix=args.matrix, centers=args.centers,
        continuous=args.continuous, graph_points=args.graph_points,
        graph_centers=args.graph_centers,
        check_triangle=False if args.no_triangle_check else None)


def _eps(value):
    x = float(value)
    if not 0 < x < 1:
        raise formats.InputError(f"eps must lie in (0, 1), got {value}")
    return x


def _positive_int(value):
    x = int(value)
    if x < 1:
        raise formats.InputError(f"expected a positive integer, got {value}")
    return x


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="normclust", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="approximate Norm k-Clustering")
    _add_metric_flags(s)
    s.add_argument("--norm", required=True, help="norm spec JSON")
    s.add_argument("--k", required=True, type=_positive_int)
    s.add_argument("--eps", required=True, type=_eps)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--restarts", type=_positive_int, default=200)
    s.add_argument("--opt", type=float, help="fixed optimum guess (skips the grid search)")
    s.add_argument("--opt-grid-factor", type=float)
    s.add_argument("--iteration-cap", type=_positive_int)
    s.add_argument("--lambda", dest="lam", type=float, default=100.0,
                   help="assumed scatter dimension bound for the default iteration cap")
    s.add_argument("--jobs", type=_positive_int, default=1)
    s.add_argument("--trace", help="write per-iteration JSON lines here")
    s.add_argument("--out", required=True)

    o = sub.add_parser("oracle", help="exact or baseline reference solution")
    _add_metric_flags(o)
    o.add_argument("--norm", required=True)
    o.add_argument("--k", required=True, type=_positive_int)
    o.add_argument("--method", choices=("brute", "gonzalez"), default="brute")
    o.add_argument("--eps", type=_eps, default=0.2, help="accepted for flag parity with solve")
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--out", required=True)

    sc = sub.add_parser("scatter", help="play the scattering game")
    _add_metric_flags(sc)
    sc.add_argument("--metric", help="metric file; .json is explicit, .csv is points")
    sc.add_argument("--eps", required=True, type=_eps)
    sc.add_argument("--seeds", type=_positive_int, default=20)
    sc.add_argument("--max-len", type=_positive_int, default=100)
    sc.add_argument("--strategy", choices=("farthest_violator", "random_violator"),
                    default="farthest_violator")
    sc.add_argument("--radius", type=float, default=1.0)
    sc.add_argument("--out", help="write JSON here instead of stdout")

    b = sub.add_parser("ballint", help="solve one Ball Intersection instance")
    _add_metric_flags(b)
    b.add_argument("--requests", required=True, help="CSV of point_id,radius")
    b.add_argument("--eta", type=_eps, default=0.1)
    b.add_argument("--out", help="write JSON here instead of stdout")

    v = sub.add_parser("validate", help="check metric axioms and norm spec")
    _add_metric_flags(v)
    v.add_argument("--metric")
    v.add_argument("--norm")
    return parser


def _emit(obj, path):
    text = formats.dumps(obj) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _centers_out(space, centers):
    if space.is_finite:
        return [int(c) for c in centers]
    return [np.asarray(c, dtype=float).tolist() for c in centers]


def _cmd_solve(args):
    space = _metric(args)
    norm = load_norm(args.norm)
    try:
        instance = epas.Instance(space, norm, args.k)
    except (ValueError, NormError) as exc:
        raise formats.InputError(str(exc)) from None
    if args.opt is not None and not args.opt > 0:
        raise formats.InputError("--opt must be positive")
    if args.opt_grid_factor is not None and not args.opt_grid_factor > 1:
        raise formats.InputError("--opt-grid-factor must exceed 1")
    config = epas.EpasConfig(
        eps=args.eps, restarts=args.restarts, iteration_cap=args.iteration_cap,
        scatter_lambda=args.lam, opt_grid_factor=args.opt_grid_factor, jobs=args.jobs,
        trace=bool(args.trace))
    trace = [] if args.trace else None
    if args.opt is not None:
        res = epas.solve_with_restarts(instance, args.eps, args.opt, args.restarts,
                                       args.seed, config)
        if trace is not None:
            for r in res.runs:
                trace.extend(r.trace)
        sol = res.solution
        if sol is not None:
            sol.restarts_used = res.restarts_used
            sol.seed = args.seed
    else:
        sol = epas.search_opt(instance, args.eps, args.restarts, args.seed, config, trace)
    if trace is not None:
        with open(args.trace, "w") as fh:
            for rec in trace:
                fh.write(formats.dumps(rec) + "\n")
    if sol is None:
        print(f"FAIL: no solution within {args.restarts} restarts at opt guess {args.opt}",
              file=sys.stderr)
        return EXIT_FAIL
    _emit({
        "opt_guess": float(sol.opt_guess),
        "cost": float(sol.cost),
        "centers": _centers_out(space, sol.centers),
        "assignment": sol.assignment(space),
        "iterations": int(sol.iterations),
        "restarts_used": int(sol.restarts_used),
        "seed": int(args.seed),
        "eps": float(args.eps),
    }, args.out)
    return EXIT_OK


def _cmd_oracle(args):
    space = _metric(args)
    norm = load_norm(args.norm)
    try:
        instance = epas.Instance(space, norm, args.k)
        if args.method == "brute":
            cost, centers = oracle.brute_force_opt(instance)
        else:
            sol = oracle.gonzalez_kcenter(instance)
            cost, centers = sol.cost, sol.centers
    except (ValueError, NormError) as exc:
        raise formats.InputError(str(exc)) from None
    sol = instance.solution(centers)
    _emit({"method": args.method, "cost": float(cost),
           "centers": _centers_out(space, centers),
           "assignment": sol.assignment(space)}, args.out)
    return EXIT_OK


def _scatter_metric(args):
    if args.metric:
        if any([args.points, args.graph, args.matrix]):
            raise formats.InputError("--metric cannot be combined with --points/--graph/--matrix")
        if args.metric.endswith(".csv"):
            args.points = args.metric
        else:
            args.matrix = args.metric
    return _metric(args)


def _cmd_scatter(args):
    space = _scatter_metric(args)
    strategy = "exact_finite" if space.is_finite else "ky_continuous"
    lengths, best = [], None
    for s in range(args.seeds):
        rec = scatter.play_scatter_game(space, args.eps, strategy, args.strategy,
                                        args.max_len, seed=s, radius=args.radius)
        report = scatter.verify_scattering(space, rec)
        if not report.valid:
            raise RuntimeError(f"seed {s} produced an invalid scattering at {report.violation}")
        lengths.append(len(rec))
        if best is None or len(rec) > len(best):
            best = rec
    _emit({"eps": args.eps, "strategy": args.strategy, "center_strategy": strategy,
           "lengths": lengths, "max_length": max(lengths),
           "best_record": best.to_json()}, args.out)
    return EXIT_OK


def _cmd_ballint(args):
    space = _metric(args)
    Q = formats.read_requests_csv(args.requests, space)
    out = ballint.solve(space, Q, args.eta)
    center = None
    if out.ok:
        center = int(out.center) if space.is_finite else np.asarray(out.center).tolist()
    _emit({"status": "ok" if out.ok else "FAIL", "center": center, "eta": args.eta,
           "satisfied_margin": out.satisfied_margin if math.isfinite(out.satisfied_margin)
           else None}, args.out)
    return EXIT_OK if out.ok else EXIT_FAIL


def _cmd_validate(args):
    checked = []
    if args.metric or args.points or args.graph or args.matrix:
        space = _scatter_metric(args)
        checked.append(f"metric: {space.n} points, "
                       f"{space.m if space.is_finite else 'R^d'} centers")
    if args.norm:
        norm = load_norm(args.norm)
        checked.append(f"norm: {norm.kind}")
        if checked and len(checked) == 2:
            try:
                norm.bind(space.n)
            except NormError as exc:
                raise formats.InputError(str(exc)) from None
    if not checked:
        raise formats.InputError("nothing to validate; pass a metric and/or --norm")
    for line in checked:
        print("OK", line)
    return EXIT_OK


COMMANDS = {"solve": _cmd_solve, "oracle": _cmd_oracle, "scatter": _cmd_scatter,
            "ballint": _cmd_ballint, "validate": _cmd_validate}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except (formats.InputError, NormError, MetricError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
