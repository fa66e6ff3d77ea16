"""Command-line entry point: ``levis <command> ...``.

Exit codes: 0 success, 2 infeasible or degenerate query, 1 any other error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .bounds import interval_bounds
from .dispatch import DispatchConfig, datagen_dispatch, load_dataset, save_dataset
from .export import write_alpha_trace, write_beta_radii, write_json, write_union_svg
from .hybrid import hybrid_nearest_adversarial
from .milp import (
    CenterOutsideBox,
    DegenerateCenter,
    Direction,
    NoAdversaryInBox,
    NoAdversaryOnRay,
    directional_adversarial,
    nearest_adversarial,
)
from .network import (
    Ball,
    Box,
    default_box,
    is_verified,
    load_box,
    load_json,
    load_network,
    load_spec,
    norm_label,
    parse_norm,
    save_network,
    spec_margin,
)
from .oracle import NotFound, grid_oracle_nearest, lipschitz_constant, lipschitz_radius, ray_oracle, soundness_sample
from .search import BallUnion, SearchAborted, levis_alpha, levis_beta, union_coverage
from .train import TrainConfig, TrainingDiverged, train_fixture

EXIT_OK, EXIT_ERROR, EXIT_QUERY = 0, 1, 2


class QueryError(Exception):
    """Well-formed request without an answer (infeasible or degenerate)."""


def _vector(text: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.replace(";", ",").split(",") if t.strip()])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _box(text: str) -> Box:
    """JSON file, or inline ``l1,l2:u1,u2``."""
    if ":" in text and not Path(text).exists():
        lo, hi = text.split(":", 1)
        return Box(_vector(lo), _vector(hi))
    return load_box(text)


def _emit(obj, out):
    if out:
        write_json(obj, out)
    print(json.dumps(obj, indent=1))


def _query(args):
    net = load_network(args.net)
    spec = load_spec(args.spec)
    c = args.center
    if c.size != net.input_dim:
        raise ValueError(f"center has {c.size} entries, network expects {net.input_dim}")
    box = args.box if args.box is not None else default_box(net.input_dim)
    return net, spec, c, box


# --------------------------------------------------------------------------- commands


def cmd_ball(args):
    net, spec, c, box = _query(args)
    if args.solver == "hybrid":
        ball, report = hybrid_nearest_adversarial(net, spec, c, args.p, box, seed=args.seed, audit=args.audit)
        out = {"ball": ball.to_dict(), "report": report.to_dict()}
    else:
        ball, pattern = nearest_adversarial(net, spec, c, args.p, box, workers=args.workers)
        out = {"ball": ball.to_dict(), "stats": ball.meta["stats"].to_dict()}
        if args.audit:
            _, report = hybrid_nearest_adversarial(net, spec, c, args.p, box, seed=args.seed, audit=True)
            out["hybrid"] = report.to_dict()
    if args.dump_bounds:
        write_json(interval_bounds(net, box).to_dict(), args.dump_bounds)
    _emit(out, args.out)


def cmd_direction(args):
    net, spec, c, box = _query(args)
    if args.xi is not None:
        direction = Direction(c, args.anchor, args.theta, args.xi, None)
    else:
        direction = Direction.sample(c, args.anchor, args.theta, seed=args.xi_seed)
    res = directional_adversarial(net, spec, c, direction, args.p, box)
    _emit(res.to_dict(args.p), args.out)


def cmd_alpha(args):
    net, spec, c, box = _query(args)
    ball, trace = levis_alpha(net, spec, c, args.p, box, eps=args.eps, max_iter=args.max_iter, seed=args.seed)
    out = {"ball": ball.to_dict(), "iterations": len(trace), "converged": ball.meta["converged"],
           "trace": [{"iter": s.iteration, "r": s.radius, "center": s.center.tolist()} for s in trace],
           "notes": ball.meta["notes"]}
    if args.trace_csv:
        write_alpha_trace(trace, args.trace_csv)
    _emit(out, args.out)


def _beta_job(cfg):
    net, spec, x0, box, kwargs = cfg
    return levis_beta(net, spec, x0, box, **kwargs)


def cmd_beta(args):
    net, spec, c, box = _query(args)
    thetas = args.theta or [90.0]
    deltas = args.delta or [np.zeros_like(c)]
    jobs = max(1, args.jobs)
    configs = []
    for i in range(jobs):
        kw = dict(eps=args.eps, gamma=args.gamma, delta=deltas[i % len(deltas)], theta=thetas[i % len(thetas)],
                  seed=args.seed + i, max_balls=args.max_balls, p=args.p)
        configs.append((net, spec, c, box, kw))
    if jobs == 1:
        unions = [_beta_job(configs[0])]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            unions = list(pool.map(_beta_job, configs))
    union = BallUnion()
    for u in unions:
        union = union.merge(u, net, spec)
    out = union.to_dict(box, args.coverage_samples, args.seed)
    if args.radii_csv:
        write_beta_radii(union, c, args.radii_csv)
    if args.svg:
        write_union_svg(union, box, args.svg, fixed=c)
    _emit(out, args.out)


def cmd_baseline(args):
    net, spec, c, box = _query(args)
    if not is_verified(net, spec, c):
        raise QueryError("center is not verified")
    out = {"p": norm_label(args.p), "lipschitz": lipschitz_constant(net, args.p),
           "margin": spec_margin(net, spec, c), "radius": lipschitz_radius(net, spec, c, args.p)}
    if args.compare:
        ball, _ = nearest_adversarial(net, spec, c, args.p, box)
        out["exact"] = ball.radius
        out["ratio"] = ball.radius / out["radius"] if out["radius"] > 0 else None
    _emit(out, args.out)


def cmd_oracle(args):
    net, spec, c, box = _query(args)
    try:
        if args.mode == "grid":
            report = grid_oracle_nearest(net, spec, c, args.p, box, args.step)
        elif args.mode == "ray":
            if args.phi is None:
                raise ValueError("--phi is required for ray mode")
            report = ray_oracle(net, spec, c, args.phi, box, args.step)
        else:
            if args.radius is None:
                raise ValueError("--radius is required for sample mode")
            report = soundness_sample(net, spec, Ball(c, args.radius, args.p), args.n, args.seed)
    except NotFound as exc:
        _emit({"method": args.mode, "found": False, "step": args.step, "message": str(exc)}, args.out)
        return
    _emit({**report.to_dict(), "found": True}, args.out)


def cmd_datagen(args):
    if not args.out:
        raise ValueError("--out is required")
    cfg = DispatchConfig(n_samples=args.n_samples, noise=args.noise, seed=args.seed)
    X, Y = datagen_dispatch(cfg)
    save_dataset(args.out, X, Y)
    print(json.dumps({"samples": len(X), "config": cfg.to_dict(), "out": str(args.out)}, indent=1))


def cmd_train(args):
    if not args.out:
        raise ValueError("--out is required")
    X, Y = load_dataset(args.data, args.n_inputs)
    cfg = TrainConfig(hidden=args.hidden, lr=args.lr, epochs=args.epochs, train_fraction=args.train_fraction,
                      seed=args.seed)
    net, report = train_fixture(X, Y, cfg)
    save_network(net, args.out)
    out = {"config": cfg.to_dict(), "metrics": report.to_dict(), "out": str(args.out)}
    if args.report:
        write_json(out, args.report)
    print(json.dumps(out, indent=1))


def cmd_export_svg(args):
    union = BallUnion.from_dict(load_json(args.union))
    box = args.box
    if box is None:
        if not len(union):
            raise ValueError("--box is required for an empty union")
        lo = np.min([b.center - b.radius for b in union], axis=0)
        hi = np.max([b.center + b.radius for b in union], axis=0)
        box = Box(lo, hi)
    write_union_svg(union, box, args.out, axes=args.axes, fixed=args.fixed, title=args.title)
    print(json.dumps({"balls": len(union), "out": str(args.out)}))


# --------------------------------------------------------------------------- parser


def _common(p: argparse.ArgumentParser, query: bool = True):
    if query:
        p.add_argument("--net", required=True, help="network JSON")
        p.add_argument("--spec", required=True, help="specification JSON")
        p.add_argument("--center", required=True, type=_vector, help="comma-separated input point")
        p.add_argument("--box", type=_box, default=None, help="box JSON or inline l1,l2:u1,u2")
        p.add_argument("--p", type=parse_norm, default=np.inf, help="norm: 1, 2 or inf")
    p.add_argument("--out", default=None, help="also write the JSON result here")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="levis", description="Exact verifiable input regions for ReLU networks.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ball", help="largest verified ball around a center")
    _common(p)
    p.add_argument("--solver", choices=["mip", "hybrid"], default="mip")
    p.add_argument("--audit", action="store_true", help="compare hybrid and full search")
    p.add_argument("--dump-bounds", default=None, help="write interval bounds JSON")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_ball)

    p = sub.add_parser("direction", help="nearest adversary along a direction")
    _common(p)
    p.add_argument("--anchor", required=True, type=_vector)
    p.add_argument("--theta", type=float, default=90.0, help="degrees")
    p.add_argument("--xi-seed", type=int, default=0)
    p.add_argument("--xi", type=_vector, default=None, help="explicit xi instead of a seeded draw")
    p.set_defaults(func=cmd_direction)

    p = sub.add_parser("alpha", help="iterative center refinement")
    _common(p)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--trace-csv", default=None)
    p.set_defaults(func=cmd_alpha)

    p = sub.add_parser("beta", help="union of verified balls")
    _common(p)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--gamma", type=float, default=0.99)
    p.add_argument("--delta", type=_vector, action="append", default=None, help="repeatable")
    p.add_argument("--theta", type=float, action="append", default=None, help="degrees; repeatable")
    p.add_argument("--max-balls", type=int, default=30)
    p.add_argument("--jobs", type=int, default=1, help="independent runs (seed + i) merged afterwards")
    p.add_argument("--coverage-samples", type=int, default=100_000)
    p.add_argument("--radii-csv", default=None)
    p.add_argument("--svg", default=None)
    p.set_defaults(func=cmd_beta)

    p = sub.add_parser("baseline", help="Lipschitz lower bound on the radius")
    _common(p)
    p.add_argument("--compare", action="store_true", help="also solve the exact radius")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("oracle", help="brute-force checks")
    _common(p)
    p.add_argument("--mode", choices=["grid", "ray", "sample"], required=True)
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--phi", type=_vector, default=None)
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--n", type=int, default=10_000)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("datagen", help="synthetic dispatch dataset (CSV)")
    _common(p, query=False)
    p.add_argument("--n-samples", type=int, default=1000)
    p.add_argument("--noise", type=float, default=0.10)
    p.set_defaults(func=cmd_datagen)

    p = sub.add_parser("train", help="fit a fixture network")
    _common(p, query=False)
    p.add_argument("--data", required=True)
    p.add_argument("--n-inputs", type=int, default=3)
    p.add_argument("--hidden", type=int, nargs="+", default=[16, 16])
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--epochs", type=int, default=10_000)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("export-svg", help="draw a ball union")
    p.add_argument("--union", required=True, help="beta JSON output")
    p.add_argument("--box", type=_box, default=None)
    p.add_argument("--axes", type=int, nargs=2, default=[0, 1])
    p.add_argument("--fixed", type=_vector, default=None, help="values of the other coordinates")
    p.add_argument("--title", default="")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_svg)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except CenterOutsideBox as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_QUERY
    except DegenerateCenter:
        print("error: center is adversarial (degenerate query)", file=sys.stderr)
        return EXIT_QUERY
    except (NoAdversaryInBox, NoAdversaryOnRay, QueryError, SearchAborted) as exc:
        print(f"error: infeasible query: {exc}", file=sys.stderr)
        return EXIT_QUERY
    except (ValueError, OSError, KeyError, TrainingDiverged) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
