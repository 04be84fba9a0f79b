"""Command-line interface.

Exit status: 0 on success, 1 when a check fails, 2 on malformed input or
usage errors.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .concentration import ExperimentConfig, run_experiment
from .errors import MalformedInputError, ResourceLimitError, SpaceMismatchError, IncompatibleThreadError
from .gap import gamma_q_upper, gromov_hausdorff_small, net_correspondence
from .io import dumps, load_json, read_measure, read_space, space_from_obj, write_json, write_manifest
from .lyre import InductiveSystem, limit_metric, pro_winf
from .metric_core import (
    box_counting_dimension,
    eps_net,
    gen_equidistant,
    gen_sierpinski,
    gen_simplicial,
    gen_sphere_sample,
    intrinsic_metric,
    validate_metric,
)
from .ot_distances import (
    Distance,
    bottleneck_match,
    levy_prokhorov,
    wasserstein_1_dual,
    wasserstein_inf,
    wasserstein_p,
)
from .suite import VERIFY_CHECKS, format_table, run_suite, run_verify

EXIT_OK, EXIT_FAIL, EXIT_MALFORMED = 0, 1, 2


class CheckFailed(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master random seed (default 0)")
    common.add_argument("--tol", type=float, default=1e-9, help="absolute tolerance for metric checks (default 1e-9)")
    common.add_argument("--out", help="write the result here and a <out>.manifest.json beside it")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for independent trials")

    parser = argparse.ArgumentParser(prog="lyriform", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate a space or graph as JSON")
    g.add_argument("what", choices=["equidistant", "gasket", "carpet", "simplicial", "sphere", "net"])
    g.add_argument("--n", type=int, default=3)
    g.add_argument("--r", type=float, default=1.0)
    g.add_argument("--level", type=int, default=1)
    g.add_argument("--kind", choices=["sphere", "ball"], default="sphere")
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--mesh", type=int, default=2)
    g.add_argument("--space", help="input space for 'net'")
    g.add_argument("--eps", type=float, default=0.1)
    g.add_argument("--intrinsic", action="store_true", help="emit the intrinsic metric instead of the graph")
    g.add_argument("--box-scales", type=float, nargs="+", help="also report the box-counting dimension")

    d = sub.add_parser("dist", parents=[common], help="distance between two measures")
    d.add_argument("--metric", required=True, choices=["w1", "w1dual", "wp", "winf", "lp", "bottleneck"])
    d.add_argument("--p", type=float, nargs="?", const=None, default=None, help="exponent for wp")
    d.add_argument("--space", required=True)
    d.add_argument("--mu")
    d.add_argument("--nu")
    d.add_argument("--xs", type=_int_list, help="bottleneck: comma-separated point indices")
    d.add_argument("--ys", type=_int_list)
    d.add_argument("--witness", action="store_true", help="include the optimal plan or potential")

    s = sub.add_parser("suite", parents=[common], help="randomized inequality-chain property suite")
    s.add_argument("--instances", type=int, default=30)
    s.add_argument("--max-points", type=int, default=10)

    ly = sub.add_parser("lyre", parents=[common], help="limit and pro-W_inf metrics of an inverse system")
    ly.add_argument("--system", required=True)
    ly.add_argument("--sigma", required=True, help='thread JSON: {"thread": [...]} or {"top": [...]}')
    ly.add_argument("--tau", required=True)
    ly.add_argument("--depth", type=int, help="truncate to the first DEPTH stages")
    ly.add_argument("--check-maps", action="store_true", help="also sample-check that maps are nonexpansive")
    ly.add_argument("--samples", type=int, default=20)

    gp = sub.add_parser("gap", parents=[common], help="certificate for the intertwining gap")
    gp.add_argument("--space1", required=True)
    gp.add_argument("--space2", help="second space (omit with --net)")
    gp.add_argument("--net", action="store_true", help="compare SPACE1 with its greedy eps-net")
    gp.add_argument("--eps", type=float, required=True)
    gp.add_argument("--samples", type=int, default=50)
    gp.add_argument("--distance", choices=["w1", "wp", "winf", "lp"], default="w1")
    gp.add_argument("--p", type=float, default=1.0)
    gp.add_argument("--correspondence", help='JSON {"f": [...], "g": [...]} point maps')
    gp.add_argument("--gh", action="store_true", help="also compute the exact Gromov-Hausdorff distance (<= 6 points)")
    gp.add_argument("--witness", action="store_true", help="include the map matrices")

    e = sub.add_parser("experiment", parents=[common], help="run a concentration experiment to CSV")
    e.add_argument("--config", help="experiment config JSON")
    e.add_argument("--kind", choices=["variance", "sanov", "median"])
    e.add_argument("--k", type=int)
    e.add_argument("--n", type=int)
    e.add_argument("--eps", type=float, nargs="+")
    e.add_argument("--trials", type=int, default=1000)
    e.add_argument("--functions", nargs="+")

    v = sub.add_parser("verify", parents=[common], help="cross-check solvers against brute-force oracles")
    v.add_argument("--all", action="store_true")
    v.add_argument("--check", action="append", choices=list(VERIFY_CHECKS))
    v.add_argument("--instances", type=int, default=100)
    return parser


def _emit(args, payload, text: str | None = None) -> None:
    body = dumps(payload)
    print(text if text is not None else body)
    if args.out:
        Path(args.out).write_text(body + "\n")


def _checked_space(path, tol):
    space = read_space(path)
    report = validate_metric(space, tol)
    if not report.ok:
        raise MalformedInputError(f"{path}: not a metric ({report.axiom} at {report.indices}): {report.detail}")
    return space


def cmd_gen(args) -> tuple[dict, list]:
    if args.what == "equidistant":
        obj = gen_equidistant(args.n, args.r).to_json()
    elif args.what in ("gasket", "carpet"):
        graph = gen_sierpinski(args.what, args.level)
        obj = intrinsic_metric(graph).to_json() if args.intrinsic else graph.to_json()
        if args.box_scales:
            box = box_counting_dimension(graph, args.box_scales)
            print(dumps({"dimension": box.dimension, "scales": box.scales, "counts": box.counts}), file=sys.stderr)
    elif args.what == "simplicial":
        obj = gen_simplicial(args.kind, args.k, args.mesh).to_json()
    elif args.what == "sphere":
        obj = gen_sphere_sample(args.k, args.n, args.seed).to_json()
    else:
        if not args.space:
            raise MalformedInputError("gen net needs --space")
        space = read_space(args.space)
        idx = eps_net(space, args.eps)
        obj = space.subspace(idx).to_json()
        obj["net_indices"] = idx
        return obj, [args.space]
    return obj, []


def cmd_dist(args) -> dict:
    space = _checked_space(args.space, args.tol)
    if args.metric == "bottleneck":
        if args.xs is None or args.ys is None:
            raise MalformedInputError("bottleneck needs --xs and --ys")
        value, perm = bottleneck_match(space, args.xs, args.ys)
        out = {"metric": "bottleneck", "p": None, "value": value}
        if args.witness:
            out["witness"] = perm
        return out
    if not args.mu or not args.nu:
        raise MalformedInputError(f"{args.metric} needs --mu and --nu")
    mu = read_measure(args.mu, space)
    nu = read_measure(args.nu, space)
    p = None
    witness = None
    if args.metric == "w1":
        p = 1.0
        value, cpl = wasserstein_p(mu, nu, 1.0)
        witness = cpl.plan
    elif args.metric == "w1dual":
        p = 1.0
        value, witness = wasserstein_1_dual(mu, nu)
    elif args.metric == "wp":
        p = 1.0 if args.p is None else args.p
        value, cpl = wasserstein_p(mu, nu, p)
        witness = cpl.plan
    elif args.metric == "winf":
        value, cpl = wasserstein_inf(mu, nu)
        witness = cpl.plan
    else:
        value = levy_prokhorov(mu, nu)
    out = {"metric": args.metric, "p": p, "value": value}
    if args.witness and witness is not None:
        out["witness"] = witness
    return out


def _thread(obj, system: InductiveSystem):
    if isinstance(obj, dict) and "thread" in obj:
        return [np.asarray(w, dtype=float) for w in obj["thread"]]
    if isinstance(obj, dict) and "top" in obj:
        return system.thread_from_top(obj["top"])
    raise MalformedInputError('thread JSON needs "thread" (per-stage weights) or "top" (top-stage weights)')


def cmd_lyre(args) -> dict:
    obj = load_json(args.system)
    if not isinstance(obj, dict):
        raise MalformedInputError("system JSON must be an object")
    full = InductiveSystem.from_json(obj)
    # threads refer to the full system; --depth keeps its first stages
    sigma = _thread(load_json(args.sigma), full)
    tau = _thread(load_json(args.tau), full)
    system = full
    if args.depth is not None:
        if args.depth < 1:
            raise MalformedInputError("--depth must be at least 1")
        system = InductiveSystem.from_json(
            dict(obj, stages=obj.get("stages", [])[: args.depth], maps=obj.get("maps", [])[: args.depth - 1])
        )
    sigma, tau = sigma[: system.depth], tau[: system.depth]
    out = {
        "depth": system.depth,
        "stage_distances": system.stage_distances(sigma, tau),
        "limit_metric": limit_metric(system, sigma, tau),
    }
    value, seq = pro_winf(system, sigma, tau)
    out["pro_winf"] = value
    out["winf_sequence"] = seq
    if args.check_maps:
        reports = system.check_maps(args.samples, args.seed)
        out["maps"] = [r.to_json() for r in reports]
        out["maps_nonexpansive"] = all(r.passed for r in reports)
    return out


def cmd_gap(args) -> dict:
    m1 = read_space(args.space1)
    dist = Distance(args.distance, args.p)
    corr = None
    if args.net:
        idx = eps_net(m1, args.eps)
        m2 = m1.subspace(idx)
        corr = net_correspondence(m1, idx)
    elif args.space2:
        m2 = read_space(args.space2)
    else:
        raise MalformedInputError("gap needs --space2 or --net")
    if args.correspondence:
        c = load_json(args.correspondence)
        try:
            corr = (np.asarray(c["f"], dtype=np.int64), np.asarray(c["g"], dtype=np.int64))
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedInputError(f"bad correspondence JSON: {exc}") from exc
        if corr[0].shape != (m1.size,) or corr[1].shape != (m2.size,):
            raise MalformedInputError("correspondence maps have the wrong lengths")
        if corr[0].min() < 0 or corr[0].max() >= m2.size or corr[1].min() < 0 or corr[1].max() >= m1.size:
            raise MalformedInputError("correspondence index out of range")
    cert = gamma_q_upper(m1, m2, args.eps, args.samples, args.seed, dist, dist, corr)
    out = cert.to_json(include_maps=args.witness)
    out["distance"] = dist.to_json()
    out["sizes"] = [m1.size, m2.size]
    if args.gh:
        out["gromov_hausdorff"] = gromov_hausdorff_small(m1, m2)
    return out


def _experiment_config(args) -> ExperimentConfig:
    if args.config:
        obj = load_json(args.config)
        if not isinstance(obj, dict):
            raise MalformedInputError("config JSON must be an object")
        obj = dict(obj)
        obj.setdefault("seed", args.seed)
        try:
            return ExperimentConfig.from_json(obj)
        except (TypeError, ValueError) as exc:
            raise MalformedInputError(f"bad experiment config: {exc}") from exc
    if not args.kind:
        raise MalformedInputError("experiment needs --config or --kind")
    eps = args.eps or [0.1]
    try:
        return ExperimentConfig(
            kind=args.kind, k=args.k, n=args.n,
            eps=eps if args.kind == "median" else eps[0],
            trials=args.trials, seed=args.seed, functions=args.functions,
        )
    except ValueError as exc:
        raise MalformedInputError(str(exc)) from exc


def cmd_experiment(args) -> dict:
    cfg = _experiment_config(args)
    if cfg.kind in ("variance", "median") and cfg.k is None:
        raise MalformedInputError(f"{cfg.kind} experiment needs k")
    if cfg.kind == "sanov" and cfg.n is None:
        raise MalformedInputError("sanov experiment needs n")
    try:
        result = run_experiment(cfg, jobs=args.jobs)
    except ValueError as exc:
        raise MalformedInputError(str(exc)) from exc
    summary = dict(result.to_json(), config=cfg.to_json())
    if args.out:
        result.write_csv(args.out)
        write_json(str(args.out) + ".summary.json", summary)
    return summary, result.passed


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_MALFORMED
    started = time.time()
    inputs = []
    status = EXIT_OK
    try:
        if args.command == "gen":
            obj, inputs = cmd_gen(args)
            _emit(args, obj)
        elif args.command == "dist":
            inputs = [args.space, args.mu, args.nu]
            _emit(args, cmd_dist(args))
        elif args.command == "suite":
            rows = run_suite(args.seed, args.instances, args.max_points, max(args.tol, 1e-7))
            failed = [r.tag for r in rows if not r.passed]
            text = format_table(rows)
            if failed:
                text += "\nFAILED: " + ", ".join(failed)
                status = EXIT_FAIL
            _emit(args, {"rows": [r.to_json() for r in rows], "failed": failed}, text)
        elif args.command == "lyre":
            inputs = [args.system, args.sigma, args.tau]
            out = cmd_lyre(args)
            if out.get("maps_nonexpansive") is False:
                status = EXIT_FAIL
            _emit(args, out)
        elif args.command == "gap":
            inputs = [args.space1, args.space2, args.correspondence]
            _emit(args, cmd_gap(args))
        elif args.command == "experiment":
            inputs = [args.config]
            summary, passed = cmd_experiment(args)
            print(dumps(summary))
            if not passed:
                status = EXIT_FAIL
        elif args.command == "verify":
            checks = list(VERIFY_CHECKS) if args.all or not args.check else args.check
            rows = run_verify(args.seed, args.instances, checks)
            failed = [r.tag for r in rows if not r.passed]
            text = format_table(rows)
            if failed:
                text += "\nFAILED: " + ", ".join(failed)
                status = EXIT_FAIL
            _emit(args, {"rows": [r.to_json() for r in rows], "failed": failed}, text)
    except (MalformedInputError, SpaceMismatchError, IncompatibleThreadError, ResourceLimitError, IndexError) as exc:
        print(f"lyriform {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    if args.out:
        config = {k: v for k, v in vars(args).items() if k not in ("out",)}
        write_manifest(args.out, args.command, ["lyriform", *argv], config, args.seed, inputs, started, __version__)
    return status


if __name__ == "__main__":
    sys.exit(main())
