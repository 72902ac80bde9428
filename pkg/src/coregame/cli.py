"""Command-line entry point: ``coregame <subcommand> ...``."""

from __future__ import annotations

import argparse
import sys

from . import experiments as ex
from . import numerics as nm
from .engine import BREAKER, MAKER, play
from .graphs import gen_configuration, gen_gnm, gen_gnp, gen_simple_from_sequence, read_graph, write_graph
from .maker import check_nl_tree, find_nl_tree_restarts, default_depth
from .peeling import k_core, peel


def cmd_thresholds(args) -> int:
    print("k,c_k,mu_ck")
    for k in range(3, args.kmax + 1):
        print(f"{k},{nm.solve_ck(k):.9f},{nm.solve_mu_ck(k):.9f}")
    return 0


def cmd_constants(args) -> int:
    consts = nm.core_constants(args.k, args.c, L=args.L, d0=args.d0)
    for line in consts.as_lines():
        print(line)
    if consts.overrides:
        print("overrides=" + ",".join(f"{k}:{v}" for k, v in consts.overrides.items()))
    return 0


def cmd_gen(args) -> int:
    if args.model == "gnp":
        p = args.p if args.p is not None else args.c / args.n
        g = gen_gnp(args.n, p, args.seed)
    elif args.model == "gnm":
        g = gen_gnm(args.n, args.m, args.seed)
    else:
        degrees = [int(x) for x in args.degrees.split(",")]
        if args.simple:
            g, tries = gen_simple_from_sequence(degrees, args.seed, args.max_tries)
            print(f"# accepted after {tries} draws", file=sys.stderr)
        else:
            g = gen_configuration(degrees, args.seed)
    write_graph(g, args.output)
    return 0


def cmd_peel(args) -> int:
    g = read_graph(args.input)
    trace = peel(g, args.k)
    print("t,edges,largest_component,components")
    for s in trace.per_iteration:
        print(f"{s.t},{s.edges},{s.largest_component},{s.components}")
    print(f"# T*={trace.t_star} core_vertices={len(trace.core_vertices())}", file=sys.stderr)
    return 0


def cmd_play(args) -> int:
    board = read_graph(args.board)
    maker = ex.make_maker(args.maker, board, args.b, args.seed, _overrides(args))
    breaker = ex.make_breaker(args.breaker, board, args.b, args.seed + 7919)
    if args.first is None:
        first = ex.default_first(args.maker)
    else:
        first = MAKER if args.first == "maker" else BREAKER
    res = play(board, args.b, maker, breaker, first=first, seed=args.seed, keep_history=args.log)
    print("largest_maker_component,components,rounds,violations,degraded")
    print(
        f"{res.largest_maker_component},{len(res.maker_component_sizes)},{res.rounds},"
        f"{len(res.invariant_violations)},{res.info.get('degraded', '')}"
    )
    if args.log:
        print("move,player,edge,u,v")
        for i, (who, e) in enumerate(res.history):
            u, v = board.edges[e]
            print(f"{i},{'maker' if who == MAKER else 'breaker'},{e},{u},{v}")
    for v in res.invariant_violations:
        print(f"# violation: {v}", file=sys.stderr)
    return 0 if not res.invariant_violations else 1


def _overrides(args) -> ex.ExperimentConfig:
    return ex.ExperimentConfig(N=args.N, L=args.L, d0=args.d0, restarts=args.restarts)


def cmd_find_nltree(args) -> int:
    g = read_graph(args.input)
    core = k_core(g, args.k)
    if core.nhat == 0:
        print(f"empty {args.k}-core", file=sys.stderr)
        return 1
    N = args.N if args.N is not None else default_depth(g.n)
    L, d0 = args.L, args.d0
    if L is None or d0 is None:
        consts = nm.core_constants(args.k, 2.0 * g.m / g.n)
        L = consts.L if L is None else L
        d0 = consts.d0 if d0 is None else d0
    tree, attempts = find_nl_tree_restarts(core.core, args.k, N, L, d0, args.seed, args.restarts)
    if tree is None:
        print(f"no ({N},{L})-tree found after {attempts} starts", file=sys.stderr)
        return 1
    problems = check_nl_tree(tree, core.core)
    tree = tree.relabel(core.vertex_map, core.edge_map)
    print(f"# N={N} L={L} d0={d0} attempts={attempts} vertices={len(tree.level)} simple={tree.simple}")
    print("# vertex parent level")
    for line in tree.parent_array_lines():
        print(line)
    for p in problems:
        print(f"# violation: {p}", file=sys.stderr)
    return 0 if not problems else 1


def cmd_experiment(args) -> int:
    if args.name == "identities":
        rows = ex.run_identity_suite()
        ex.write_rows(rows, args.output or "-")
        return 0 if ex.violation_count(rows) == 0 else 1
    if args.name not in ex.EXPERIMENTS:
        print(f"unknown experiment {args.name!r}; choose from identities, {', '.join(ex.EXPERIMENTS)}", file=sys.stderr)
        return 2
    if not args.config:
        print("--config is required", file=sys.stderr)
        return 2
    try:
        cfg = ex.load_config(args.config)
        rows = ex.EXPERIMENTS[args.name](cfg)
    except ex.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    ex.write_rows(rows, args.output or cfg.output or "-")
    bad = ex.violation_count(rows)
    if bad:
        print(f"# {bad} invariant violations", file=sys.stderr)
    return 0 if bad == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coregame", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("thresholds", help="CSV table of c_k and mu_ck")
    s.add_argument("--kmax", type=int, default=10)
    s.set_defaults(func=cmd_thresholds)

    s = sub.add_parser("constants", help="derived constants for (k, c)")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--c", type=float, required=True)
    s.add_argument("--L", type=int)
    s.add_argument("--d0", type=int)
    s.set_defaults(func=cmd_constants)

    s = sub.add_parser("gen", help="generate a random graph")
    s.add_argument("--model", choices=["gnp", "gnm", "config"], default="gnp")
    s.add_argument("--n", type=int)
    s.add_argument("--c", type=float, help="average degree; p = c/n")
    s.add_argument("--p", type=float)
    s.add_argument("--m", type=int)
    s.add_argument("--degrees", help="comma-separated degree sequence (config model)")
    s.add_argument("--simple", action="store_true", help="reject until simple")
    s.add_argument("--max-tries", type=int, default=10_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--output", default="-")
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("peel", help="per-iteration k-peeling statistics")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--input", required=True)
    s.set_defaults(func=cmd_peel)

    s = sub.add_parser("play", help="play one game on a board file")
    s.add_argument("--board", required=True)
    s.add_argument("--b", type=int, default=1)
    s.add_argument("--maker", choices=ex.MAKERS, default="naive")
    s.add_argument("--breaker", choices=ex.BREAKERS, default="sb")
    s.add_argument("--first", choices=["maker", "breaker"])
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--log", action="store_true", help="print the full move history")
    for name in ("N", "L", "d0"):
        s.add_argument(f"--{name}", type=int)
    s.add_argument("--restarts", type=int, default=10)
    s.set_defaults(func=cmd_play)

    s = sub.add_parser("find-nltree", help="search the k-core for an (N,L)-tree")
    s.add_argument("--input", required=True)
    s.add_argument("--k", type=int, default=3)
    for name in ("N", "L", "d0"):
        s.add_argument(f"--{name}", type=int)
    s.add_argument("--restarts", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_find_nltree)

    s = sub.add_parser("experiment", help="run a configured experiment")
    s.add_argument("name", help="identities, " + ", ".join(ex.EXPERIMENTS))
    s.add_argument("--config")
    s.add_argument("--output")
    s.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except nm.DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
