import numpy as np
import pytest

from coregame.breaker import sb_strategy
from coregame.engine import BREAKER, MAKER, MinimaxOracle, OptimalStrategy, play, random_strategy
from coregame.graphs import Graph, complete_graph, gen_gnp
from coregame.maker import (
    BoundaryBreaker,
    NaiveStrategy,
    check_nl_tree,
    default_depth,
    explore,
    find_nl_tree,
    find_nl_tree_restarts,
    longest_light_path,
    naive_strategy,
    sm_strategy,
    two_phase_strategy,
)
from coregame.numerics import DomainError
from coregame.peeling import k_core


def _regular_tree(root_children: int, children: int, depth: int) -> Graph:
    """Rooted tree, root with ``root_children`` children, others ``children``, all leaves at ``depth``."""
    edges, frontier, nxt = [], [0], 1
    for d in range(depth):
        new = []
        for v in frontier:
            for _ in range(root_children if d == 0 else children):
                edges.append((v, nxt))
                new.append(nxt)
                nxt += 1
        frontier = new
    return Graph(nxt, edges)


def test_all_heavy_host_types_everything_zero():
    k, N, L, d0 = 3, 2, 3, 6
    host = _regular_tree(k + 1, k, 2 * N)
    ex = explore(host, k, N, L, d0, 0)
    assert not ex.back_edge
    assert ex.success_vertex is not None and ex.level[ex.success_vertex] == N
    assert all(t == 0 for t in ex.types.values())
    tree = find_nl_tree(host, k, N, L, d0, 0)
    assert tree is not None and tree.simple
    assert check_nl_tree(tree, host) == []
    assert all(lv <= N for lv in tree.level.values())
    assert all(len(ch) == k for v, ch in tree.children.items() if tree.is_heavy(v))


def test_all_light_host_fails():
    k, N, L, d0 = 3, 3, 2, 6
    host = _regular_tree(k, k - 1, 2 * N)  # every internal vertex has degree exactly k
    assert find_nl_tree(host, k, N, L, d0, 0) is None


def test_back_edge_stops_exploration():
    ex = explore(complete_graph(5), 3, 2, 3, 10, 0)
    assert ex.back_edge
    assert find_nl_tree(complete_graph(5), 3, 2, 3, 10, 0) is None


def test_start_outside_core_is_rejected():
    with pytest.raises(DomainError):
        find_nl_tree(complete_graph(4), 3, 2, 3, 10, 9)


def test_exploration_is_deterministic():
    core = k_core(gen_gnp(20_000, 4.0 / 20_000, 1), 3).core
    a = explore(core, 3, 3, 6, 12, 5, seed=7)
    b = explore(core, 3, 3, 6, 12, 5, seed=7)
    assert a == b


def test_finder_on_supercritical_cores():
    n = 100_000
    wins = 0
    for s in range(20):
        core = k_core(gen_gnp(n, 3.6 / n, s), 3).core
        tree, attempts = find_nl_tree_restarts(core, 3, 4, 6, 12, s, 10)
        if tree is not None:
            wins += 1
            assert check_nl_tree(tree, core) == []
            assert longest_light_path(tree) < 6
    assert wins >= 18


def test_checker_catches_broken_trees():
    k, N, L, d0 = 3, 2, 3, 6
    host = _regular_tree(k + 1, k, 2 * N)
    tree = find_nl_tree(host, k, N, L, d0, 0)
    assert check_nl_tree(tree, host) == []
    # drop two children of a heavy non-root vertex: one child left makes it (k-1)-light
    v = next(v for v in tree.heavy_vertices() if v != tree.root)
    for _ in range(2):
        c = tree.children[v].pop()
        del tree.parent[c], tree.parent_edge[c], tree.level[c]
        for x in tree.children.pop(c, []):
            del tree.parent[x], tree.parent_edge[x], tree.level[x]
    assert any("light" in p for p in check_nl_tree(tree, host))


def _sapling_tree():
    host = _regular_tree(4, 3, 6)
    return find_nl_tree(host, 3, 3, 3, 6, 0)


@pytest.mark.parametrize("first", [MAKER, BREAKER])
def test_sapling_ledger_vs_boundary_breaker(first):
    tree = _sapling_tree()
    board, local = tree.as_board()
    for s in range(20):
        sm = sm_strategy(local)
        res = play(board, 1, sm, BoundaryBreaker(local, s), first=first)
        assert res.invariant_violations == []
        assert sm.info["ledger_checks"] > 0
        assert sm.info["phase1_heavy"] >= 1


def test_sapling_ledger_vs_unrestricted_breaker():
    tree = _sapling_tree()
    board, local = tree.as_board()
    for s in range(20):
        sm = sm_strategy(local)
        res = play(board, 1, sm, random_strategy(s))
        assert res.invariant_violations == []


def test_sapling_tree_stays_connected():
    tree = _sapling_tree()
    board, local = tree.as_board()
    sm = sm_strategy(local)
    res = play(board, 1, sm, BoundaryBreaker(local, 3), keep_history=True)
    claimed = {e for who, e in res.history[: 2 * sm.info["phase1_rounds"]] if who == MAKER}
    verts = {local.root}
    for e in sorted(claimed, key=lambda e: local.level[int(board.edges[e][1])]):
        u, v = board.edges[e].tolist()
        assert u in verts or v in verts
        verts |= {u, v}


def test_naive_on_k4_reaches_three_vertices():
    board = complete_graph(4)
    oracle = MinimaxOracle(board, 1)
    for s in range(10):
        res = play(board, 1, naive_strategy(start=0), random_strategy(s))
        assert res.largest_maker_component >= 3
    res = play(board, 1, naive_strategy(start=0), OptimalStrategy(oracle))
    assert res.largest_maker_component >= 3


def test_naive_stays_connected_and_passes_only_when_exhausted():
    g = gen_gnp(500, 4.0 / 500, 2)
    mask = np.zeros(g.n, dtype=bool)
    mask[k_core(g, 3).vertex_map] = True
    strat = NaiveStrategy(mask)
    res = play(g, 1, strat, sb_strategy())
    assert res.invariant_violations == []
    # the tree is one component: its size equals the largest Maker component when no passes happened
    if strat.info.get("passes", 0) == 0:
        assert len(res.maker_component_sizes) == 1
    assert all(mask[v] for v in strat.in_tree)


def test_two_phase_degrades_on_empty_core():
    g = gen_gnp(2000, 2.0 / 2000, 1)
    tp = two_phase_strategy(g, 1, seed=0)
    assert tp.info["degraded"]
    res = play(g, 1, tp, sb_strategy(), first=BREAKER)
    assert res.info["degraded"]


def test_two_phase_supercritical_game():
    n = 10_000
    g = gen_gnp(n, 4.0 / n, 3)
    tp = two_phase_strategy(g, 1, seed=3, N=3)
    assert not tp.info["degraded"]
    res = play(g, 1, tp, sb_strategy(), first=BREAKER)
    assert res.invariant_violations == []
    assert res.info["ledger_checks"] > 0
    assert res.largest_maker_component >= 0.005 * n


def test_default_depth():
    assert default_depth(10**4) == 5
    assert default_depth(3) >= 1
