import random

import numpy as np
import pytest

from coregame.breaker import (
    HCompTracker,
    SBStrategy,
    build_rank_table,
    check_component,
    check_contraction,
    check_hcomp_invariants,
    recompute_hcomps,
    sb_strategy,
)
from coregame.engine import BREAKER, MAKER, GameState, ProtocolError, play, random_strategy
from coregame.graphs import Graph, complete_graph, cycle_graph, gen_gnp, star_graph
from coregame.maker import naive_strategy
from coregame.peeling import INF_RANK


def test_rank_table_examples():
    t = build_rank_table(complete_graph(4), 1)
    assert (t.ranks == INF_RANK).all() and t.horizontal.all()
    assert not t.core_empty()
    t = build_rank_table(star_graph(5), 1)
    assert t.ranks[0] == 1 and (t.ranks[1:] == 0).all()
    assert not t.horizontal.any()
    assert t.lesser.tolist() == [int(e[1] if e[0] == 0 else e[0]) for e in star_graph(5).edges]
    with pytest.raises(ValueError):
        build_rank_table(star_graph(2), 0)


def test_rank_table_classification_by_rescan():
    for s in range(10):
        g = gen_gnp(500, 3.5 / 500, s)
        t = build_rank_table(g, 1)
        for e, (u, v) in enumerate(g.edge_list()):
            assert t.horizontal[e] == (t.ranks[u] == t.ranks[v])
            if not t.horizontal[e]:
                assert t.ranks[t.lesser[e]] == min(t.ranks[u], t.ranks[v])


def _tracker_view(state, tracker):
    out = {}
    for r in {tracker.root(v) for v in range(state.board.n)}:
        fv, fh = tracker.sets(r)
        out[frozenset(tracker.vertices(r))] = (len(fv), len(fh), tracker.above.get(r, 0))
    return out


def test_tracker_matches_recompute_under_random_claims():
    for s in range(5):
        g = gen_gnp(150, 3.0 / 150, s)
        table = build_rank_table(g, 1)
        state = GameState(g, 1)
        tracker = HCompTracker(table, state.ownership)
        rng = random.Random(s)
        order = list(range(g.m))
        rng.shuffle(order)
        for i, e in enumerate(order):
            who = MAKER if rng.random() < 0.5 else BREAKER
            state.claim(e, who)
            tracker.on_claim(e, who)
            if i % 25 == 0:
                assert _tracker_view(state, tracker) == recompute_hcomps(state, table)


def test_initial_state_satisfies_base_case():
    g = gen_gnp(2000, 3.0 / 2000, 1)
    table = build_rank_table(g, 1)
    state = GameState(g, 1)
    tracker = HCompTracker(table, state.ownership)
    assert check_hcomp_invariants(state, tracker) == []
    # each singleton has at most b+1 free edges into G_rho
    for v in range(g.n):
        if table.ranks[v] != INF_RANK:
            fv, fh = tracker.sets(v)
            assert len(fv) + len(fh) <= 2


def test_oversized_component_is_reported():
    g = cycle_graph(7)  # with b = 1 everything has rank 0
    table = build_rank_table(g, 1)
    state = GameState(g, 1)
    tracker = HCompTracker(table, state.ownership)
    for e in range(4):
        state.claim(e, MAKER)
        tracker.on_claim(e, MAKER)
    msgs = check_component(tracker, tracker.root(0), 1)
    assert any("2(b+1)" in m for m in msgs)


def test_dichotomy_violation_is_reported():
    g = star_graph(4)
    table = build_rank_table(g, 1)
    state = GameState(g, 1)
    tracker = HCompTracker(table, state.ownership)
    # a leaf whose only edge Maker claimed: one edge above, F empty
    state.claim(0, MAKER)
    tracker.on_claim(0, MAKER)
    assert check_hcomp_invariants(state, tracker) == []
    # a leaf with an edge above and still free edges in G_0 breaks case (i)
    g = Graph(3, [(0, 1), (0, 1), (1, 2), (1, 2), (1, 2)])
    table = build_rank_table(g, 1)
    state = GameState(g, 1)
    tracker = HCompTracker(table, state.ownership)
    state.claim(0, MAKER)
    tracker.on_claim(0, MAKER)
    assert check_hcomp_invariants(state, tracker)


def test_first_breaker_step_drains_vertical_edges():
    # leaf 3 hangs off a triangle-with-tail; Maker's first edge is vertical
    g = Graph(5, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (0, 3)])
    table = build_rank_table(g, 1)
    sb = SBStrategy(table)
    state = GameState(g, 1)
    sb.start(state)
    e = 4  # edge 3-4; vertex 4 has rank 0
    assert table.ranks[4] < table.ranks[3]
    state.claim(e, MAKER)
    state.moves.append((MAKER, [e]))
    sb.observe(state, MAKER, [e])
    state.turn = BREAKER
    picks = sb.next_moves(state)
    fv, _ = sb.tracker.sets(sb.tracker.root(4))
    assert len(picks) == 1
    assert not fv or picks[0] in fv or picks[0] == min(fv)


def test_all_horizontal_board_uses_fh_or_fallback():
    g = complete_graph(4)
    table = build_rank_table(g, 1)
    res = play(g, 1, random_strategy(0), sb_strategy(table))
    assert res.largest_maker_component >= 2


def test_sb_requires_maker_first_move():
    g = cycle_graph(5)
    sb = sb_strategy()
    state = GameState(g, 1, first=MAKER)
    sb.start(state)
    state.turn = BREAKER
    with pytest.raises(ProtocolError):
        sb.next_moves(state)


def test_sb_plays_when_breaker_moves_first():
    g = gen_gnp(200, 3.0 / 200, 2)
    res = play(g, 1, random_strategy(1), sb_strategy(), first=BREAKER)
    assert res.invariant_violations == []


def test_hundred_games_without_violations():
    n = 1000
    for s in range(100):
        g = gen_gnp(n, 3.0 / n, s)
        maker = naive_strategy() if s % 2 else random_strategy(s)
        res = play(g, 1, maker, sb_strategy(), seed=s)
        assert res.invariant_violations == [], res.invariant_violations[:3]
        assert res.info["breaker_core_empty"] in (True, False)


def test_contraction_tree_on_subcritical_boards():
    for s in range(10):
        g = gen_gnp(800, 2.8 / 800, s)
        table = build_rank_table(g, 1)
        if not table.core_empty():
            continue
        sb = sb_strategy(table)
        res = play(g, 1, random_strategy(s), sb, seed=s)
        assert res.invariant_violations == []


def test_refined_variant_runs_clean():
    for s in range(10):
        g = gen_gnp(500, 3.0 / 500, s)
        res = play(g, 1, random_strategy(s), sb_strategy(refined=True))
        assert res.invariant_violations == []


def test_bias_two():
    for s in range(10):
        g = gen_gnp(1000, 4.9 / 1000, s)
        res = play(g, 2, naive_strategy(), sb_strategy())
        assert res.invariant_violations == []
