"""Acceptance criteria 1-10, each at its stated tolerance."""

import itertools
import math
import statistics
import time

import networkx as nx
import numpy as np
import pytest

from coregame import experiments as ex
from coregame import numerics as nm
from coregame.engine import BREAKER, MAKER, MinimaxOracle, minimax_component_value
from coregame.graphs import Graph, complete_graph, gen_configuration, gen_simple_from_sequence, path_graph
from coregame.peeling import k_core


def test_criterion_01_threshold_table(criterion):
    t0 = time.perf_counter()
    errs = {k: abs(nm.solve_ck(k) - v) for k, v in ex.KNOWN_CK.items()}
    elapsed = time.perf_counter() - t0
    ok = max(errs.values()) <= 1e-3 and elapsed < 1.0
    criterion(1, ok, f"max |c_k - table| = {max(errs.values()):.1e} over k=3..6 in {elapsed:.2f}s")
    assert ok


def test_criterion_02_numeric_identities(criterion):
    t0 = time.perf_counter()
    rows = ex.run_identity_suite(seed=2024, points=200)
    elapsed = time.perf_counter() - t0
    failed = [r["check"] for r in rows if not r["passed"]]
    ok = not failed and elapsed < 5.0
    detail = "; ".join(f"{r['check']}: {r['detail']}" for r in rows)
    criterion(2, ok, f"{len(rows) - len(failed)}/{len(rows)} checks in {elapsed:.2f}s ({detail})")
    assert ok


def test_criterion_03_core_statistics(criterion):
    cfg = ex.ExperimentConfig(n=[100_000], c=[3.6], b=1, trials=20, seed=300)
    t0 = time.perf_counter()
    rows = ex.run_core_stats(cfg)
    elapsed = time.perf_counter() - t0
    worst = 0.0
    for r in rows:
        pairs = [(r["nhat"], float(r["nhat_predicted"])), (r["mhat"], float(r["mhat_predicted"]))]
        pairs += [(float(r[f"frac_{j}"]), float(r[f"frac_{j}_predicted"])) for j in (3, 4, 5, 6)]
        worst = max(worst, max(abs(a - p) / p for a, p in pairs))
    ok = worst <= 0.10 and elapsed < 120
    criterion(3, ok, f"worst relative error {worst:.3f} over 20 trials (size, edges, j=3..6) in {elapsed:.1f}s")
    assert ok


def test_criterion_04_peeling_histogram(criterion):
    n, c, k = 100_000, 3.0, 3
    cfg = ex.ExperimentConfig(n=[n], c=[c], b=1, trials=1, seed=400, t=[1, 2, 3])
    t0 = time.perf_counter()
    rows = ex.run_histogram(cfg)
    elapsed = time.perf_counter() - t0
    checked = [r for r in rows if float(r["predicted"]) >= 0.01]
    worst = max(float(r["rel_error"]) for r in checked)
    zero_bins = [r for r in checked if r["j"] == 0]
    ok = worst <= 0.10 and len(zero_bins) == 3 and elapsed < 120
    criterion(4, ok, f"worst relative error {worst:.3f} over {len(checked)} bins (t=1..3, degree 0 included) in {elapsed:.1f}s")
    assert ok


def test_criterion_05_shattering(criterion):
    n = 100_000
    cfg = ex.ExperimentConfig(n=[n], c=[3.0], b=1, trials=20, seed=500)
    t0 = time.perf_counter()
    rows = ex.run_shattering(cfg)
    elapsed = time.perf_counter() - t0
    log3n = math.log(n) ** 3
    good = sum(1 for r in rows if r["largest_at_t_dagger"] <= log3n and r["largest_at_t_dagger"] <= 0.01 * r["largest_initial"])
    ok = good >= 0.9 * len(rows) and rows[0]["t_dagger"] == nm.find_t_dagger(3, 3.0) and elapsed < 120
    sizes = sorted(r["largest_at_t_dagger"] for r in rows)
    criterion(5, ok, f"{good}/20 trials shattered at t={rows[0]['t_dagger']} (largest {sizes[0]}..{sizes[-1]}, log^3 n = {log3n:.0f}) in {elapsed:.1f}s")
    assert ok


def test_criterion_06_stabilization(criterion):
    t0 = time.perf_counter()
    medians, worst, all_ok = [], [], True
    for n in (10_000, 100_000, 1_000_000):
        cfg = ex.ExperimentConfig(n=[n], c=[3.0], b=1, trials=10, seed=600)
        rows = ex.run_stabilization(cfg)
        bound = math.log2(math.log(n)) + 10
        ts = [r["T_star"] for r in rows]
        all_ok &= all(t <= bound for t in ts)
        medians.append(statistics.median(ts))
        worst.append(f"n={n}: T* {min(ts)}..{max(ts)} vs {bound:.2f}")
    elapsed = time.perf_counter() - t0
    monotone = all(a <= b for a, b in zip(medians, medians[1:]))
    ok = all_ok and monotone and elapsed < 300
    criterion(6, ok, f"{'; '.join(worst)}; medians {medians} in {elapsed:.0f}s")
    assert ok


@pytest.fixture(scope="module")
def game_rows():
    n = 10_000
    t0 = time.perf_counter()
    sub = ex.run_phase_transition(
        ex.ExperimentConfig(n=[n], c=[3.0], b=1, trials=50, seed=700, maker=["naive", "random"], breaker=["sb"])
    )
    sup = ex.run_phase_transition(
        ex.ExperimentConfig(n=[n], c=[4.0], b=1, trials=50, seed=750, maker=["two-phase"], breaker=["sb", "random"], N=3)
    )
    return sub, sup, time.perf_counter() - t0


def test_criterion_07_game_phase_transition(criterion, game_rows):
    sub, sup, elapsed = game_rows
    n = 10_000
    log3n = math.log(n) ** 3
    parts, ok = [], elapsed < 600
    for maker in ("naive", "random"):
        rows = [r for r in sub if r["maker"] == maker]
        good = sum(r["largest_maker_component"] <= log3n for r in rows)
        ok &= good >= 0.9 * len(rows)
        parts.append(f"c=3.0 {maker} vs sb: {good}/{len(rows)} <= log^3 n")
    for breaker in ("sb", "random"):
        rows = [r for r in sup if r["breaker"] == breaker]
        good = sum(r["largest_maker_component"] >= 0.005 * n for r in rows)
        ok &= good >= 0.8 * len(rows)
        degraded = sum(bool(r["degraded"]) for r in rows)
        parts.append(f"c=4.0 two-phase vs {breaker}: {good}/{len(rows)} >= 0.005n ({degraded} degraded)")
    criterion(7, ok, "; ".join(parts) + f"; N=3 override; {elapsed:.0f}s")
    assert ok


def test_criterion_09_invariant_suites(criterion, game_rows):
    sub, sup, _ = game_rows
    t0 = time.perf_counter()
    cfg = ex.ExperimentConfig(n=[1000], c=[3.0], b=1, trials=500, seed=900, maker=["naive", "random"], breaker=["sb"])
    rows = ex.run_phase_transition(cfg)
    elapsed = time.perf_counter() - t0
    sb_bad = sum(r["violations"] for r in rows) + sum(r["violations"] for r in sub)
    games = len(rows)
    played = [r for r in sup if not r["degraded"]]
    ledger_runs = sum(1 for r in played if r["ledger_checks"] and r["ledger_checks"] > 0)
    two_core_runs = sum(1 for r in played if r["two_core_vertices"] != "")
    sup_bad = sum(r["violations"] for r in sup)
    ok = games == 1000 and sb_bad == 0 and sup_bad == 0 and ledger_runs == len(played) > 0
    criterion(
        9,
        ok,
        f"{games} subcritical games + {len(sub)} at n=1e4: {sb_bad} H-comp violations; "
        f"{len(played)} two-phase games: ledger checked in {ledger_runs}, 2-core chain run in {two_core_runs}, "
        f"{sup_bad} violations; {elapsed:.0f}s",
    )
    assert ok


def _exhaustive_value(edges, n, b, first):
    """Plain recursion over whole moves: Maker picks 1 edge, Breaker a b-subset (or the rest)."""

    def largest(claimed):
        if not claimed:
            return 0
        g = nx.Graph()
        g.add_edges_from(edges[e] for e in claimed)
        return max(len(c) for c in nx.connected_components(g))

    def rec(maker, free, player):
        if not free:
            return largest(maker)
        if player == MAKER:
            return max(rec(maker | {e}, free - {e}, BREAKER) for e in free)
        size = min(b, len(free))
        return min(rec(maker, free - set(s), MAKER) for s in itertools.combinations(sorted(free), size))

    return rec(frozenset(), frozenset(range(len(edges))), first)


def test_criterion_08_oracle_equivalence(criterion):
    t0 = time.perf_counter()
    graphs = [g for g in nx.graph_atlas_g() if 1 <= g.number_of_edges() <= 5 and nx.is_connected(g)]
    mismatches = 0
    for g in graphs:
        edges = list(g.edges())
        board = Graph(g.number_of_nodes(), edges)
        for b in (1, 2):
            oracle = MinimaxOracle(board, b)
            for first in (MAKER, BREAKER):
                if oracle.game_value(first) != _exhaustive_value(edges, board.n, b, first):
                    mismatches += 1
    k3 = minimax_component_value(complete_graph(3), 1, MAKER)
    p3 = minimax_component_value(path_graph(3), 1, MAKER)
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and k3 == 3 and p3 == 2 and elapsed < 60
    criterion(8, ok, f"{len(graphs)} connected graphs x b in (1,2) x both first players: {mismatches} mismatches; s(K3)={k3}, s(P3)={p3}; {elapsed:.1f}s")
    assert ok


def test_criterion_10_configuration_model(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1000)
    draws = 100_000
    parallel = loops = 0
    for _ in range(draws):
        e = gen_configuration([2, 2], rng).edges
        if e[0, 0] == e[0, 1]:
            loops += 1
        else:
            parallel += 1
    se = math.sqrt((2 / 3) * (1 / 3) / draws)
    z_par = abs(parallel / draws - 2 / 3) / se
    z_loop = abs(loops / draws - 1 / 3) / se
    seq = [3] * 20
    accepted = sum(gen_configuration(seq, rng).simple for _ in range(draws))
    rate = accepted / draws
    rel = abs(rate - math.exp(-2)) / math.exp(-2)
    g, _ = gen_simple_from_sequence(seq, 1)
    elapsed = time.perf_counter() - t0
    ok = z_par <= 4 and z_loop <= 4 and rel <= 0.2 and g.degrees().tolist() == seq and elapsed < 30
    criterion(10, ok, f"(2,2): parallel {parallel / draws:.4f} ({z_par:.1f} SE), loops {loops / draws:.4f} ({z_loop:.1f} SE); 3-regular n=20 acceptance {rate:.4f} vs e^-2 = {math.exp(-2):.4f} ({rel:.1%}); {elapsed:.1f}s")
    assert ok
