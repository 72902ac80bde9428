"""Breaker's rank-based strategy: H-comp tracking and its runtime invariant checks."""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from collections import deque

import numpy as np

from .engine import BREAKER, FREE, MAKER, GameState, ProtocolError
from .graphs import Graph
from .peeling import INF_RANK, peel
from .unionfind import UnionFind


@dataclass
class RankTable:
    board: Graph
    b: int
    ranks: np.ndarray
    horizontal: np.ndarray  # per edge
    lesser: np.ndarray  # per edge: endpoint of lesser rank (first endpoint if horizontal)

    @property
    def k(self) -> int:
        return self.b + 2

    def core_empty(self) -> bool:
        return not bool(np.any(self.ranks == INF_RANK))


def build_rank_table(board: Graph, b: int) -> RankTable:
    if b < 1:
        raise ValueError(f"bias b must be >= 1, got {b}")
    ranks = peel(board, b + 2, stats=False).ranks
    if board.m:
        u, v = board.edges[:, 0], board.edges[:, 1]
        ru, rv = ranks[u], ranks[v]
        horizontal = ru == rv
        lesser = np.where(rv < ru, v, u)
    else:
        horizontal = np.zeros(0, dtype=bool)
        lesser = np.zeros(0, dtype=np.int64)
    return RankTable(board=board, b=b, ranks=ranks, horizontal=horizontal, lesser=lesser)


class HCompTracker:
    """Components of Maker's horizontal edges with their free edge sets in G_{rank}.

    Free-edge sets are materialised lazily: an untouched singleton's sets are
    computed from the current ownership on first use.
    """

    def __init__(self, table: RankTable, ownership: np.ndarray):
        self.table = table
        self.own = ownership
        self.ranks = table.ranks.tolist()
        self.adj = table.board.adjacency_lists()
        self.ends = table.board.edges.tolist()
        self.uf = UnionFind(table.board.n)
        self.fv: dict[int, set[int]] = {}
        self.fh: dict[int, set[int]] = {}
        self.above: dict[int, int] = {}
        self.members: dict[int, list[int]] = {}

    def _singleton_sets(self, v: int) -> tuple[set[int], set[int]]:
        rv = self.ranks[v]
        own = self.own
        fv, fh = set(), set()
        for w, e in self.adj[v]:
            if own[e] != FREE:
                continue
            rw = self.ranks[w]
            if rw > rv:
                fv.add(e)
            elif rw == rv:
                fh.add(e)
        return fv, fh

    def root(self, v: int) -> int:
        return self.uf.find(v)

    def materialize(self, r: int) -> None:
        if r not in self.fv:
            self.fv[r], self.fh[r] = self._singleton_sets(r)

    def sets(self, r: int) -> tuple[set[int], set[int]]:
        self.materialize(r)
        return self.fv[r], self.fh[r]

    def size(self, r: int) -> int:
        return self.uf.size[r]

    def vertices(self, r: int) -> list[int]:
        return self.members.get(r, [r])

    def rank_of(self, r: int) -> int:
        return self.ranks[r]

    def on_claim(self, e: int, player: int) -> None:
        u, w = self.ends[e]
        ru, rw = self.ranks[u], self.ranks[w]
        # e is in F(C_x) iff the other end's rank is >= rank(x)
        if rw >= ru:
            r = self.uf.find(u)
            if r in self.fv:
                self.fv[r].discard(e)
                self.fh[r].discard(e)
        if ru >= rw:
            r = self.uf.find(w)
            if r in self.fv:
                self.fv[r].discard(e)
                self.fh[r].discard(e)
        if player != MAKER:
            return
        if ru == rw:
            a, b = self.uf.find(u), self.uf.find(w)
            if a == b:
                return
            self.materialize(a)
            self.materialize(b)
            r = self.uf.union(a, b)
            other = b if r == a else a
            for store in (self.fv, self.fh):
                big, small = store[r], store.pop(other)
                if len(small) > len(big):
                    big, small = small, big
                big |= small
                store[r] = big
            self.above[r] = self.above.get(r, 0) + self.above.pop(other, 0)
            self.members[r] = self.vertices(r) + self.vertices(other)
            self.members.pop(other, None)
        else:
            r = self.uf.find(u if ru < rw else w)
            self.above[r] = self.above.get(r, 0) + 1


def recompute_hcomps(state: GameState, table: RankTable) -> dict[frozenset, tuple[int, int, int]]:
    """From-scratch H-comps: vertex set -> (|F_V|, |F_H|, above count)."""
    board = table.board
    ranks = table.ranks
    own = state.ownership
    uf = UnionFind(board.n)
    edges = board.edges.tolist()
    for e in np.flatnonzero((own == MAKER) & table.horizontal).tolist():
        uf.union(*edges[e])
    groups = uf.groups()
    out = {}
    for r, verts in groups.items():
        vs = set(verts)
        rank = ranks[r]
        fv = fh = above = 0
        seen = set()
        for v in verts:
            for w, e in _adj_iter(board, v):
                if e in seen:
                    continue
                seen.add(e)
                rw = ranks[w]
                if own[e] == FREE and rw >= rank:
                    if rw > rank:
                        fv += 1
                    else:
                        fh += 1
                if own[e] == MAKER and rw > rank:
                    above += 1
        out[frozenset(vs)] = (fv, fh, above)
    return out


def _adj_iter(board: Graph, v: int):
    nbrs, eids = board.incident(v)
    return zip(nbrs.tolist(), eids.tolist())


def check_component(tracker: HCompTracker, r: int, b: int) -> list[str]:
    """Above-edge/free-edge dichotomy and the 2(b+1) size cap for the H-comp rooted at r."""
    if tracker.rank_of(r) == INF_RANK:
        return []
    fv, fh = tracker.sets(r)
    f = len(fv) + len(fh)
    above = tracker.above.get(r, 0)
    size = tracker.size(r)
    out = []
    case_i = above == 1 and f == 0
    case_ii = above == 0 and f <= max(0, b + 2 - size)
    if not (case_i or case_ii):
        out.append(
            f"H-comp at {r} (size {size}, rank {tracker.rank_of(r)}): above={above}, |F|={f} fits neither case"
        )
    if size > 2 * (b + 1):
        out.append(f"H-comp at {r} has {size} vertices > 2(b+1)={2 * (b + 1)}")
    return out


def check_hcomp_invariants(state: GameState, tracker: HCompTracker, roots=None) -> list[str]:
    """Check the given H-comps (default: all) at the start of a round.

    Components of infinite rank are skipped: the dichotomy needs the board
    to be (b+1)-degenerate.
    """
    b = state.b
    if roots is None:
        roots = {tracker.root(v) for v in range(state.board.n)}
    out = []
    for r in roots:
        out.extend(check_component(tracker, tracker.root(r), b))
    return out


def check_contraction(state: GameState, table: RankTable) -> list[str]:
    """Contracting H-comps of each Maker component must give a tree of height <= top rank."""
    board = table.board
    ranks = table.ranks
    own = state.ownership
    edges = board.edges
    mk = np.flatnonzero(own == MAKER)
    if len(mk) == 0:
        return []
    hor = mk[table.horizontal[mk]]
    ver = mk[~table.horizontal[mk]]
    huf = UnionFind(board.n)
    for u, v in edges[hor].tolist():
        huf.union(u, v)
    guf = UnionFind(board.n)
    for u, v in edges[mk].tolist():
        guf.union(u, v)
    touched = sorted(set(edges[mk].ravel().tolist()))
    # contracted nodes and edges per Maker component
    nodes: dict[int, set[int]] = {}
    cedges: dict[int, list[tuple[int, int]]] = {}
    for v in touched:
        nodes.setdefault(guf.find(v), set()).add(huf.find(v))
    for u, v in edges[ver].tolist():
        cedges.setdefault(guf.find(u), []).append((huf.find(u), huf.find(v)))
    out = []
    for g, comps in nodes.items():
        if any(ranks[c] == INF_RANK for c in comps):
            continue
        es = cedges.get(g, [])
        if len(es) != len(comps) - 1:
            out.append(f"Maker component at {g}: contraction has {len(comps)} nodes and {len(es)} edges, not a tree")
            continue
        top = max(comps, key=lambda c: (ranks[c], -c))
        nbr: dict[int, list[int]] = {c: [] for c in comps}
        for a, c in es:
            nbr[a].append(c)
            nbr[c].append(a)
        depth = {top: 0}
        queue = deque([top])
        while queue:
            x = queue.popleft()
            for y in nbr[x]:
                if y not in depth:
                    depth[y] = depth[x] + 1
                    queue.append(y)
        height = max(depth.values())
        if len(depth) != len(comps):
            out.append(f"Maker component at {g}: contraction is disconnected")
        elif height > ranks[top]:
            out.append(f"Maker component at {g}: contracted height {height} > top rank {ranks[top]}")
    return out


class SBStrategy:
    """Breaker answers Maker's edge by draining F_V(C), then F_H(C), then anything."""

    name = "sb"

    def __init__(self, table: RankTable | None = None, refined: bool = False, check: bool = True):
        self.table = table
        self.refined = refined
        self.check = check
        self.tracker: HCompTracker | None = None
        self.violations: list[str] = []
        self.info: dict = {}
        self._pending: set[int] = set()

    def start(self, state: GameState) -> None:
        if self.table is None or self.table.board is not state.board or self.table.b != state.b:
            self.table = build_rank_table(state.board, state.b)
        self.tracker = HCompTracker(self.table, state.ownership)
        self.info["breaker_core_empty"] = self.table.core_empty()
        self.info["hcomp_checks"] = 0
        if self.check:
            self._run_check(state, None)

    def _run_check(self, state: GameState, roots) -> None:
        self.info["hcomp_checks"] += 1
        self.violations.extend(check_hcomp_invariants(state, self.tracker, roots))

    def observe(self, state: GameState, player: int, edges: list[int]) -> None:
        tr = self.tracker
        for e in edges:
            tr.on_claim(e, player)
        ends = tr.ends
        for e in edges:
            self._pending.update(ends[e])
        if player == BREAKER and self.check:
            # start of the next round
            self._run_check(state, {tr.root(v) for v in self._pending})
            self._pending.clear()

    def finish(self, state: GameState) -> None:
        if self.check:
            self._run_check(state, None)
            if self.table.core_empty():
                self.violations.extend(check_contraction(state, self.table))

    def next_moves(self, state: GameState) -> list[int]:
        want = min(state.b, state.free_count)
        last = state.last_move_of(MAKER)
        picks: list[int] = []
        if last is None:
            if state.first == MAKER:
                raise ProtocolError("sb: Maker has not moved but was supposed to move first")
        else:
            e = last[0]
            r = self.tracker.root(int(self.table.lesser[e]))
            fv, fh = self.tracker.sets(r)
            order = (fh, fv) if self.refined and len(fv) > state.b else (fv, fh)
            for pool in order:
                if len(picks) == want:
                    break
                picks.extend(heapq.nsmallest(want - len(picks), pool))
        if len(picks) < want:
            picks.extend(state.lowest_free_excluding(set(picks), want - len(picks)))
        return picks


def sb_strategy(table: RankTable | None = None, refined: bool = False, check: bool = True) -> SBStrategy:
    return SBStrategy(table, refined=refined, check=check)
