"""Maker's tree-building strategies on the (b+2)-core.

Phase 1 plays the sapling strategy on an (N, L)-tree found by a typed DFS
exploration; phase 2 grows the tree naively inside the core.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass, field

import numpy as np

from .engine import BREAKER, FREE, MAKER, GameState
from .graphs import Graph
from .numerics import DomainError, core_constants
from .peeling import k_core, two_core_sequential


# -- (N, L)-trees ------------------------------------------------------------


@dataclass
class NLTree:
    """Rooted tree inside some host graph; vertex and edge ids are the host's."""

    root: int
    parent: dict[int, int]
    parent_edge: dict[int, int]
    children: dict[int, list[int]]
    level: dict[int, int]
    k: int
    N: int
    L: int
    simple: bool = True
    root_heavy: bool = False

    def vertices(self) -> list[int]:
        return list(self.level)

    def edges(self) -> list[int]:
        return list(self.parent_edge.values())

    def is_heavy(self, v: int) -> bool:
        return len(self.children.get(v, [])) >= self.k

    def is_light(self, v: int) -> bool:
        ch = self.children.get(v, [])
        return 0 < len(ch) < self.k

    def heavy_vertices(self) -> list[int]:
        return [v for v in self.level if self.is_heavy(v)]

    def parent_array_lines(self) -> list[str]:
        """One 'vertex parent level' line per vertex, root first (parent -1)."""
        out = [f"{self.root} -1 0"]
        for v in sorted(self.parent, key=lambda x: (self.level[x], x)):
            out.append(f"{v} {self.parent[v]} {self.level[v]}")
        return out

    def relabel(self, vmap, emap) -> "NLTree":
        """Same tree with vertex ids vmap[v] and edge ids emap[e]."""
        vm = lambda v: int(vmap[v])
        return NLTree(
            root=vm(self.root),
            parent={vm(v): vm(p) for v, p in self.parent.items()},
            parent_edge={vm(v): int(emap[e]) for v, e in self.parent_edge.items()},
            children={vm(v): [vm(c) for c in ch] for v, ch in self.children.items()},
            level={vm(v): lv for v, lv in self.level.items()},
            k=self.k,
            N=self.N,
            L=self.L,
            simple=self.simple,
            root_heavy=self.root_heavy,
        )

    def as_board(self) -> tuple[Graph, "NLTree"]:
        """The tree's own edge set as a game board (edge i = i-th tree edge)."""
        verts = sorted(self.level)
        vmap = {v: i for i, v in enumerate(verts)}
        kids = sorted(self.parent)
        edges = [(vmap[self.parent[v]], vmap[v]) for v in kids]
        emap = {self.parent_edge[v]: i for i, v in enumerate(kids)}
        return Graph(len(verts), edges), self.relabel(vmap, emap)


@dataclass
class ExplorationTypeMap:
    start: int
    types: dict[int, int] = field(default_factory=dict)
    level: dict[int, int] = field(default_factory=dict)
    parent: dict[int, int] = field(default_factory=dict)
    parent_edge: dict[int, int] = field(default_factory=dict)
    children: dict[int, list[int]] = field(default_factory=dict)
    back_edge: bool = False
    back_edge_at: tuple[int, int] | None = None
    success_vertex: int | None = None


def _type_of(children_types: list[int], deg: int, k: int, L: int, d0: int) -> int:
    s = [t for t in children_types if t < L]
    if deg > d0 or len(s) < k - 1:
        return L
    if len(s) >= k:
        return 0
    return 1 + max(s)


def explore(core: Graph, k: int, N: int, L: int, d0: int, start: int, seed=None, adj=None) -> ExplorationTypeMap:
    """DFS to depth 2N from ``start`` with type assignment on finishing.

    Stops at the first non-tree edge (every later vertex would be typed L+1)
    or at the first level-N vertex with type < L.
    """
    if not 0 <= start < core.n:
        raise DomainError(f"start vertex {start} is not in the core (n={core.n})")
    adj = core.adjacency_lists() if adj is None else adj
    rng = random.Random(seed) if seed is not None else None
    depth = 2 * N
    ex = ExplorationTypeMap(start=start)
    level, types, children = ex.level, ex.types, ex.children
    level[start] = 0
    children[start] = []

    def order(v):
        lst = adj[v]
        if rng is not None:
            lst = lst[:]
            rng.shuffle(lst)
        return lst

    stack = [(start, order(start), 0)]
    while stack:
        v, nbrs, i = stack[-1]
        lv = level[v]
        if lv < depth:
            pe = ex.parent_edge.get(v)
            while i < len(nbrs) and nbrs[i][1] == pe:
                i += 1
            if i < len(nbrs):
                w, e = nbrs[i]
                stack[-1] = (v, nbrs, i + 1)
                if w in level:
                    ex.back_edge = True
                    ex.back_edge_at = (v, w)
                    return ex
                level[w] = lv + 1
                ex.parent[w] = v
                ex.parent_edge[w] = e
                children[w] = []
                children[v].append(w)
                stack.append((w, order(w) if lv + 1 < depth else [], 0))
                continue
            t = _type_of([types[c] for c in children[v]], len(adj[v]), k, L, d0)
        else:
            t = 0
        types[v] = t
        stack.pop()
        if lv == N and t < L:
            ex.success_vertex = v
            return ex
    return ex


def _extract_tree(ex: ExplorationTypeMap, v: int, k: int, N: int, L: int) -> NLTree:
    """T*(v) pruned of type >= L subtrees and trimmed to a simple tree."""
    types = ex.types
    base = ex.level[v]
    parent, pedge, children, level = {}, {}, {}, {v: 0}
    root_heavy = False
    queue = [v]
    while queue:
        u = queue.pop()
        s = sorted(c for c in ex.children[u] if types.get(c, L + 1) < L)
        if u == v and len(s) >= k:
            light = sorted(s, key=lambda c: (types[c], c))[: k - 1]
            if 1 + max(types[c] for c in light) < L:
                s = sorted(light)
            else:
                s = s[:k]
                root_heavy = True
        elif len(s) > k:
            s = s[:k]
        children[u] = s
        for c in s:
            parent[c] = u
            pedge[c] = ex.parent_edge[c]
            level[c] = ex.level[c] - base
            queue.append(c)
    return NLTree(
        root=v,
        parent=parent,
        parent_edge=pedge,
        children=children,
        level=level,
        k=k,
        N=N,
        L=L,
        simple=not root_heavy,
        root_heavy=root_heavy,
    )


def find_nl_tree(core: Graph, k: int, N: int, L: int, d0: int, start: int, seed=None, adj=None) -> NLTree | None:
    ex = explore(core, k, N, L, d0, start, seed, adj)
    if ex.success_vertex is None:
        return None
    return _extract_tree(ex, ex.success_vertex, k, N, L)


def find_nl_tree_restarts(
    core: Graph, k: int, N: int, L: int, d0: int, seed=None, restarts: int = 10
) -> tuple[NLTree | None, int]:
    """Try up to ``restarts`` random start vertices; returns (tree or None, attempts)."""
    if core.n == 0:
        return None, 0
    rng = random.Random(seed)
    adj = core.adjacency_lists()
    for attempt in range(1, restarts + 1):
        start = rng.randrange(core.n)
        tree = find_nl_tree(core, k, N, L, d0, start, rng.randrange(2**31), adj)
        if tree is not None:
            return tree, attempt
    return None, restarts


def longest_light_path(tree: NLTree) -> int:
    """Most vertices on a descending path made only of k-light vertices."""
    best = 0
    memo: dict[int, int] = {}
    for v in sorted(tree.level, key=lambda x: -tree.level[x]):
        if tree.is_light(v):
            memo[v] = 1 + max((memo.get(c, 0) for c in tree.children[v]), default=0)
        else:
            memo[v] = 0
        best = max(best, memo[v])
    return best


def check_nl_tree(tree: NLTree, host: Graph | None = None) -> list[str]:
    """Independent structural check of an (N, L)-tree; returns the problems found."""
    out = []
    k, N, L = tree.k, tree.N, tree.L
    if tree.level.get(tree.root) != 0 or tree.root in tree.parent:
        out.append("root must be at level 0 without a parent")
    seen = {tree.root}
    stack = [tree.root]
    while stack:
        v = stack.pop()
        for c in tree.children.get(v, []):
            if c in seen:
                out.append(f"vertex {c} reached twice")
                continue
            seen.add(c)
            if tree.parent.get(c) != v:
                out.append(f"parent of {c} is not {v}")
            if tree.level.get(c) != tree.level[v] + 1:
                out.append(f"level of {c} is not one below {v}")
            stack.append(c)
    if seen != set(tree.level):
        out.append("levels listed for vertices not reachable from the root")
    for v in tree.level:
        ch = tree.children.get(v, [])
        if not ch and tree.level[v] != N:
            out.append(f"leaf {v} at level {tree.level[v]} != N={N}")
        if ch and tree.level[v] >= N:
            out.append(f"vertex {v} at level {tree.level[v]} has children")
        if ch and len(ch) < k - 1:
            out.append(f"vertex {v} is (k-1)-light with {len(ch)} children")
        if tree.simple and ch and len(ch) > k:
            out.append(f"heavy vertex {v} has {len(ch)} > k children in a simple tree")
    if longest_light_path(tree) >= L:
        out.append(f"k-light path of {longest_light_path(tree)} vertices (L={L})")
    if tree.simple and not tree.is_light(tree.root) and N > 0:
        out.append("simple tree with a heavy root")
    if host is not None:
        ends = host.edges
        for v, e in tree.parent_edge.items():
            if not 0 <= e < host.m or {int(ends[e][0]), int(ends[e][1])} != {v, tree.parent[v]}:
                out.append(f"edge {e} does not join {v} and its parent in the host")
    return out


# -- phase 1: the sapling strategy -------------------------------------------


class SaplingStrategy:
    """Grow Maker's tree inside an (N, L)-tree, always at the lowest level.

    Breaker's moves are mirrored into a sub-game on the tree's boundary: a
    move inside the tree's subtree is replaced by the boundary edge above it,
    and any other move by the lowest-id free boundary edge.  The free-edge
    ledger f = h + 1 is checked before every Maker move of the sub-game.
    """

    name = "sapling"

    def __init__(self, tree: NLTree, b: int | None = None, check: bool = True):
        self.tree = tree
        self.b = tree.k - 2 if b is None else b
        self.check = check
        self.in_tree = {tree.root}
        self.edge_child = {e: v for v, e in tree.parent_edge.items()}
        self.boundary: set[int] = set()  # shadow-free boundary edges
        self.by_level: list[tuple[int, int]] = []
        self.by_id: list[int] = []
        self.heavy = 0
        self.maker_moves = 0
        self.breaker_moves = 0
        self.done = False
        self.violations: list[str] = []
        self.info: dict = {"ledger_checks": 0}
        self._add_vertex(tree.root)

    # boundary bookkeeping
    def _add_vertex(self, v: int) -> None:
        self.in_tree.add(v)
        if self.tree.is_heavy(v):
            self.heavy += 1
        for c in self.tree.children.get(v, []):
            e = self.tree.parent_edge[c]
            self.boundary.add(e)
            heapq.heappush(self.by_level, (self.tree.level[c], e))
            heapq.heappush(self.by_id, e)

    def _lowest_boundary(self) -> int | None:
        h = self.by_id
        while h and h[0] not in self.boundary:
            heapq.heappop(h)
        return h[0] if h else None

    def _shadow_claim(self, e: int) -> None:
        if e in self.boundary:
            self.boundary.discard(e)
            return
        child = self.edge_child.get(e)
        if child is not None and child not in self.in_tree:
            v = child
            while self.tree.parent[v] not in self.in_tree:
                v = self.tree.parent[v]
            up = self.tree.parent_edge[v]
            if up in self.boundary:
                self.boundary.discard(up)
                return
        alt = self._lowest_boundary()
        if alt is not None:
            self.boundary.discard(alt)

    def observe_breaker(self, edges: list[int]) -> None:
        if self.done:
            return
        for e in edges:
            self._shadow_claim(e)
        self.breaker_moves += 1

    def expected_free(self) -> int:
        return self.heavy + 1 + self.b * (self.maker_moves + 1 - self.breaker_moves)

    def frontier_level(self) -> int | None:
        h = self.by_level
        while h and h[0][1] not in self.boundary:
            heapq.heappop(h)
        return h[0][0] if h else None

    def next_edge(self, state: GameState) -> int | None:
        """Maker's next sapling edge, or None once only level-N edges are free."""
        lvl = self.frontier_level()
        if lvl is None or lvl >= self.tree.N:
            self._finish_phase()
            return None
        if self.check:
            self.info["ledger_checks"] += 1
            f = len(self.boundary)
            want = self.expected_free()
            if f != want:
                self.violations.append(
                    f"sapling ledger: {f} free boundary edges before Maker move {self.maker_moves + 1}, expected {want}"
                )
        _, e = heapq.heappop(self.by_level)
        if state.ownership[e] != FREE:
            self.violations.append(f"sapling: boundary edge {e} is free in the sub-game but claimed on the board")
        self.boundary.discard(e)
        self.maker_moves += 1
        self._add_vertex(self.edge_child[e])
        return e

    def _finish_phase(self) -> None:
        if self.done:
            return
        self.done = True
        t = self.tree
        reached = max(t.level[v] for v in self.in_tree)
        self.info["phase1_heavy"] = self.heavy
        self.info["phase1_tree_vertices"] = len(self.in_tree)
        self.info["phase1_rounds"] = self.maker_moves
        if not self.check:
            return
        C = 1 + t.k ** (t.L + 1)
        i = (t.N - 1) // (C * (t.L + 1))
        bound = (2**i - 1) * C
        if self.heavy < bound:
            self.violations.append(f"sapling: {self.heavy} heavy vertices < guaranteed {bound}")
        if t.N >= 1 and reached != t.N - 1:
            self.violations.append(f"sapling: tree reached level {reached}, expected {t.N - 1}")

    # standalone use on the tree board
    def observe(self, state: GameState, player: int, edges: list[int]) -> None:
        if player == BREAKER:
            self.observe_breaker(edges)

    def next_moves(self, state: GameState) -> list[int]:
        e = self.next_edge(state) if not self.done else None
        if e is None:
            return [state.lowest_free()]
        return [e]


def sm_strategy(tree: NLTree, b: int | None = None, check: bool = True) -> SaplingStrategy:
    return SaplingStrategy(tree, b, check)


class BoundaryBreaker:
    """Breaker confined to the boundary of Maker's tree on a tree board (random choice)."""

    def __init__(self, tree: NLTree, seed=None):
        self.tree = tree
        self.rng = random.Random(seed)
        self.reached = {tree.root}

    def observe(self, state: GameState, player: int, edges: list[int]) -> None:
        if player == MAKER:
            ends = state.board.edges
            for e in edges:
                self.reached.update(int(x) for x in ends[e])

    def next_moves(self, state: GameState) -> list[int]:
        want = min(state.b, state.free_count)
        own = state.ownership
        cands = [
            self.tree.parent_edge[c]
            for v in sorted(self.reached)
            for c in self.tree.children.get(v, [])
            if c not in self.reached and own[self.tree.parent_edge[c]] == FREE
        ]
        self.rng.shuffle(cands)
        picks = cands[:want]
        if len(picks) < want:
            picks.extend(state.lowest_free_excluding(set(picks), want - len(picks)))
        return picks


# -- phase 2: naive growth ---------------------------------------------------


class NaiveStrategy:
    """Claim the lowest-id free boundary edge of Maker's tree; pass when none is left."""

    name = "naive"

    def __init__(self, allowed=None, start: int | None = None):
        self.allowed = None if allowed is None else np.asarray(allowed, dtype=bool)
        self.start_vertex = start
        self.in_tree: set[int] = set()
        self.heap: list[int] = []
        self.adj = None
        self.ends = None
        self.passes = 0
        self.violations: list[str] = []
        self.info: dict = {}

    def _ensure(self, state: GameState) -> None:
        if self.adj is not None:
            return
        board = state.board
        self.adj = board.adjacency_lists()
        self.ends = board.edges.tolist()
        if not self.in_tree:
            v = self.start_vertex
            if v is None:
                deg = board.degrees()
                if self.allowed is not None:
                    if not self.allowed.any():
                        return
                    ok = self.allowed
                    # degree inside the allowed subgraph
                    if board.m:
                        inner = ok[board.edges[:, 0]] & ok[board.edges[:, 1]]
                        deg = np.bincount(board.edges[inner].ravel(), minlength=board.n)
                    deg = np.where(ok, deg, -1)
                v = int(np.argmax(deg)) if board.n else None
            if v is not None:
                self.add_vertex(v)

    def add_vertex(self, v: int) -> None:
        self.in_tree.add(v)
        if self.adj is None:
            return
        allowed = self.allowed
        for w, e in self.adj[v]:
            if w not in self.in_tree and (allowed is None or allowed[w]):
                heapq.heappush(self.heap, e)

    def seed_tree(self, vertices, state: GameState) -> None:
        self.in_tree = set()
        self.adj = None
        self._ensure_adj(state)
        for v in vertices:
            self.in_tree.add(v)
        for v in vertices:
            self.add_vertex(v)

    def _ensure_adj(self, state: GameState) -> None:
        if self.adj is None:
            self.adj = state.board.adjacency_lists()
            self.ends = state.board.edges.tolist()

    def boundary_edge(self, state: GameState) -> int | None:
        self._ensure(state)
        own = state.ownership
        h = self.heap
        while h:
            e = h[0]
            u, w = self.ends[e]
            if own[e] == FREE and ((u in self.in_tree) != (w in self.in_tree)):
                return e
            heapq.heappop(h)
        return None

    def next_moves(self, state: GameState) -> list[int]:
        e = self.boundary_edge(state)
        if e is None:
            if "exhausted_at_move" not in self.info:
                self.info["exhausted_at_move"] = len(state.moves)
            self.passes += 1
            self.info["passes"] = self.passes
            return [state.lowest_free()]
        heapq.heappop(self.heap)
        u, w = self.ends[e]
        self.add_vertex(w if u in self.in_tree else u)
        return [e]


def naive_strategy(core_membership=None, start: int | None = None) -> NaiveStrategy:
    return NaiveStrategy(core_membership, start)


# -- the combined strategy ---------------------------------------------------


def default_depth(n: int) -> int:
    """N = ceil((log log n)^2), at least 1."""
    if n < 3:
        return 1
    return max(1, math.ceil(math.log(math.log(n)) ** 2))


class TwoPhaseStrategy:
    """Sapling phase on an (N, L)-tree in the (b+2)-core, then naive growth in the core."""

    name = "two-phase"

    def __init__(
        self,
        board: Graph,
        b: int,
        seed=None,
        N: int | None = None,
        L: int | None = None,
        d0: int | None = None,
        restarts: int = 10,
        check: bool = True,
    ):
        if b < 1:
            raise ValueError(f"bias b must be >= 1, got {b}")
        self.board = board
        self.b = b
        self.k = b + 2
        self.check = check
        self.violations: list[str] = []
        self.info: dict = {"degraded": False}
        self.sapling: SaplingStrategy | None = None
        self.naive: NaiveStrategy | None = None
        self.core = k_core(board, self.k)
        core = self.core
        self.core_mask = np.zeros(board.n, dtype=bool)
        self.core_mask[core.vertex_map] = True
        info = self.info
        info["core_vertices"] = core.nhat
        if core.nhat == 0:
            self._degrade("empty core", whole_board=True)
            return
        c_hat = 2.0 * board.m / board.n
        N = default_depth(board.n) if N is None else N
        if L is None or d0 is None:
            try:
                consts = core_constants(self.k, c_hat)
            except DomainError:
                self._degrade("average degree below the core threshold; no default L, d0")
                return
            L = consts.L if L is None else L
            d0 = consts.d0 if d0 is None else d0
        info.update(N=N, L=L, d0=d0)
        tree, attempts = find_nl_tree_restarts(core.core, self.k, N, L, d0, seed, restarts)
        info["finder_attempts"] = attempts
        if tree is None:
            self._degrade("no (N,L)-tree found")
            return
        if check:
            problems = check_nl_tree(tree, core.core)
            self.violations.extend(f"finder: {p}" for p in problems)
        self.tree = tree.relabel(core.vertex_map, core.edge_map)
        info["tree_vertices"] = len(self.tree.level)
        info["tree_simple"] = self.tree.simple
        self.sapling = SaplingStrategy(self.tree, b, check)

    def _degrade(self, reason: str, whole_board: bool = False) -> None:
        self.info["degraded"] = True
        self.info["degraded_reason"] = reason
        self.naive = NaiveStrategy(None if whole_board else self.core_mask)

    def observe(self, state: GameState, player: int, edges: list[int]) -> None:
        if player == BREAKER and self.sapling is not None and not self.sapling.done:
            self.sapling.observe_breaker(edges)

    def next_moves(self, state: GameState) -> list[int]:
        sap = self.sapling
        if sap is not None and not sap.done:
            e = sap.next_edge(state)
            if e is not None:
                return [e]
            self.naive = NaiveStrategy(self.core_mask)
            self.naive.seed_tree(sorted(sap.in_tree), state)
            self.info["phase2_start_move"] = len(state.moves)
        moves = self.naive.next_moves(state)
        return moves

    def maker_tree(self) -> set[int]:
        if self.naive is not None:
            return self.naive.in_tree
        return self.sapling.in_tree if self.sapling else set()

    def finish(self, state: GameState) -> None:
        if self.sapling is not None:
            self.violations.extend(self.sapling.violations)
            self.info.update(self.sapling.info)
        if self.naive is not None:
            self.info.update({f"naive_{k}": v for k, v in self.naive.info.items()})
        if self.info["degraded"] or not self.check:
            return
        self.violations.extend(self._excess_checks())

    def _excess_checks(self) -> list[str]:
        """Degree-sum bookkeeping on F = core[V(T)] and the 2-core chain."""
        core = self.core
        k, b = self.k, self.b
        cid = np.full(self.board.n, -1, dtype=np.int64)
        cid[core.vertex_map] = np.arange(core.nhat)
        tv = [int(cid[v]) for v in self.maker_tree()]
        if any(v < 0 for v in tv):
            return ["two-phase: Maker's tree left the core"]
        g = core.core
        inside = np.zeros(g.n, dtype=bool)
        inside[tv] = True
        deg = g.degrees()
        a, c = inside[g.edges[:, 0]], inside[g.edges[:, 1]]
        e_f = int(np.count_nonzero(a & c))
        bd = int(np.count_nonzero(a != c))
        nv = len(tv)
        heavy = int(np.count_nonzero(deg[tv] > k))
        exc = e_f - nv
        out = []
        self.info.update(final_tree=nv, final_excess=exc, final_boundary=bd, final_heavy=heavy)
        if 2 * e_f != int(deg[tv].sum()) - bd:
            out.append("two-phase: degree-sum identity failed for F")
        if 2 * exc < heavy + b * nv - bd:
            out.append(f"two-phase: 2exc(F)={2 * exc} < heavy + b|V| - |dT| = {heavy + b * nv - bd}")
        if exc >= 0 and bd <= b * nv:
            rep = two_core_sequential(g, tv, b)
            self.info["two_core_vertices"] = len(rep.vertices)
            out.extend(rep.violations)
        return out


def two_phase_strategy(board: Graph, b: int, seed=None, **kw) -> TwoPhaseStrategy:
    return TwoPhaseStrategy(board, b, seed, **kw)
