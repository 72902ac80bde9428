"""The k-peeling process, k-cores, 2-core bookkeeping and local-structure diagnostics."""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .graphs import Graph
from .unionfind import UnionFind

# rank of a vertex that is never peeled (it lies in the k-core)
INF_RANK = np.iinfo(np.int64).max


@dataclass
class IterationStats:
    t: int
    edges: int
    largest_component: int
    components: int


@dataclass
class PeelTrace:
    k: int
    ranks: np.ndarray
    t_star: int
    per_iteration: list[IterationStats]
    degree_history: list[np.ndarray] = field(default_factory=list)

    def finite_ranks(self) -> np.ndarray:
        return self.ranks[self.ranks != INF_RANK]

    def core_vertices(self) -> np.ndarray:
        return np.flatnonzero(self.ranks == INF_RANK)


def _component_stats(n: int, eu: np.ndarray, ev: np.ndarray) -> tuple[int, int]:
    """(largest component size, number of components with at least one edge)."""
    if n == 0:
        return 0, 0
    if len(eu) == 0:
        return 1, 0
    adj = coo_matrix((np.ones(len(eu), dtype=np.int8), (eu, ev)), shape=(n, n))
    _, labels = connected_components(adj, directed=False)
    sizes = np.bincount(labels)
    touched = np.zeros(n, dtype=bool)
    touched[eu] = True
    touched[ev] = True
    return int(sizes.max()), len(np.unique(labels[touched]))


def peel(
    g: Graph,
    k: int,
    t_max: int | None = None,
    stats: bool = True,
    keep_degrees: bool = False,
) -> PeelTrace:
    """Parallel k-peeling: each round deletes every edge at a vertex of current degree < k.

    ``ranks[v]`` is the first round t with deg_{G_t}(v) < k (INF_RANK for core
    vertices).  ``t_star`` is one more than the largest finite rank, so
    G_{t_star} is the k-core plus isolated vertices.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    n = g.n
    deg = g.degrees().copy()
    ranks = np.full(n, INF_RANK, dtype=np.int64)
    alive = np.arange(g.m)
    eu_all, ev_all = g.edges[:, 0], g.edges[:, 1]
    per_iteration = []
    history = []
    t = 0
    while True:
        low = deg < k
        ranks[low & (ranks == INF_RANK)] = t
        eu, ev = eu_all[alive], ev_all[alive]
        if stats:
            largest, comps = _component_stats(n, eu, ev)
            per_iteration.append(IterationStats(t, len(alive), largest, comps))
        if keep_degrees:
            history.append(deg.copy())
        kill = low[eu] | low[ev]
        if not kill.any() or (t_max is not None and t >= t_max):
            break
        deg -= np.bincount(eu[kill], minlength=n)
        deg -= np.bincount(ev[kill], minlength=n)
        alive = alive[~kill]
        t += 1
    finite = ranks[ranks != INF_RANK]
    t_star = int(finite.max()) + 1 if finite.size else 0
    return PeelTrace(k=k, ranks=ranks, t_star=t_star, per_iteration=per_iteration, degree_history=history)


def peel_degrees_at(g: Graph, k: int, t: int) -> np.ndarray:
    """Degree sequence of G_t."""
    trace = peel(g, k, t_max=t, stats=False, keep_degrees=True)
    hist = trace.degree_history
    return hist[t] if t < len(hist) else hist[-1]


def surviving_edges(g: Graph, ranks: np.ndarray, t: int) -> np.ndarray:
    """Edge ids of G_t: an edge survives t rounds iff both endpoint ranks are >= t."""
    if g.m == 0:
        return np.zeros(0, dtype=np.int64)
    r = np.minimum(ranks[g.edges[:, 0]], ranks[g.edges[:, 1]])
    return np.flatnonzero(r >= t)


def largest_component_at(g: Graph, ranks: np.ndarray, t: int) -> int:
    keep = surviving_edges(g, ranks, t)
    return _component_stats(g.n, g.edges[keep, 0], g.edges[keep, 1])[0]


# -- cores -------------------------------------------------------------------


@dataclass
class CoreResult:
    core: Graph
    vertex_map: np.ndarray
    edge_map: np.ndarray
    nhat: int
    mhat: int


def k_core(g: Graph, k: int, trace: PeelTrace | None = None) -> CoreResult:
    """Induced subgraph on the never-peeled vertices, renumbered in original order."""
    trace = peel(g, k, stats=False) if trace is None else trace
    verts = trace.core_vertices()
    new_id = np.full(g.n, -1, dtype=np.int64)
    new_id[verts] = np.arange(len(verts))
    if g.m:
        a, b = new_id[g.edges[:, 0]], new_id[g.edges[:, 1]]
        emap = np.flatnonzero((a >= 0) & (b >= 0))
        sub = np.stack([a[emap], b[emap]], axis=1)
    else:
        emap = np.zeros(0, dtype=np.int64)
        sub = emap.reshape(0, 2)
    core = Graph(len(verts), sub)
    return CoreResult(core=core, vertex_map=verts, edge_map=emap, nhat=len(verts), mhat=len(emap))


def sequential_core_vertices(g: Graph, k: int) -> set[int]:
    """k-core by deleting one vertex of degree < k at a time (lowest id first)."""
    adj = g.adjacency_lists()
    deg = [len(a) for a in adj]
    removed = [False] * g.n
    heap = [v for v in range(g.n) if deg[v] < k]
    heapq.heapify(heap)
    while heap:
        v = heapq.heappop(heap)
        if removed[v]:
            continue
        removed[v] = True
        for w, _ in adj[v]:
            if not removed[w]:
                deg[w] -= 1
                if deg[w] == k - 1:
                    heapq.heappush(heap, w)
    return {v for v in range(g.n) if not removed[v]}


def edge_parallel_core_vertices(g: Graph, k: int) -> set[int]:
    """k-core via vertex-deleting parallel rounds."""
    adj = g.adjacency_lists()
    alive = set(range(g.n))
    while True:
        drop = {v for v in alive if sum(1 for w, _ in adj[v] if w in alive) < k}
        if not drop:
            return alive
        alive -= drop


# -- excess, boundary, components ------------------------------------------


def excess(g: Graph) -> int:
    return g.m - g.n


def boundary(host: Graph, subset) -> int:
    mask = np.zeros(host.n, dtype=bool)
    mask[np.fromiter(subset, dtype=np.int64)] = True
    if host.m == 0:
        return 0
    return int(np.count_nonzero(mask[host.edges[:, 0]] != mask[host.edges[:, 1]]))


def component_sizes(g: Graph) -> list[int]:
    uf = UnionFind(g.n)
    for u, v in g.edges.tolist():
        uf.union(u, v)
    return sorted((len(members) for members in uf.groups().values()), reverse=True)


@dataclass
class TwoCoreReport:
    two_core: Graph
    vertices: list[int]
    excess: int
    boundary: int
    initial_excess: int
    initial_boundary: int
    violations: list[str] = field(default_factory=list)


def two_core_sequential(host: Graph, subset, b: int | None = None) -> TwoCoreReport:
    """2-core of host[subset] by deleting one vertex of degree <= 1 at a time.

    With ``b`` given and exc(F) >= 0, |dF| <= b|V(F)| at the start, every
    intermediate graph is checked for exc(F_t) >= exc(F) and |dF_t| <= b|V(F_t)|.
    """
    verts = sorted(set(int(v) for v in subset))
    inside = np.zeros(host.n, dtype=bool)
    inside[verts] = True
    adj = host.adjacency_lists()
    host_deg = [len(a) for a in adj]
    fdeg = {v: sum(1 for w, _ in adj[v] if inside[w]) for v in verts}
    nv = len(verts)
    ne = sum(fdeg.values()) // 2
    bd = sum(host_deg[v] - fdeg[v] for v in verts)
    exc0, bd0 = ne - nv, bd
    check = b is not None and exc0 >= 0 and bd0 <= b * nv
    violations = []
    heap = [v for v in verts if fdeg[v] <= 1]
    heapq.heapify(heap)
    exc = exc0
    while heap:
        v = heapq.heappop(heap)
        if not inside[v] or fdeg[v] > 1:
            continue
        d = fdeg[v]
        inside[v] = False
        nv -= 1
        exc = exc - d + 1
        bd = bd + d - (host_deg[v] - d)
        for w, _ in adj[v]:
            if inside[w]:
                fdeg[w] -= 1
                if fdeg[w] <= 1:
                    heapq.heappush(heap, w)
        if check:
            if exc < exc0:
                violations.append(f"2-core peel: excess {exc} dropped below initial {exc0}")
            if bd > b * nv:
                violations.append(f"2-core peel: boundary {bd} exceeds b*|V|={b * nv}")
    remaining = [v for v in verts if inside[v]]
    sub, _ = host.induced(remaining) if remaining else (Graph(0, []), None)
    return TwoCoreReport(
        two_core=sub,
        vertices=remaining,
        excess=exc,
        boundary=bd,
        initial_excess=exc0,
        initial_boundary=bd0,
        violations=violations,
    )


# -- local structure ---------------------------------------------------------


def ball_stats(g: Graph, v: int, t: int) -> tuple[int, bool]:
    """(number of vertices within distance t of v, whether the ball spans a cycle)."""
    if t < 1:
        raise ValueError("t must be >= 1")
    indptr, nbrs, _ = g.csr
    dist = {v: 0}
    queue = deque([v])
    while queue:
        u = queue.popleft()
        if dist[u] == t:
            continue
        for w in nbrs[indptr[u] : indptr[u + 1]].tolist():
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    ball = dist.keys()
    # each inner edge seen from both ends (loops twice from one end)
    inner = sum(1 for u in ball for w in nbrs[indptr[u] : indptr[u + 1]].tolist() if w in dist) // 2
    return len(dist), inner > len(dist) - 1


def sampled_expansion_check(g: Graph, c: float, trials: int, seed) -> float:
    """Largest |N(U)| / |U| over randomly grown connected sets U of size >= log n."""
    rng = np.random.default_rng(seed)
    adj = g.adjacency_lists()
    target = max(1, math.ceil(math.log(max(g.n, 2))))
    worst = 0.0
    for _ in range(trials):
        start = int(rng.integers(g.n))
        members = {start}
        frontier = [w for w, _ in adj[start] if w != start]
        while len(members) < target and frontier:
            i = int(rng.integers(len(frontier)))
            frontier[i], frontier[-1] = frontier[-1], frontier[i]
            w = frontier.pop()
            if w in members:
                continue
            members.add(w)
            frontier.extend(x for x, _ in adj[w] if x not in members)
        outside = {w for u in members for w, _ in adj[u] if w not in members}
        worst = max(worst, len(outside) / len(members))
    return worst
