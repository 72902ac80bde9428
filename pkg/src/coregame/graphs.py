"""Sparse random graph generation and degree-sequence utilities.

Graphs are stored as an ``(m, 2)`` integer edge array whose row index is the
edge id; adjacency is derived in CSR form on first use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .numerics import DomainError, truncated_poisson_pmf


class SamplingFailure(RuntimeError):
    def __init__(self, tries: int):
        super().__init__(f"no simple graph after {tries} configuration draws")
        self.tries = tries


class Graph:
    """Undirected multigraph on vertices 0..n-1 with stable edge ids."""

    def __init__(self, n: int, edges, simple: bool | None = None):
        self.n = int(n)
        arr = np.asarray(edges, dtype=np.int64)
        if arr.size == 0:
            arr = np.zeros((0, 2), dtype=np.int64)
        arr = arr.reshape(-1, 2)
        if arr.size and (arr.min() < 0 or arr.max() >= self.n):
            raise DomainError("edge endpoint out of range")
        arr.setflags(write=False)
        self.edges = arr
        self._csr = None
        self.simple = self._check_simple() if simple is None else simple

    @property
    def m(self) -> int:
        return len(self.edges)

    def _check_simple(self) -> bool:
        if self.m == 0:
            return True
        u, v = self.edges[:, 0], self.edges[:, 1]
        if np.any(u == v):
            return False
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        keys = lo * self.n + hi
        return len(np.unique(keys)) == self.m

    def is_simple(self) -> bool:
        return self._check_simple()

    def degrees(self) -> np.ndarray:
        # loops count twice
        return np.bincount(self.edges.ravel(), minlength=self.n).astype(np.int64)

    def _build_csr(self):
        m = self.m
        ends = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        nbrs = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        eids = np.concatenate([np.arange(m), np.arange(m)])
        # a loop appears twice in its vertex's list, matching degree 2
        order = np.lexsort((eids, ends))
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(ends, minlength=self.n), out=indptr[1:])
        self._csr = (indptr, nbrs[order], eids[order])

    @property
    def csr(self):
        if self._csr is None:
            self._build_csr()
        return self._csr

    def incident(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        """(neighbours, edge ids) of v, sorted by edge id."""
        indptr, nbrs, eids = self.csr
        return nbrs[indptr[v] : indptr[v + 1]], eids[indptr[v] : indptr[v + 1]]

    def adjacency_lists(self) -> list[list[tuple[int, int]]]:
        """Per-vertex lists of (neighbour, edge id) as plain Python ints."""
        indptr, nbrs, eids = self.csr
        nb, ei = nbrs.tolist(), eids.tolist()
        ip = indptr.tolist()
        return [list(zip(nb[ip[v] : ip[v + 1]], ei[ip[v] : ip[v + 1]])) for v in range(self.n)]

    def edge_list(self) -> list[tuple[int, int]]:
        return [tuple(e) for e in self.edges.tolist()]

    def induced(self, vertices) -> tuple["Graph", np.ndarray]:
        """Induced subgraph renumbered 0..len-1 in increasing original order.

        Returns the subgraph and the new-id -> original-id map.
        """
        verts = np.unique(np.asarray(list(vertices) if not isinstance(vertices, np.ndarray) else vertices, dtype=np.int64))
        new_id = np.full(self.n, -1, dtype=np.int64)
        new_id[verts] = np.arange(len(verts))
        if self.m:
            a, b = new_id[self.edges[:, 0]], new_id[self.edges[:, 1]]
            keep = (a >= 0) & (b >= 0)
            sub = np.stack([a[keep], b[keep]], axis=1)
        else:
            sub = np.zeros((0, 2), dtype=np.int64)
        return Graph(len(verts), sub), verts

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Graph)
            and self.n == other.n
            and np.array_equal(self.edges, other.edges)
        )

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m}, simple={self.simple})"


# -- named small graphs used throughout the tests ----------------------------


def complete_graph(n: int) -> Graph:
    return Graph(n, [(i, j) for j in range(n) for i in range(j)])


def cycle_graph(n: int) -> Graph:
    return Graph(n, [(i, (i + 1) % n) for i in range(n)])


def path_graph(n: int) -> Graph:
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def star_graph(leaves: int) -> Graph:
    return Graph(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


# -- Erdos-Renyi -------------------------------------------------------------


def _pair_from_index(idx: np.ndarray) -> np.ndarray:
    """Map linear index over pairs (i < j), ordered by j then i, to (i, j)."""
    idx = idx.astype(np.int64)
    j = ((1.0 + np.sqrt(1.0 + 8.0 * idx.astype(np.float64))) / 2.0).astype(np.int64)
    # float rounding can be off by one either way
    base = j * (j - 1) // 2
    over = base > idx
    j[over] -= 1
    base = j * (j - 1) // 2
    under = (j + 1) * j // 2 <= idx
    j[under] += 1
    base = j * (j - 1) // 2
    return np.stack([idx - base, j], axis=1)


def gen_gnp(n: int, p: float, seed) -> Graph:
    """G(n, p) by geometric skipping over the ordered pair list."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must be in [0, 1], got {p}")
    total = n * (n - 1) // 2
    if p == 0.0 or total == 0:
        return Graph(n, [], simple=True)
    if p == 1.0:
        return Graph(n, _pair_from_index(np.arange(total)), simple=True)
    rng = np.random.default_rng(seed)
    chunks = []
    pos = -1
    batch = int(total * p * 1.05) + 64
    while True:
        # tiny p saturates at int64 max; any gap past the end is equivalent
        gaps = np.minimum(rng.geometric(p, size=batch), total + 1)
        positions = pos + np.cumsum(gaps)
        if positions[-1] >= total:
            chunks.append(positions[positions < total])
            break
        chunks.append(positions)
        pos = int(positions[-1])
        batch = max(64, batch // 4)
    idx = np.concatenate(chunks)
    return Graph(n, _pair_from_index(idx), simple=True)


def gen_gnm(n: int, m: int, seed) -> Graph:
    """Uniform simple graph with n vertices and m edges, edges in pair-list order."""
    total = n * (n - 1) // 2
    if not 0 <= m <= total:
        raise DomainError(f"m must be in [0, {total}], got {m}")
    rng = np.random.default_rng(seed)
    if m > total // 2:
        idx = np.sort(rng.choice(total, size=m, replace=False))
    else:
        chosen = np.zeros(0, dtype=np.int64)
        while len(chosen) < m:
            extra = rng.integers(0, total, size=int((m - len(chosen)) * 1.1) + 8)
            chosen = np.unique(np.concatenate([chosen, extra]))
        # drop a uniform subset of the surplus
        if len(chosen) > m:
            chosen = np.sort(rng.choice(chosen, size=m, replace=False))
        idx = chosen
    return Graph(n, _pair_from_index(idx), simple=True)


# -- configuration model -----------------------------------------------------


def _as_degrees(degrees) -> np.ndarray:
    d = np.asarray(degrees, dtype=np.int64)
    if d.size and d.min() < 0:
        raise DomainError("negative degree")
    return d


def gen_configuration(degrees, seed) -> Graph:
    """Multigraph from a uniformly random perfect matching of half-edges."""
    d = _as_degrees(degrees)
    if int(d.sum()) % 2:
        raise DomainError("degree sum is odd")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    half = np.repeat(np.arange(len(d)), d)
    rng.shuffle(half)
    return Graph(len(d), half.reshape(-1, 2))


def gen_simple_from_sequence(degrees, seed, max_tries: int = 10_000) -> tuple[Graph, int]:
    """Rejection-sample configurations until one is simple.

    Returns the graph and the number of draws used.
    """
    d = _as_degrees(degrees)
    if int(d.sum()) % 2:
        raise DomainError("degree sum is odd")
    rng = np.random.default_rng(seed)
    for tries in range(1, max_tries + 1):
        g = gen_configuration(d, rng)
        if g.simple:
            return g, tries
    raise SamplingFailure(max_tries)


def truncated_poisson_table(k: int, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Support values and CDF of Z_k(lam), cut where the tail drops below 1e-17."""
    values, probs = [], []
    j = k
    acc = 0.0
    while True:
        pr = truncated_poisson_pmf(k, lam, j)
        values.append(j)
        probs.append(pr)
        acc += pr
        if j > lam and 1.0 - acc < 1e-16:
            break
        j += 1
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    return np.asarray(values, dtype=np.int64), cdf


def sample_core_like_sequence(n_hat: int, k: int, lam: float, seed) -> np.ndarray:
    """n_hat iid draws of Z_k(lam); the whole sequence is redrawn until the sum is even."""
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    if lam <= 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    values, cdf = truncated_poisson_table(k, lam)
    rng = np.random.default_rng(seed)
    while True:
        draws = values[np.searchsorted(cdf, rng.random(n_hat), side="right").clip(max=len(values) - 1)]
        if int(draws.sum()) % 2 == 0:
            return draws


# -- histograms --------------------------------------------------------------


@dataclass
class DegreeHistogram:
    counts: dict[int, int]
    n: int

    def fractions(self) -> dict[int, float]:
        return {j: c / self.n for j, c in self.counts.items()} if self.n else {}


def histogram_of_degrees(degrees) -> DegreeHistogram:
    d = np.asarray(degrees, dtype=np.int64)
    counts = np.bincount(d) if d.size else np.zeros(0, dtype=np.int64)
    return DegreeHistogram({j: int(c) for j, c in enumerate(counts) if c}, len(d))


def degree_histogram(g: Graph) -> DegreeHistogram:
    return histogram_of_degrees(g.degrees())


def lambda_of_sequence(degrees) -> float:
    """(1/2) sum [d]_2 / sum d, the exponent parameter of the simplicity probability."""
    d = _as_degrees(degrees)
    total = int(d.sum())
    if total == 0:
        raise DomainError("empty degree sum")
    return 0.5 * float((d * (d - 1)).sum()) / total


def simple_probability_estimate(degrees) -> float:
    lam = lambda_of_sequence(degrees)
    return math.exp(-lam * (lam + 1.0))


# -- serialization -----------------------------------------------------------


def write_graph(g: Graph, path) -> None:
    lines = [f"{g.n} {g.m}"]
    lines.extend(f"{u} {v}" for u, v in g.edges.tolist())
    text = "\n".join(lines) + "\n"
    if path == "-" or path is None:
        import sys

        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def read_graph(path) -> Graph:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: line 1: expected 'n m'")
        n, m = int(header[0]), int(header[1])
        edges = np.loadtxt(fh, dtype=np.int64, ndmin=2) if m else np.zeros((0, 2), dtype=np.int64)
    if len(edges) != m:
        raise ValueError(f"{path}: header declares {m} edges, found {len(edges)}")
    return Graph(n, edges.reshape(-1, 2))
