"""(1:b) Maker-Breaker game loop on graph boards, plus an exact minimax oracle for tiny boards."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Protocol

import numpy as np

from .graphs import Graph
from .unionfind import UnionFind

FREE, MAKER, BREAKER = 0, 1, 2
PLAYER_NAMES = {MAKER: "maker", BREAKER: "breaker"}
MAX_ORACLE_EDGES = 12


class ProtocolError(RuntimeError):
    """A strategy broke the move protocol (wrong count, non-free or repeated edge)."""


class GameState:
    """Board ownership plus O(1) access to free edges.

    Strategies get this object read-only; only ``play`` calls ``claim``.
    """

    def __init__(self, board: Graph, b: int, first: int = MAKER):
        if b < 1:
            raise ValueError(f"bias b must be >= 1, got {b}")
        self.board = board
        self.b = b
        self.first = first
        self.turn = first
        self.ownership = np.zeros(board.m, dtype=np.int8)
        self.history: list[tuple[int, int]] = []
        self.moves: list[tuple[int, list[int]]] = []
        self._free = list(range(board.m))
        self._pos = list(range(board.m))
        self._lowest = 0

    @property
    def free_count(self) -> int:
        return len(self._free)

    def is_free(self, e: int) -> bool:
        return self.ownership[e] == FREE

    def lowest_free(self) -> int | None:
        own = self.ownership
        m = len(own)
        while self._lowest < m and own[self._lowest] != FREE:
            self._lowest += 1
        return self._lowest if self._lowest < m else None

    def lowest_free_excluding(self, exclude, count: int) -> list[int]:
        """Up to ``count`` lowest-id free edges not in ``exclude``."""
        start = self.lowest_free()
        out: list[int] = []
        if start is None:
            return out
        own = self.ownership
        m = len(own)
        e = start
        while e < m and len(out) < count:
            if own[e] == FREE and e not in exclude:
                out.append(e)
            e += 1
        return out

    def random_free(self, rng: random.Random) -> int:
        return self._free[rng.randrange(len(self._free))]

    def free_edges(self) -> list[int]:
        return sorted(self._free)

    def claim(self, e: int, player: int) -> None:
        self.ownership[e] = player
        i = self._pos[e]
        last = self._free[-1]
        self._free[i] = last
        self._pos[last] = i
        self._free.pop()
        self.history.append((player, e))

    def claimed_by(self, player: int) -> np.ndarray:
        return np.flatnonzero(self.ownership == player)

    def last_move_of(self, player: int) -> list[int] | None:
        for who, edges in reversed(self.moves):
            if who == player:
                return edges
        return None


class Strategy(Protocol):
    def next_moves(self, state: GameState) -> list[int]: ...


@dataclass
class GameResult:
    largest_maker_component: int
    maker_component_sizes: list[int]
    rounds: int
    invariant_violations: list[str] = field(default_factory=list)
    info: dict = field(default_factory=dict)
    history: list[tuple[int, int]] = field(default_factory=list)


def largest_component_of_claims(state: GameState, player: int = MAKER) -> int:
    sizes = component_sizes_of_claims(state.board, state.ownership, player)
    return sizes[0] if sizes else 0


def component_sizes_of_claims(board: Graph, ownership, player: int = MAKER) -> list[int]:
    """Vertex counts of the components spanned by one player's edges."""
    ids = np.flatnonzero(np.asarray(ownership) == player)
    if len(ids) == 0:
        return []
    uf = UnionFind(board.n)
    touched = set()
    for u, v in board.edges[ids].tolist():
        uf.union(u, v)
        touched.add(u)
        touched.add(v)
    counts: dict[int, int] = {}
    for x in touched:
        r = uf.find(x)
        counts[r] = counts.get(r, 0) + 1
    return sorted(counts.values(), reverse=True)


def _notify(strategy, state: GameState, player: int, edges: list[int]) -> None:
    hook = getattr(strategy, "observe", None)
    if hook is not None:
        hook(state, player, edges)


def play(
    board: Graph,
    b: int,
    maker,
    breaker,
    first: int = MAKER,
    seed=None,
    keep_history: bool = False,
) -> GameResult:
    """Alternate Maker (1 edge) and Breaker (b edges) until the board is claimed."""
    state = GameState(board, b, first)
    for strat in (maker, breaker):
        start = getattr(strat, "start", None)
        if start is not None:
            start(state)
    rounds = 0
    player = first
    while state.free_count:
        strat = maker if player == MAKER else breaker
        want = 1 if player == MAKER else min(b, state.free_count)
        edges = [int(e) for e in strat.next_moves(state)]
        if len(edges) != want:
            raise ProtocolError(
                f"{PLAYER_NAMES[player]} returned {len(edges)} edges, expected {want}"
            )
        if len(set(edges)) != len(edges):
            raise ProtocolError(f"{PLAYER_NAMES[player]} repeated an edge in {edges}")
        for e in edges:
            if not 0 <= e < board.m or state.ownership[e] != FREE:
                raise ProtocolError(f"{PLAYER_NAMES[player]} claimed non-free edge {e}")
        for e in edges:
            state.claim(e, player)
        state.moves.append((player, edges))
        if player == first:
            rounds += 1
        _notify(maker, state, player, edges)
        _notify(breaker, state, player, edges)
        player = BREAKER if player == MAKER else MAKER
        state.turn = player
    for strat in (maker, breaker):
        finish = getattr(strat, "finish", None)
        if finish is not None:
            finish(state)
    sizes = component_sizes_of_claims(board, state.ownership, MAKER)
    violations: list[str] = []
    info: dict = {}
    for strat in (maker, breaker):
        violations.extend(getattr(strat, "violations", []))
        info.update(getattr(strat, "info", {}))
    return GameResult(
        largest_maker_component=sizes[0] if sizes else 0,
        maker_component_sizes=sizes,
        rounds=rounds,
        invariant_violations=violations,
        info=info,
        history=list(state.history) if keep_history else [],
    )


# -- simple strategies -------------------------------------------------------


class RandomStrategy:
    """Uniformly random free edges (distinct within a move)."""

    def __init__(self, seed=None):
        self.rng = random.Random(seed)

    def next_moves(self, state: GameState) -> list[int]:
        want = 1 if state.turn == MAKER else min(state.b, state.free_count)
        picks: list[int] = []
        while len(picks) < want:
            e = state.random_free(self.rng)
            if e not in picks:
                picks.append(e)
        return picks


def random_strategy(seed=None) -> RandomStrategy:
    return RandomStrategy(seed)


class LowestFreeStrategy:
    """Always the lowest-id free edges."""

    def next_moves(self, state: GameState) -> list[int]:
        want = 1 if state.turn == MAKER else min(state.b, state.free_count)
        return state.free_edges()[:want]


# -- exact game value --------------------------------------------------------


def _component_value(board: Graph, mask: int) -> int:
    if mask == 0:
        return 0
    uf = UnionFind(board.n)
    touched = set()
    for e, (u, v) in enumerate(board.edges.tolist()):
        if mask >> e & 1:
            uf.union(u, v)
            touched.add(u)
            touched.add(v)
    counts: dict[int, int] = {}
    for x in touched:
        r = uf.find(x)
        counts[r] = counts.get(r, 0) + 1
    return max(counts.values())


class MinimaxOracle:
    """Exact s_b^* by memoised search; Breaker's move is b successive single steps."""

    def __init__(self, board: Graph, b: int):
        if board.m > MAX_ORACLE_EDGES:
            raise ValueError(f"board has {board.m} edges; oracle handles at most {MAX_ORACLE_EDGES}")
        if b < 1:
            raise ValueError(f"bias b must be >= 1, got {b}")
        self.board = board
        self.b = b
        self.full = (1 << board.m) - 1
        self.value = lru_cache(maxsize=None)(self._value)
        self.final_value = lru_cache(maxsize=None)(lambda mask: _component_value(board, mask))

    def _value(self, maker: int, breaker: int, player: int, steps_left: int) -> int:
        taken = maker | breaker
        if taken == self.full:
            return self.final_value(maker)
        free = [e for e in range(self.board.m) if not taken >> e & 1]
        if player == MAKER:
            return max(self.value(maker | 1 << e, breaker, BREAKER, self.b) for e in free)
        results = []
        for e in free:
            nb = breaker | 1 << e
            if steps_left > 1 and (maker | nb) != self.full:
                results.append(self.value(maker, nb, BREAKER, steps_left - 1))
            else:
                results.append(self.value(maker, nb, MAKER, 0))
        return min(results)

    def game_value(self, first: int = MAKER) -> int:
        return self.value(0, 0, first, self.b if first == BREAKER else 0)

    def best_step(self, state: GameState, steps_left: int) -> int:
        maker = _mask(state.ownership, MAKER)
        breaker = _mask(state.ownership, BREAKER)
        taken = maker | breaker
        best, best_val = None, None
        for e in range(self.board.m):
            if taken >> e & 1:
                continue
            if state.turn == MAKER:
                val = self.value(maker | 1 << e, breaker, BREAKER, self.b)
                better = best_val is None or val > best_val
            else:
                nb = breaker | 1 << e
                if steps_left > 1 and (maker | nb) != self.full:
                    val = self.value(maker, nb, BREAKER, steps_left - 1)
                else:
                    val = self.value(maker, nb, MAKER, 0)
                better = best_val is None or val < best_val
            if better:
                best, best_val = e, val
        return best


def _mask(ownership, player: int) -> int:
    out = 0
    for e, o in enumerate(ownership.tolist()):
        if o == player:
            out |= 1 << e
    return out


def minimax_component_value(board: Graph, b: int, first: int = MAKER) -> int:
    return MinimaxOracle(board, b).game_value(first)


class OptimalStrategy:
    """Plays optimally for either side using the oracle's memo table."""

    def __init__(self, oracle: MinimaxOracle):
        self.oracle = oracle

    def next_moves(self, state: GameState) -> list[int]:
        if state.turn == MAKER:
            return [self.oracle.best_step(state, 0)]
        want = min(state.b, state.free_count)
        picks: list[int] = []
        own = state.ownership.copy()
        shadow = _ShadowState(state, own)
        for i in range(want):
            e = self.oracle.best_step(shadow, want - i)
            picks.append(e)
            own[e] = BREAKER
        return picks


class _ShadowState:
    def __init__(self, state: GameState, ownership):
        self.ownership = ownership
        self.turn = state.turn
