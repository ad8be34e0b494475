"""Choosing the partition: standard, random, best-of-k and greedy local search."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .povm import Povm
from .rng import stream
from .scheme import Partition, block_norms

IMPROVE_EPS = 1e-12


def _chop(order, m: int) -> tuple[tuple[int, ...], ...]:
    size = m - 1
    return tuple(tuple(int(i) for i in order[s:s + size]) for s in range(0, len(order), size))


def standard_partition(n: int, m: int) -> Partition:
    """Consecutive blocks of size m - 1, the last possibly shorter."""
    if m < 2:
        raise ValueError(f"m must be at least 2, got {m}")
    if n < 1:
        raise ValueError("n must be positive")
    return Partition(n, _chop(np.arange(n), m), m - 1)


def random_partition(n: int, m: int, seed: int, *path: int) -> Partition:
    """A uniformly random permutation of the outcomes chopped like the standard partition."""
    if m < 2:
        raise ValueError(f"m must be at least 2, got {m}")
    order = stream(seed, *path).permutation(n)
    return Partition(n, _chop(order, m), m - 1)


@dataclass
class SearchResult:
    partition: Partition
    q_succ: float
    evaluated: list[float] = field(default_factory=list)


def best_of_random(target: Povm, m: int, k: int, seed: int, *path: int,
                   use_generator: bool = False) -> SearchResult:
    """Best of ``k`` random partitions; draw ``t`` uses stream ``(seed, *path, t)``.

    ``evaluated`` holds every candidate's success probability in draw order;
    ties go to the earliest draw.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    n = target.n_outcomes
    best = None
    qs = []
    for t in range(k):
        part = random_partition(n, m, seed, *path, t)
        q = 1.0 / float(block_norms(target, part, use_generator).sum())
        qs.append(q)
        if best is None or q > best.q_succ:
            best = SearchResult(part, q)
    best.evaluated = qs
    return best


class BlockState:
    """Running block sums for cheap re-evaluation after moving outcomes."""

    def __init__(self, target: Povm, partition: Partition):
        self.effects = target.effects
        self.cap = partition.cap
        self.blocks = [list(b) for b in partition.blocks]
        self.owner = partition.block_of()
        self.sums = np.array([self.effects[b].sum(axis=0) for b in self.blocks])
        self.norms = np.array([self._norm(s) for s in self.sums])

    @staticmethod
    def _norm(s: np.ndarray) -> float:
        return float(np.linalg.eigvalsh(s)[-1])

    @property
    def total(self) -> float:
        return float(self.norms.sum())

    def q_succ(self) -> float:
        return 1.0 / self.total

    def relocate_delta(self, i: int, dst: int) -> tuple[float, np.ndarray, np.ndarray]:
        src = self.owner[i]
        s_src = self.sums[src] - self.effects[i]
        s_dst = self.sums[dst] + self.effects[i]
        n_src = self._norm(s_src) if len(self.blocks[src]) > 1 else 0.0
        n_dst = self._norm(s_dst)
        delta = n_src + n_dst - self.norms[src] - self.norms[dst]
        return delta, s_src, s_dst

    def apply_relocate(self, i: int, dst: int, s_src, s_dst) -> None:
        src = self.owner[i]
        self.blocks[src].remove(i)
        self.blocks[dst].append(i)
        self.owner[i] = dst
        self.sums[src], self.sums[dst] = s_src, s_dst
        self.norms[src] = self._norm(s_src) if self.blocks[src] else 0.0
        self.norms[dst] = self._norm(s_dst)

    def swap_delta(self, i: int, j: int) -> tuple[float, np.ndarray, np.ndarray]:
        a, b = self.owner[i], self.owner[j]
        s_a = self.sums[a] - self.effects[i] + self.effects[j]
        s_b = self.sums[b] - self.effects[j] + self.effects[i]
        delta = self._norm(s_a) + self._norm(s_b) - self.norms[a] - self.norms[b]
        return delta, s_a, s_b

    def apply_swap(self, i: int, j: int, s_a, s_b) -> None:
        a, b = self.owner[i], self.owner[j]
        self.blocks[a].remove(i)
        self.blocks[a].append(j)
        self.blocks[b].remove(j)
        self.blocks[b].append(i)
        self.owner[i], self.owner[j] = b, a
        self.sums[a], self.sums[b] = s_a, s_b
        self.norms[a], self.norms[b] = self._norm(s_a), self._norm(s_b)

    def partition(self) -> Partition:
        blocks = [tuple(sorted(b)) for b in self.blocks if b]
        blocks.sort()
        return Partition(len(self.owner), tuple(blocks), self.cap)


@dataclass
class GreedyResult:
    partition: Partition
    q_succ: float
    trace: list[float]
    passes: int


def greedy_improve(target: Povm, start: Partition, max_passes: int = 20, seed: int = 0) -> GreedyResult:
    """First-improvement hill climbing over relocations and pairwise swaps.

    A move is taken when it raises the success probability by more than
    ``IMPROVE_EPS``. Outcomes are scanned in a seeded random order; the search
    stops after a pass without improvement or after ``max_passes`` passes.
    ``trace`` records the success probability after every accepted move,
    starting with the initial value.
    """
    state = BlockState(target, start)
    n = target.n_outcomes
    order = stream(seed).permutation(n)
    trace = [state.q_succ()]
    passes = 0
    for passes in range(1, max_passes + 1):
        improved = False
        for i in order:
            i = int(i)
            for dst in range(len(state.blocks)):
                if dst == state.owner[i] or len(state.blocks[dst]) >= state.cap or not state.blocks[dst]:
                    continue
                delta, s_src, s_dst = state.relocate_delta(i, dst)
                new_q = 1.0 / (state.total + delta)
                if new_q > trace[-1] + IMPROVE_EPS:
                    state.apply_relocate(i, dst, s_src, s_dst)
                    trace.append(state.q_succ())
                    improved = True
            for j in order:
                j = int(j)
                if j <= i or state.owner[j] == state.owner[i]:
                    continue
                delta, s_a, s_b = state.swap_delta(i, j)
                new_q = 1.0 / (state.total + delta)
                if new_q > trace[-1] + IMPROVE_EPS:
                    state.apply_swap(i, j, s_a, s_b)
                    trace.append(state.q_succ())
                    improved = True
        if not improved:
            break
    final = state.partition() if len(trace) > 1 else start
    return GreedyResult(final, trace[-1], trace, passes)
