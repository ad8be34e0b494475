"""Simulating a POVM by few-outcome measurements, classical mixing and postselection.

Given a partition of the outcomes into blocks X_1, ..., X_a, each block gets a
sub-measurement that reproduces the target effects on the block (rescaled by
``lam = 1/||sum_{i in X} M_i||``) and sends everything else to a trash
outcome. Mixing the sub-measurements with weights ``q/lam`` gives a POVM L
with ``L_i = q M_i`` and ``L_trash = (1 - q) 1``, where
``q = 1 / sum_blocks ||sum_{i in X} M_i||``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .numerics import hermitian_norm, min_eigenvalue, operator_norm, orthonormal_completion
from .povm import (
    PSD_TOL,
    RANK_CUTOFF,
    NumericalIntegrityError,
    Povm,
    as_state,
    mix,
    validate,
)

DEGENERATE_NORM = 1e-14


class PartitionError(ValueError):
    pass


class DegenerateBlockError(ValueError):
    pass


@dataclass(frozen=True)
class Partition:
    """Disjoint blocks of 0-based outcome indices covering ``range(n)``.

    ``cap`` is the largest allowed block size (m - 1 for m-outcome
    sub-measurements).
    """

    n: int
    blocks: tuple[tuple[int, ...], ...]
    cap: int

    def __post_init__(self):
        blocks = tuple(tuple(int(i) for i in b) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if self.cap < 1:
            raise PartitionError(f"block cap must be >= 1, got {self.cap}")
        seen = [i for b in blocks for i in b]
        if any(len(b) == 0 for b in blocks):
            raise PartitionError("empty block")
        if any(len(b) > self.cap for b in blocks):
            raise PartitionError(f"block larger than cap {self.cap}")
        if len(seen) != len(set(seen)):
            raise PartitionError("blocks overlap")
        if sorted(seen) != list(range(self.n)):
            raise PartitionError(f"blocks do not cover the {self.n} outcomes exactly")

    @classmethod
    def from_labels(cls, blocks: Iterable[Iterable[int]], n: int, cap: int | None = None) -> "Partition":
        """Build from 1-based labels."""
        zero = [tuple(int(i) - 1 for i in b) for b in blocks]
        if cap is None:
            cap = max((len(b) for b in zero), default=1)
        return cls(n, tuple(zero), cap)

    def labels(self) -> list[list[int]]:
        """Blocks as 1-based labels."""
        return [[i + 1 for i in b] for b in self.blocks]

    @property
    def m(self) -> int:
        return self.cap + 1

    def block_of(self) -> np.ndarray:
        """Array mapping each outcome to the index of its block."""
        owner = np.empty(self.n, dtype=int)
        for g, b in enumerate(self.blocks):
            owner[list(b)] = g
        return owner

    def __len__(self) -> int:
        return len(self.blocks)


def block_norm(povm: Povm, block: Sequence[int], use_generator: bool = False) -> float:
    """``||sum_{i in block} M_i||``.

    With ``use_generator`` the value is computed as the squared norm of the
    generator rows indexed by ``block``, which equals the effect-sum norm for
    rank-one POVMs with a recorded generator.
    """
    idx = list(block)
    if use_generator:
        return operator_norm(povm.generator_vectors()[idx]) ** 2
    return hermitian_norm(povm.effects[idx].sum(axis=0))


def block_norms(povm: Povm, partition: Partition, use_generator: bool = False) -> np.ndarray:
    if partition.n != povm.n_outcomes:
        raise PartitionError(f"partition covers {partition.n} outcomes, POVM has {povm.n_outcomes}")
    return np.array([block_norm(povm, b, use_generator) for b in partition.blocks])


def success_probability(target: Povm, partition: Partition, use_generator: bool = False) -> float:
    """``q = 1 / sum_blocks ||sum_{i in X} M_i||``."""
    norms = block_norms(target, partition, use_generator)
    if np.any(norms <= DEGENERATE_NORM):
        raise DegenerateBlockError("a block has zero effect sum")
    return float(1.0 / norms.sum())


@dataclass(frozen=True)
class SubMeasurement:
    """One block's measurement: effects ``lam M_i`` for the block, then the trash effect.

    ``labels[k]`` is the 0-based target outcome of effect k; the trash
    effect (last) carries label ``n``.
    """

    povm: Povm
    labels: tuple[int, ...]
    lam: float

    def embed(self, n: int) -> np.ndarray:
        """Effects placed on the n + 1 labels of the mixture, zeros elsewhere."""
        d = self.povm.dim
        out = np.zeros((n + 1, d, d), dtype=complex)
        out[list(self.labels)] = self.povm.effects
        return out


def build_sub_povm(target: Povm, block: Sequence[int]) -> SubMeasurement:
    n = target.n_outcomes
    block = tuple(int(i) for i in block)
    if not block:
        raise PartitionError("block must be nonempty")
    if min(block) < 0 or max(block) >= n:
        raise PartitionError(f"block {block} outside range({n})")
    total = target.effects[list(block)].sum(axis=0)
    norm = hermitian_norm(total)
    if norm <= DEGENERATE_NORM:
        raise DegenerateBlockError(f"block {block} has zero effect sum")
    lam = 1.0 / norm
    trash = np.eye(target.dim) - lam * total
    worst = min_eigenvalue(trash)
    if worst < -PSD_TOL:
        raise NumericalIntegrityError(f"trash effect has eigenvalue {worst:.3g}")
    effects = np.concatenate([lam * target.effects[list(block)], trash[None]])
    return SubMeasurement(Povm(effects, check=False), block + (n,), lam)


@dataclass(frozen=True)
class SchemeResult:
    target: Povm
    partition: Partition
    lambdas: np.ndarray
    mix_probs: np.ndarray
    q_succ: float
    sub_povms: tuple[SubMeasurement, ...]
    mixture: Povm = field(repr=False)

    @property
    def trash_label(self) -> int:
        return self.target.n_outcomes

    def mean_block_size(self) -> float:
        sizes = np.array([len(b) for b in self.partition.blocks])
        return float(self.mix_probs @ sizes)


def build_scheme(target: Povm, partition: Partition) -> SchemeResult:
    if partition.n != target.n_outcomes:
        raise PartitionError(f"partition covers {partition.n} outcomes, POVM has {target.n_outcomes}")
    subs = tuple(build_sub_povm(target, b) for b in partition.blocks)
    lambdas = np.array([s.lam for s in subs])
    q = float(1.0 / np.sum(1.0 / lambdas))
    probs = q / lambdas
    n = target.n_outcomes
    embedded = [Povm(s.embed(n), check=False) for s in subs]
    mixture = mix(embedded, probs / probs.sum()) if len(subs) > 1 else embedded[0]
    return SchemeResult(target, partition, lambdas, probs, q, subs, mixture)


@dataclass(frozen=True)
class SimulationCheck:
    ok: bool
    mix_prob_deviation: float
    max_effect_deviation: float
    trash_deviation: float
    mixture_rebuild_deviation: float
    invalid_sub_povms: tuple[int, ...]

    def __bool__(self) -> bool:
        return self.ok


def verify_simulation(result: SchemeResult, tol: float = 1e-10) -> SimulationCheck:
    """Check that the mixture reproduces ``q M_i`` and ``(1 - q) 1`` within ``tol``."""
    n, d = result.target.n_outcomes, result.target.dim
    q = result.q_succ
    L = result.mixture.effects
    probs_dev = abs(float(np.sum(result.mix_probs)) - 1.0)
    eff_dev = float(np.max(np.abs(L[:n] - q * result.target.effects)))
    trash_dev = float(np.max(np.abs(L[n] - (1.0 - q) * np.eye(d))))
    rebuilt = sum(p * s.embed(n) for p, s in zip(result.mix_probs, result.sub_povms))
    rebuild_dev = float(np.max(np.abs(rebuilt - L)))
    bad = tuple(g for g, s in enumerate(result.sub_povms)
                if not validate(s.povm, max(tol, 1e-12)).passed)
    ok = (probs_dev <= tol and eff_dev <= tol and trash_dev <= tol
          and rebuild_dev <= tol and not bad and 0.0 < q <= 1.0 + tol)
    return SimulationCheck(ok, probs_dev, eff_dev, trash_dev, rebuild_dev, bad)


def postselected_distribution(result: SchemeResult, state) -> tuple[np.ndarray, float]:
    """Exact law of the non-trash outcomes of the mixture and its total weight."""
    rho = as_state(state).rho
    p = np.einsum("ij,kji->k", rho, result.mixture.effects).real
    n = result.target.n_outcomes
    kept = p[:n].sum()
    return p[:n] / kept, float(kept)


@dataclass
class NaimarkDilation:
    """Projective realisation of a POVM: ``M_i = sum_{k in groups[i]} V^* |k><k| V``.

    Rows listed in ``padding`` are identically zero and never fire on states of
    the source space.
    """

    source: Povm
    isometry: np.ndarray
    groups: tuple[tuple[int, ...], ...]
    padding: tuple[int, ...] = ()
    warnings: tuple[str, ...] = ()
    _unitary: np.ndarray | None = field(default=None, repr=False)

    @property
    def big_dim(self) -> int:
        return self.isometry.shape[0]

    @property
    def rank_dim(self) -> int:
        return self.big_dim - len(self.padding)

    def completed_unitary(self) -> np.ndarray:
        if self._unitary is None:
            self._unitary = orthonormal_completion(self.isometry)
        return self._unitary

    def isometry_error(self) -> float:
        v = self.isometry
        return float(np.max(np.abs(v.conj().T @ v - np.eye(v.shape[1]))))

    def reconstruction_error(self) -> float:
        v = self.isometry
        worst = 0.0
        for i, g in enumerate(self.groups):
            rows = v[list(g)]
            rebuilt = rows.conj().T @ rows
            worst = max(worst, float(np.max(np.abs(rebuilt - self.source.effects[i]))))
        return worst

    def projective_probabilities(self, state) -> np.ndarray:
        """Born law of the computational-basis measurement after the unitary, on ``rho (+) 0``."""
        rho = as_state(state).rho
        w = self.completed_unitary()
        d = rho.shape[0]
        big = np.zeros((self.big_dim, self.big_dim), dtype=complex)
        big[:d, :d] = rho
        return np.einsum("ki,ij,kj->k", w, big, w.conj()).real

    def grouped_probabilities(self, state) -> np.ndarray:
        pk = self.projective_probabilities(state)
        return np.array([pk[list(g)].sum() for g in self.groups])


def naimark_dilate(povm: Povm, pad_to: int | None = None,
                   cutoff: float = RANK_CUTOFF) -> NaimarkDilation:
    """Dilate ``povm`` to a projective measurement of dimension ``sum_i rank(M_i)``.

    Each effect contributes rows ``sqrt(lam_k) <v_k|`` for its eigenpairs above
    ``cutoff * ||M_i||``. ``pad_to`` appends zero rows up to that dimension.
    Eigenvalues within a factor two of the cutoff are reported in ``warnings``.
    """
    rows = []
    groups = []
    notes = []
    for i, e in enumerate(povm.effects):
        w, v = np.linalg.eigh(0.5 * (e + e.conj().T))
        scale = max(abs(w[0]), abs(w[-1]))
        thr = cutoff * scale
        near = (w > 0.5 * thr) & (w < 2.0 * thr)
        if np.any(near):
            notes.append(f"effect {i + 1}: eigenvalue near rank cutoff ({w[near].max():.3g})")
        keep = np.nonzero(w > thr)[0][::-1] if scale > 0 else np.array([], dtype=int)
        start = len(rows)
        for k in keep:
            rows.append(np.sqrt(w[k]) * v[:, k].conj())
        groups.append(tuple(range(start, len(rows))))
    rank_dim = len(rows)
    d = povm.dim
    v = np.array(rows, dtype=complex).reshape(rank_dim, d)
    padding: tuple[int, ...] = ()
    if pad_to is not None:
        if pad_to < rank_dim:
            raise ValueError(f"pad_to={pad_to} is below the rank sum {rank_dim}")
        padding = tuple(range(rank_dim, pad_to))
        v = np.vstack([v, np.zeros((pad_to - rank_dim, d), dtype=complex)])
    if v.shape[0] < d:
        raise NumericalIntegrityError("rank sum below the system dimension")
    for note in notes:
        warnings.warn(note, RuntimeWarning, stacklevel=2)
    return NaimarkDilation(povm, v, tuple(groups), padding, tuple(notes))


def dilate_scheme(result: SchemeResult, pad_to: int | None = None) -> list[NaimarkDilation]:
    """Dilate every sub-measurement of ``result``.

    For rank-one targets ``pad_to`` defaults to ``2 d`` whenever the rank sum
    fits, so each sub-measurement acts on the system plus one qubit.
    """
    d = result.target.dim
    out = []
    for sub in result.sub_povms:
        pad = pad_to
        if pad is None and result.target.is_rank_one():
            rank = int(sub.povm.ranks().sum())
            pad = 2 * d if rank <= 2 * d else None
        out.append(naimark_dilate(sub.povm, pad_to=pad))
    return out
