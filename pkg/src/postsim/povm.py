"""POVMs, states and the elementary operations on them.

Outcome indices are 0-based inside the library. Anything user-facing
(files, CLI output, partitions on disk) uses 1-based labels.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .numerics import as_cmatrix, hermitian_part_error

PSD_TOL = 1e-9
COMPLETENESS_TOL = 1e-8
CLIP_TOL = 1e-10
RENORM_TOL = 1e-9
RANK_CUTOFF = 1e-12


class StructuralError(ValueError):
    """Shapes or dimensions do not fit together."""


class NumericalIntegrityError(ArithmeticError):
    """A computed quantity violates a hard numerical guarantee."""


class InvalidPovmError(ValueError):
    """Effects fail positivity or completeness."""


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    min_eigenvalue: float
    max_completeness_deviation: float
    max_hermiticity_deviation: float
    problems: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "min_eigenvalue": self.min_eigenvalue,
            "max_completeness_deviation": self.max_completeness_deviation,
            "max_hermiticity_deviation": self.max_hermiticity_deviation,
            "problems": list(self.problems),
        }


def _stack_effects(effects) -> np.ndarray:
    if isinstance(effects, np.ndarray) and effects.ndim == 3:
        arr = effects.astype(complex, copy=True)
    else:
        mats = [np.asarray(e, dtype=complex) for e in effects]
        if not mats:
            raise StructuralError("a POVM needs at least one effect")
        shapes = {m.shape for m in mats}
        if len(shapes) != 1:
            raise StructuralError(f"effects have mismatched shapes: {sorted(shapes)}")
        arr = np.stack(mats)
    if arr.ndim != 3 or arr.shape[0] < 1 or arr.shape[1] != arr.shape[2]:
        raise StructuralError(f"effects must be n square matrices, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise StructuralError("effects contain non-finite entries")
    return arr


class Povm:
    """An ordered tuple of effects on C^d.

    ``generator`` optionally records an ``n x k`` matrix (k >= d) whose row j,
    restricted to the first d columns, is the vector ``v_j`` with
    ``M_j = v_j^dagger v_j`` (entrywise ``(M_j)_{il} = conj(V_ji) V_jl``).
    """

    def __init__(self, effects, label: str | None = None, generator=None,
                 check: bool = True, tol: float = COMPLETENESS_TOL):
        arr = _stack_effects(effects)
        arr.setflags(write=False)
        self._effects = arr
        self.label = label
        if generator is not None:
            gen = as_cmatrix(generator).copy()
            if gen.shape[0] != arr.shape[0] or gen.shape[1] < arr.shape[1]:
                raise StructuralError(
                    f"generator shape {gen.shape} incompatible with n={arr.shape[0]}, d={arr.shape[1]}")
            gen.setflags(write=False)
            generator = gen
        self.generator = generator
        if check:
            report = validate(self, tol)
            if not report.passed:
                raise InvalidPovmError("; ".join(report.problems))

    @property
    def effects(self) -> np.ndarray:
        return self._effects

    @property
    def dim(self) -> int:
        return self._effects.shape[1]

    @property
    def n_outcomes(self) -> int:
        return self._effects.shape[0]

    def __len__(self) -> int:
        return self.n_outcomes

    def __getitem__(self, i: int) -> np.ndarray:
        return self._effects[i]

    def __repr__(self) -> str:
        tag = f" {self.label!r}" if self.label else ""
        return f"Povm{tag}(d={self.dim}, n={self.n_outcomes})"

    def weights(self) -> np.ndarray:
        """Traces of the effects."""
        return np.einsum("kii->k", self._effects).real.copy()

    def ranks(self, cutoff: float = RANK_CUTOFF) -> np.ndarray:
        out = np.zeros(self.n_outcomes, dtype=int)
        for k, e in enumerate(self._effects):
            w = np.linalg.eigvalsh(0.5 * (e + e.conj().T))
            scale = max(abs(w[0]), abs(w[-1]))
            if scale > 0:
                out[k] = int(np.sum(w > cutoff * scale))
        return out

    def is_rank_one(self, cutoff: float = RANK_CUTOFF) -> bool:
        return bool(np.all(self.ranks(cutoff) <= 1))

    def generator_vectors(self) -> np.ndarray:
        """The n x d matrix of rows ``v_j`` recorded at construction."""
        if self.generator is None:
            raise ValueError("POVM has no recorded generator")
        return self.generator[:, : self.dim]


def basis_measurement(d: int) -> Povm:
    effects = np.zeros((d, d, d), dtype=complex)
    effects[np.arange(d), np.arange(d), np.arange(d)] = 1.0
    return Povm(effects, label=f"basis-{d}", generator=np.eye(d))


def trivial_povm(d: int) -> Povm:
    return Povm([np.eye(d)], label="trivial")


def validate(povm: Povm, tol: float = COMPLETENESS_TOL) -> ValidationReport:
    """Check Hermiticity, positivity and completeness of ``povm``.

    Positivity uses the fixed threshold ``-PSD_TOL`` on the smallest
    eigenvalue, Hermiticity ``PSD_TOL`` entrywise, completeness ``tol``.
    """
    effects = povm.effects
    d = povm.dim
    herm = max(hermitian_part_error(e) for e in effects)
    sym = 0.5 * (effects + np.conj(np.swapaxes(effects, 1, 2)))
    min_eig = float(np.min(np.linalg.eigvalsh(sym)[:, 0]))
    dev = float(np.max(np.abs(effects.sum(axis=0) - np.eye(d))))
    problems = []
    if herm > PSD_TOL:
        problems.append(f"hermiticity: deviation {herm:.3g}")
    if min_eig < -PSD_TOL:
        problems.append(f"positivity: min eigenvalue {min_eig:.3g}")
    if dev > tol:
        problems.append(f"completeness: deviation {dev:.3g}")
    return ValidationReport(not problems, min_eig, dev, herm, tuple(problems))


class QuantumState:
    """Density matrix on C^d."""

    def __init__(self, rho, tol: float = PSD_TOL):
        rho = as_cmatrix(rho).copy()
        if rho.shape[0] != rho.shape[1]:
            raise StructuralError(f"density matrix must be square, got {rho.shape}")
        if hermitian_part_error(rho) > tol:
            raise ValueError("density matrix is not Hermitian")
        rho = 0.5 * (rho + rho.conj().T)
        if abs(np.trace(rho).real - 1.0) > tol:
            raise ValueError(f"density matrix trace {np.trace(rho).real} != 1")
        if np.linalg.eigvalsh(rho)[0] < -tol:
            raise ValueError("density matrix is not positive semidefinite")
        rho.setflags(write=False)
        self.rho = rho

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    @classmethod
    def pure(cls, psi) -> "QuantumState":
        psi = np.asarray(psi, dtype=complex).ravel()
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def basis(cls, d: int, i: int) -> "QuantumState":
        e = np.zeros(d, dtype=complex)
        e[i] = 1.0
        return cls.pure(e)

    @classmethod
    def maximally_mixed(cls, d: int) -> "QuantumState":
        return cls(np.eye(d) / d)

    def __repr__(self) -> str:
        return f"QuantumState(d={self.dim})"


def as_state(state) -> QuantumState:
    return state if isinstance(state, QuantumState) else QuantumState(state)


@dataclass(frozen=True)
class StochasticMap:
    """Column-stochastic matrix ``q[i, j] = q(i|j)``."""

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        q = np.asarray(self.matrix, dtype=float)
        if q.ndim != 2:
            raise StructuralError("stochastic map must be a matrix")
        if np.any(q < 0):
            raise ValueError("stochastic map has negative entries")
        if np.max(np.abs(q.sum(axis=0) - 1.0)) > 1e-12:
            raise ValueError("columns of a stochastic map must sum to 1")
        object.__setattr__(self, "matrix", q)

    @classmethod
    def from_grouping(cls, groups: Sequence[Sequence[int]], n_in: int) -> "StochasticMap":
        """Deterministic coarse-graining; ``groups[i]`` lists inputs sent to output i."""
        q = np.zeros((len(groups), n_in))
        for i, g in enumerate(groups):
            q[i, list(g)] = 1.0
        return cls(q)


def born(povm: Povm, state) -> np.ndarray:
    """Outcome distribution ``p_i = tr(rho M_i)``."""
    state = as_state(state)
    if state.dim != povm.dim:
        raise StructuralError(f"state dimension {state.dim} != POVM dimension {povm.dim}")
    p = np.einsum("ij,kji->k", state.rho, povm.effects).real
    if np.any(p < -CLIP_TOL):
        raise NumericalIntegrityError(f"negative probability {p.min():.3g}")
    p = np.clip(p, 0.0, None)
    total = p.sum()
    if abs(total - 1.0) > RENORM_TOL:
        raise NumericalIntegrityError(f"probabilities sum to {total!r}")
    return p / total


def post_process(povm: Povm, qmap: StochasticMap) -> Povm:
    """Relabel outcomes: ``Q(M)_i = sum_j q(i|j) M_j``."""
    q = qmap.matrix
    if q.shape[1] != povm.n_outcomes:
        raise StructuralError(f"map takes {q.shape[1]} inputs, POVM has {povm.n_outcomes} outcomes")
    return Povm(np.einsum("ij,jkl->ikl", q, povm.effects))


def mix(povms: Sequence[Povm], weights) -> Povm:
    """Effectwise convex combination."""
    w = np.asarray(weights, dtype=float)
    if len(povms) != w.size or not povms:
        raise StructuralError("need one weight per POVM")
    if np.any(w < 0) or abs(w.sum() - 1.0) > RENORM_TOL:
        raise ValueError("mixing weights must form a probability vector")
    shape = povms[0].effects.shape
    for p in povms:
        if p.effects.shape != shape:
            raise StructuralError(f"cannot mix POVMs of shapes {shape} and {p.effects.shape}")
    stacked = np.stack([p.effects for p in povms])
    return Povm(np.tensordot(w, stacked, axes=1))


def depolarize(povm: Povm, eta: float, mode: str = "outcomes") -> Povm:
    """White-noise the effects with visibility ``eta``.

    ``mode="outcomes"``: ``eta M_i + (1 - eta) 1/n`` (noise on the dilated circuit).
    ``mode="trace"``: ``eta M_i + (1 - eta) tr(M_i) 1/d`` (depolarising channel on effects).
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"visibility {eta} outside [0, 1]")
    n, d = povm.n_outcomes, povm.dim
    eye = np.eye(d)
    if mode == "outcomes":
        noise = np.broadcast_to(eye / n, povm.effects.shape)
    elif mode == "trace":
        noise = povm.weights()[:, None, None] * eye / d
    else:
        raise ValueError(f"unknown depolarizing mode {mode!r}")
    return Povm(eta * povm.effects + (1.0 - eta) * noise, label=povm.label)


def tvd(p, q) -> float:
    """Total variation distance ``(1/2) sum |p_i - q_i|``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise StructuralError(f"length mismatch: {p.shape} vs {q.shape}")
    return 0.5 * float(np.abs(p - q).sum())
