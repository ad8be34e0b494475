"""Dense complex linear algebra used throughout the package.

All routines take and return plain ``numpy`` arrays. Tolerances follow a
hybrid absolute/relative policy: a check at tolerance ``tol`` on matrix ``A``
passes when the violation is at most ``tol * max(1, ||A||)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

HERMITIAN_TOL = 1e-9


class SymmetryError(ValueError):
    """Raised when a matrix expected to be Hermitian is not."""


@dataclass(frozen=True)
class EigSystem:
    """Eigenvalues sorted descending, eigenvectors as matching columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_cmatrix(a) -> np.ndarray:
    """Coerce ``a`` to a finite 2-D complex array."""
    arr = np.asarray(a, dtype=complex)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


def _scale(a: np.ndarray) -> float:
    return max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0


def operator_norm(a) -> float:
    """Largest singular value of ``a``."""
    a = as_cmatrix(a)
    if a.size == 0:
        raise ValueError("operator norm of an empty matrix is undefined")
    return float(np.linalg.norm(a, 2))


def hermitian_part_error(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def is_hermitian(a, tol: float = HERMITIAN_TOL) -> bool:
    a = as_cmatrix(a)
    if a.shape[0] != a.shape[1]:
        return False
    return hermitian_part_error(a) <= tol * _scale(a)


def hermitian_eig(a, tol: float = HERMITIAN_TOL) -> EigSystem:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Ties keep the order in which LAPACK returned them (a stable sort on the
    negated spectrum), so repeated calls on the same input are identical.
    """
    a = as_cmatrix(a)
    if a.shape[0] != a.shape[1]:
        raise SymmetryError(f"matrix is not square: {a.shape}")
    if a.size == 0:
        raise ValueError("empty matrix")
    if hermitian_part_error(a) > tol * max(1.0, operator_norm(a)):
        raise SymmetryError("matrix is not Hermitian within tolerance")
    h = 0.5 * (a + a.conj().T)
    w, v = np.linalg.eigh(h)
    order = np.argsort(-w, kind="stable")
    return EigSystem(eigenvalues=w[order], eigenvectors=v[:, order])


def hermitian_norm(a: np.ndarray) -> float:
    """Operator norm of a Hermitian matrix via its spectrum."""
    w = np.linalg.eigvalsh(0.5 * (a + a.conj().T))
    return float(max(abs(w[0]), abs(w[-1])))


def min_eigenvalue(a: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (a + a.conj().T))[0])


def truncation(u, row_count: int, cols: Sequence[int]) -> np.ndarray:
    """First ``row_count`` rows of ``u`` restricted to columns ``cols``.

    ``cols`` are 0-based and their order is preserved.
    """
    u = as_cmatrix(u)
    n_rows, n_cols = u.shape
    if not 0 <= row_count <= n_rows:
        raise ValueError(f"row_count {row_count} outside [0, {n_rows}]")
    idx = np.asarray(list(cols), dtype=int)
    if idx.size and (idx.min() < 0 or idx.max() >= n_cols):
        raise ValueError(f"column index out of range for {n_cols} columns")
    return u[:row_count, idx]


def fourier_matrix(n: int) -> np.ndarray:
    """Unitary DFT matrix with entries ``exp(2 pi i jk / n) / sqrt(n)``."""
    if n < 1:
        raise ValueError("n must be positive")
    j = np.arange(n)
    return np.exp(2j * np.pi * np.outer(j, j) / n) / np.sqrt(n)


def orthonormal_completion(v: np.ndarray, threshold: float = 1e-8) -> np.ndarray:
    """Extend an isometry ``v`` (D x d) to a D x D unitary.

    Canonical basis vectors are projected onto the orthogonal complement of the
    columns collected so far and kept when their residual norm exceeds
    ``threshold``. The result depends only on ``v``.
    """
    v = as_cmatrix(v)
    big, small = v.shape
    basis = [v[:, k] for k in range(small)]
    for k in range(big):
        if len(basis) == big:
            break
        e = np.zeros(big, dtype=complex)
        e[k] = 1.0
        # two passes of Gram-Schmidt for stability
        for _ in range(2):
            for b in basis:
                e = e - b * np.vdot(b, e)
        nrm = np.linalg.norm(e)
        if nrm > threshold:
            basis.append(e / nrm)
    if len(basis) != big:
        raise ValueError("could not complete isometry to a unitary")
    return np.column_stack(basis)


def ldl_hermitian(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unpivoted LDL* factorisation of a Hermitian positive-definite matrix.

    Returns unit lower-triangular ``L`` and the real diagonal ``D`` (as a
    vector) with ``g = L diag(D) L^*``.
    """
    g = as_cmatrix(g)
    n = g.shape[0]
    lower = np.eye(n, dtype=complex)
    diag = np.zeros(n)
    for j in range(n):
        row = lower[j, :j]
        dj = g[j, j].real - float(np.sum(np.abs(row) ** 2 * diag[:j]))
        if dj <= 0:
            raise np.linalg.LinAlgError("Gram matrix is not positive definite")
        diag[j] = dj
        if j + 1 < n:
            tail = g[j + 1:, j] - lower[j + 1:, :j] @ (diag[:j] * row.conj())
            lower[j + 1:, j] = tail / dj
    return lower, diag
