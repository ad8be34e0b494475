"""Measurement families: Haar-random, Weyl-Heisenberg covariant, SIC and Fourier."""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.linalg import solve_triangular

from .numerics import fourier_matrix, ldl_hermitian
from .povm import Povm
from .rng import complex_gaussian, stream

DEFAULT_ALPHA = 0.5 + 0.5j
SIC_OVERLAP_TOL = 1e-6
FIDUCIAL_NORM_TOL = 1e-6


class NotASicError(ValueError):
    pass


def _rows_to_povm(vectors: np.ndarray, label: str) -> Povm:
    """Rank-one POVM with ``M_j = v_j^dagger v_j`` for rows ``v_j`` of ``vectors``."""
    effects = np.einsum("ji,jl->jil", vectors.conj(), vectors)
    return Povm(effects, label=label, generator=vectors)


def haar_unitary(n: int, seed: int, *path: int) -> np.ndarray:
    """Haar-distributed n x n unitary (QR of a Ginibre matrix with phase fix)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    z = complex_gaussian(stream(seed, *path), (n, n))
    q, r = np.linalg.qr(z)
    diag = np.diag(r)
    return q * (diag / np.abs(diag))


def haar_isometry(d: int, n: int, seed: int, *path: int) -> np.ndarray:
    """Random n x d isometry from d Gaussian vectors orthonormalised through their Gramian.

    The Gramian ``G = A^* A`` of the Gaussian columns is factored as
    ``L D L^*``; with ``R = (sqrt(D) L^*)^{-1}`` the columns of ``A R`` are
    orthonormal. This is Gram-Schmidt with positive diagonal, so the result is
    Haar distributed on the Stiefel manifold.
    """
    if not 1 <= d <= n:
        raise ValueError(f"need 1 <= d <= n, got d={d}, n={n}")
    a = complex_gaussian(stream(seed, *path), (n, d))
    gram = a.conj().T @ a
    lower, diag = ldl_hermitian(gram)
    # (A R)^* = (L sqrt(D))^{-1} A^*
    e_h = solve_triangular(lower * np.sqrt(diag), a.conj().T, lower=True)
    return e_h.conj().T


def haar_random_povm(d: int, n: int, seed: int, *path: int, method: str = "gram",
                     strict: bool = True) -> Povm:
    """Rank-one n-outcome POVM whose effects come from the rows of a random isometry.

    ``strict`` enforces ``d <= n <= d**2``, the range where such POVMs are
    generically extremal.
    """
    if strict and not d <= n <= d * d:
        raise ValueError(f"outcome count {n} outside [{d}, {d * d}]")
    if method == "gram":
        v = haar_isometry(d, n, seed, *path)
    elif method == "qr":
        v = haar_unitary(n, seed, *path)[:, :d]
    else:
        raise ValueError(f"unknown method {method!r}")
    return _rows_to_povm(v, f"haar-d{d}-n{n}")


def displacement(d: int, m: int, k: int) -> np.ndarray:
    """``U_{m,k} = sum_j omega^{j m} |j><j + k mod d|``."""
    if not (0 <= m < d and 0 <= k < d):
        raise ValueError(f"indices ({m}, {k}) out of range for d={d}")
    j = np.arange(d)
    u = np.zeros((d, d), dtype=complex)
    u[j, (j + k) % d] = np.exp(2j * np.pi * j * m / d)
    return u


def _orbit(psi: np.ndarray) -> np.ndarray:
    """Rows ``U_{m,k} psi`` in the order ``m * d + k``."""
    d = psi.size
    return np.array([displacement(d, m, k) @ psi for m in range(d) for k in range(d)])


def ic_fiducial(d: int, alpha: complex = DEFAULT_ALPHA) -> np.ndarray:
    a = abs(alpha)
    if not 0 < a < 1:
        raise ValueError(f"|alpha| must lie in (0, 1), got {a}")
    norm = np.sqrt((1 - a**2) / (1 - a ** (2 * d)))
    return norm * alpha ** np.arange(d)


def ic_covariant_povm(d: int, alpha: complex = DEFAULT_ALPHA) -> Povm:
    """d^2-outcome informationally complete POVM covariant under Z_d x Z_d."""
    psis = _orbit(ic_fiducial(d, alpha)) / np.sqrt(d)
    return _rows_to_povm(psis.conj(), f"ic-d{d}")


@dataclass(frozen=True)
class SicReport:
    dim: int
    completeness_deviation: float
    overlap_mean: float
    overlap_spread: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.overlap_spread <= self.tolerance


def sic_povm(d: int, fiducial, tol: float = SIC_OVERLAP_TOL) -> tuple[Povm, SicReport]:
    """SIC POVM generated from a Weyl-Heisenberg fiducial.

    Raises :class:`NotASicError` unless the orbit is complete and all pairwise
    overlaps ``|<psi_a|psi_b>|^2`` agree within ``tol``.
    """
    psi = np.asarray(fiducial, dtype=complex).ravel()
    if psi.size != d:
        raise ValueError(f"fiducial has dimension {psi.size}, expected {d}")
    if abs(np.linalg.norm(psi) - 1) > 1e-9:
        raise ValueError("fiducial must be unit norm")
    orbit = _orbit(psi)
    gram = np.abs(orbit.conj() @ orbit.T) ** 2
    off = gram[~np.eye(d * d, dtype=bool)]
    vecs = orbit.conj() / np.sqrt(d)
    effects = np.einsum("ji,jl->jil", vecs.conj(), vecs)
    dev = float(np.max(np.abs(effects.sum(axis=0) - np.eye(d))))
    spread = float(off.max() - off.min()) if off.size else 0.0
    report = SicReport(d, dev, float(off.mean()) if off.size else 1.0, spread, tol)
    if dev > 1e-8 or not report.passed:
        raise NotASicError(
            f"orbit is not a SIC: completeness {dev:.3g}, overlap spread {spread:.3g}")
    return Povm(effects, label=f"sic-d{d}", generator=vecs), report


def fourier_povm(d: int, n: int) -> Povm:
    """POVM from the first d columns of the n x n Fourier matrix; all weights d/n."""
    if not 1 <= d <= n:
        raise ValueError(f"need 1 <= d <= n, got d={d}, n={n}")
    return _rows_to_povm(fourier_matrix(n)[:, :d], f"fourier-d{d}-n{n}")


def read_fiducial(path) -> np.ndarray:
    """Read a fiducial: first line d, then d lines ``re im``.

    Vectors whose norm is within 1e-6 of one are renormalised; others are rejected.
    """
    lines = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty fiducial file")
    d = int(lines[0][0])
    rows = lines[1:]
    if len(rows) != d or any(len(r) != 2 for r in rows):
        raise ValueError(f"{path}: expected {d} lines of 're im'")
    psi = np.array([float(r[0]) + 1j * float(r[1]) for r in rows])
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1) >= FIDUCIAL_NORM_TOL:
        raise ValueError(f"{path}: fiducial norm {nrm} too far from 1")
    return psi / nrm


def write_fiducial(path, psi) -> None:
    psi = np.asarray(psi, dtype=complex).ravel()
    body = "\n".join(f"{z.real:.17g} {z.imag:.17g}" for z in psi)
    Path(path).write_text(f"{psi.size}\n{body}\n")


def bundled_fiducial_path(d: int):
    """Path of the shipped fiducial for dimension d, or None."""
    res = resources.files("postsim") / "data" / "sic" / f"d{d}.txt"
    return res if res.is_file() else None


def find_fiducial(d: int, search_dir=None):
    """Locate a fiducial file for dimension d, preferring ``search_dir``."""
    if search_dir is not None:
        cand = Path(search_dir) / f"d{d}.txt"
        if cand.is_file():
            return cand
    return bundled_fiducial_path(d)


def load_sic(d: int, search_dir=None) -> Povm:
    path = find_fiducial(d, search_dir)
    if path is None:
        raise FileNotFoundError(f"no SIC fiducial available for d={d}")
    povm, _ = sic_povm(d, read_fiducial(path))
    return povm

