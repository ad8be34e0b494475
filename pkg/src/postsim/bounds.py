"""Analytic bounds around the success probability."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .generators import fourier_povm, haar_random_povm

# Concentration constants for the standard-partition lower bound, to three figures; not re-derived here.
GENERAL_C = 6.79e-2
GENERAL_A = 0.307
SQUARE_C = 6.74e-2
SQUARE_A = 1.79
GENERAL_EPS_MAX = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class BoundsReport:
    """One-sided consequences of success probability ``q``.

    ``t_lower``: critical visibility is at least q.
    ``R_upper``: robustness is at most 1/q - 1.
    """

    q: float
    t_lower: float
    R_upper: float


def visibility_robustness(q: float) -> BoundsReport:
    if not 0.0 < q <= 1.0:
        raise ValueError(f"q must lie in (0, 1], got {q}")
    return BoundsReport(q, q, 1.0 / q - 1.0)


def check_weights(weights, d: int | None = None) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.size == 0:
        raise ValueError("empty weight vector")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    if d is not None and abs(w.sum() - d) > 1e-8:
        raise ValueError(f"weights sum to {w.sum()}, expected {d}")
    return w


def q_upper_bound_rank_one(weights, m: int) -> float:
    """``(sum of the m largest weights) / sum_j w_j**2``.

    Upper-bounds the best success probability of any m-outcome simulation of a
    rank-one POVM with effect traces ``weights``.
    """
    w = check_weights(weights)
    if m < 1:
        raise ValueError("m must be positive")
    top = np.sort(w)[::-1][:m].sum()
    return float(top / np.sum(w**2))


def q_upper_bound(povm, m: int) -> float:
    """``(sum of the m largest traces) / sum_j tr(M_j^2)`` for a general POVM."""
    if m < 1:
        raise ValueError("m must be positive")
    traces = np.sort(povm.weights())[::-1]
    purity = np.einsum("kij,kji->", povm.effects, povm.effects).real
    return float(traces[:m].sum() / purity)


def concentration_threshold(d: int, n: int, m: int, eps: float) -> tuple[float, float]:
    """Threshold and probability bound for the standard-partition success probability.

    With probability at least ``prob`` over Haar-random rank-one n-outcome
    POVMs on C^d, the standard partition with blocks of m - 1 reaches success
    probability ``threshold``. Both values are clamped to [0, 1].
    """
    if not (1 <= d <= n <= d * d and 2 <= m <= d):
        raise ValueError(f"need d <= n <= d^2 and 2 <= m <= d, got d={d}, n={n}, m={m}")
    if m == d:
        if not 0.0 < eps < 1.0:
            raise ValueError(f"eps must lie in (0, 1) when m = d, got {eps}")
        threshold = SQUARE_C * (1.0 - eps)
        prob = 1.0 - n / (d - 1) * math.exp(-SQUARE_A * d * eps**2)
    else:
        if not 0.0 < eps < GENERAL_EPS_MAX:
            raise ValueError(f"eps must lie in (0, {GENERAL_EPS_MAX:.6f}), got {eps}")
        gamma = 2.0 * (m - 1) / d
        s = (1.0 + math.sqrt(gamma)) ** 2
        threshold = GENERAL_C * gamma / s * (1.0 - eps)
        prob = 1.0 - n / (m - 1) * math.exp(-GENERAL_A * s * d * eps**2)
    return min(max(threshold, 0.0), 1.0), min(max(prob, 0.0), 1.0)


def weight_square_sum(povm) -> float:
    return float(np.sum(povm.weights() ** 2))


def fourier_is_minimizer_check(d: int, n: int, trials: int, seed: int) -> bool:
    """Fourier weights reach ``d^2/n`` and no Haar draw goes below it."""
    if not 1 <= d <= n:
        raise ValueError("need d <= n")
    floor = d * d / n
    if abs(weight_square_sum(fourier_povm(d, n)) - floor) > 1e-10:
        return False
    for t in range(trials):
        povm = haar_random_povm(d, n, seed, t, strict=False)
        if weight_square_sum(povm) < floor - 1e-10:
            return False
    return True
