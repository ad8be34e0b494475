"""Global depolarizing noise: Naimark implementation versus the postselection scheme.

Gate counts are leading-order estimates with unit constants: ``16**N``
two-qubit gates for a generic circuit on 2N qubits (Naimark) and ``4**(N+1)``
on N + 1 qubits (postselection). They are scalings, not calibrated counts.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .povm import Povm, born, tvd
from .scheme import SchemeResult


@dataclass(frozen=True)
class NoiseModel:
    r1: float = 0.0
    r2: float = 0.0
    g1: float = 0.0
    g2: float = 0.0
    n_qubits: int = 0
    r_p: float = 0.0
    r_m: float = 0.0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value < 0:
                raise ValueError(f"{name} must be nonnegative, got {value}")

    @property
    def eta(self) -> float:
        return visibility(self)


def visibility(model: NoiseModel) -> float:
    """``exp(-r1 g1 - r2 g2 - N (r_p + r_m))``."""
    return float(np.exp(-model.r1 * model.g1 - model.r2 * model.g2
                        - model.n_qubits * (model.r_p + model.r_m)))


def gate_count_estimates(n_qubits: int) -> tuple[int, int]:
    """Two-qubit gate counts ``(Naimark, postselection)`` = ``(4**(2N), 4**(N+1))``."""
    if n_qubits < 1:
        raise ValueError("need at least one qubit")
    return 4 ** (2 * n_qubits), 4 ** (n_qubits + 1)


def haar_tvd_constant(n: int) -> float:
    """``(1 - 1/n)**n``, the Haar average of the basis-state deviation from uniform."""
    return (1.0 - 1.0 / n) ** n


def basis_state_deviations(povm: Povm) -> np.ndarray:
    """``(1/2) sum_j | |V_ji|^2 - 1/n |`` for each basis state i of the system."""
    v = povm.generator_vectors()
    n = povm.n_outcomes
    return 0.5 * np.abs(np.abs(v) ** 2 - 1.0 / n).sum(axis=0)


def worst_case_tvd_lower_bound(povm: Povm, eta: float) -> float:
    """Lower bound on ``max_rho TVD(p(M|rho), p(M^eta|rho))`` from basis-state inputs."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"visibility {eta} outside [0, 1]")
    if povm.generator is None:
        raise ValueError("worst-case bound needs the POVM's generator matrix")
    return (1.0 - eta) * float(basis_state_deviations(povm).max())


def noisy_scheme_distribution(scheme: SchemeResult, state, eta: float,
                              d_tot: int | None = None) -> tuple[np.ndarray, float]:
    """Postselected outcome law and postselection probability under depolarizing noise.

    Every dilated sub-measurement of dimension ``d_tot`` (default ``2 d``) has
    its block effects mixed with ``1/d_tot``; the outcome probabilities are
    ``eta q p(i|M) + (1 - eta) p_block(i) / d_tot``.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"visibility {eta} outside [0, 1]")
    d = scheme.target.dim
    if d_tot is None:
        d_tot = 2 * d
    needed = max(int(s.povm.ranks().sum()) for s in scheme.sub_povms)
    if d_tot < needed:
        raise ValueError(f"d_tot={d_tot} below the largest dilation dimension {needed}")
    p_target = born(scheme.target, state)
    owner = scheme.partition.block_of()
    p_block = np.asarray(scheme.mix_probs)[owner]
    raw = eta * scheme.q_succ * p_target + (1.0 - eta) * p_block / d_tot
    kept = eta * scheme.q_succ + (1.0 - eta) * scheme.mean_block_size() / d_tot
    if kept <= 0:
        raise ValueError("postselection probability is zero")
    return raw / kept, float(kept)


def noisy_post_bound(q: float, eta: float) -> float:
    """``(1 - eta) max(1/(2q), 1)``, valid when ``2 <|X|> = d_tot``."""
    return (1.0 - eta) * max(1.0 / (2.0 * q), 1.0)


@dataclass(frozen=True)
class ComparisonReport:
    n_qubits: int
    r2: float
    g2_naimark: int
    g2_post: int
    eta_naimark: float
    eta_post: float
    c_n: float
    naimark_tvd_lower: float
    post_tvd_upper: float
    post_tvd_exact: float
    q_succ: float
    ratio: float | None
    note: str = "gate counts are order-of-magnitude estimates with unit constants"

    def to_dict(self) -> dict:
        return asdict(self)

    CSV_FIELDS = ("n_qubits", "r2", "eta_naimark", "eta_post", "naimark_tvd_lower",
                  "post_tvd_upper", "post_tvd_exact", "q_succ")

    def csv_row(self) -> dict:
        return {k: getattr(self, k) for k in self.CSV_FIELDS}


def compare_implementations(n_qubits: int, r2: float, scheme: SchemeResult, state) -> ComparisonReport:
    d = scheme.target.dim
    if d != 2 ** n_qubits:
        raise ValueError(f"target dimension {d} is not 2**{n_qubits}")
    if r2 < 0:
        raise ValueError("error rate must be nonnegative")
    g_naimark, g_post = gate_count_estimates(n_qubits)
    eta_n = visibility(NoiseModel(r2=r2, g2=g_naimark))
    eta_p = visibility(NoiseModel(r2=r2, g2=g_post))
    c_n = haar_tvd_constant(scheme.target.n_outcomes)
    lower = (1.0 - eta_n) * c_n
    upper = noisy_post_bound(scheme.q_succ, eta_p)
    noisy, _ = noisy_scheme_distribution(scheme, state, eta_p)
    exact = tvd(born(scheme.target, state), noisy)
    ratio = lower / upper if upper > 0 else None
    return ComparisonReport(n_qubits, r2, g_naimark, g_post, eta_n, eta_p, c_n,
                            lower, upper, exact, scheme.q_succ, ratio)
