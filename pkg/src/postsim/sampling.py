"""Monte-Carlo sampling of measurement outcomes, directly or through the postselection scheme.

Shots are drawn in fixed-size batches; batch ``b`` uses the random stream
``(seed, b)``. The report is the sum of per-batch counts, so running batches in
threads gives exactly the sequential result.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .povm import Povm, as_state, born, tvd
from .rng import stream
from .scheme import SchemeResult

BATCH = 200_000


class UndefinedStatisticsError(ValueError):
    pass


@dataclass
class SampleReport:
    shots: int
    counts: np.ndarray
    seed: int
    mode: str = "direct"
    postselected_counts: np.ndarray | None = None
    success_count: int | None = None
    q_succ: float | None = None
    empirical_tvd_vs_target: float | None = None

    @property
    def empirical_success_rate(self) -> float | None:
        if self.success_count is None:
            return None
        return self.success_count / self.shots

    def frequencies(self) -> np.ndarray:
        """Normalised counts over target outcomes (postselected in scheme mode)."""
        c = self.counts if self.postselected_counts is None else self.postselected_counts
        total = c.sum()
        if total == 0:
            raise UndefinedStatisticsError("no postselected shots")
        return c / total

    def to_dict(self) -> dict:
        out = asdict(self)
        out["counts"] = [int(c) for c in self.counts]
        if self.postselected_counts is not None:
            out["postselected_counts"] = [int(c) for c in self.postselected_counts]
        out["empirical_success_rate"] = self.empirical_success_rate
        return out


def _batches(shots: int) -> list[tuple[int, int]]:
    return [(b, min(BATCH, shots - start)) for b, start in enumerate(range(0, shots, BATCH))]


def _inverse_cdf(u: np.ndarray, p: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(p)
    cdf /= cdf[-1]
    return np.minimum(np.searchsorted(cdf, u, side="right"), p.size - 1)


def _run(fn, shots: int, workers: int):
    jobs = _batches(shots)
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda job: fn(*job), jobs))
    else:
        parts = [fn(*job) for job in jobs]
    return np.sum(parts, axis=0)


def sample_direct(povm: Povm, state, shots: int, seed: int, workers: int = 1) -> SampleReport:
    """i.i.d. outcomes from the Born distribution by inverse-CDF sampling."""
    if shots < 1:
        raise ValueError("shots must be positive")
    p = born(povm, state)

    def batch(b: int, size: int) -> np.ndarray:
        u = stream(seed, b).random(size)
        return np.bincount(_inverse_cdf(u, p), minlength=p.size)

    counts = _run(batch, shots, workers)
    report = SampleReport(shots, counts, seed, "direct")
    report.empirical_tvd_vs_target = tvd(report.frequencies(), p)
    return report


def sub_measurement_laws(scheme: SchemeResult, state) -> list[np.ndarray]:
    """Born law of each sub-measurement over its own effects (block outcomes, then trash)."""
    rho = as_state(state).rho
    laws = []
    for sub in scheme.sub_povms:
        p = np.einsum("ij,kji->k", rho, sub.povm.effects).real
        laws.append(np.clip(p, 0.0, None))
    return laws


def sample_scheme(scheme: SchemeResult, state, shots: int, seed: int, workers: int = 1) -> SampleReport:
    """Run the scheme shot by shot: pick a block, measure its sub-measurement, keep non-trash labels."""
    if shots < 1:
        raise ValueError("shots must be positive")
    n = scheme.target.n_outcomes
    laws = sub_measurement_laws(scheme, state)
    labels = [np.asarray(s.labels) for s in scheme.sub_povms]
    probs = np.asarray(scheme.mix_probs)

    def batch(b: int, size: int) -> np.ndarray:
        rng = stream(seed, b)
        u_block = rng.random(size)
        u_out = rng.random(size)
        blocks = _inverse_cdf(u_block, probs)
        out = np.empty(size, dtype=int)
        for g, (law, lab) in enumerate(zip(laws, labels)):
            sel = blocks == g
            out[sel] = lab[_inverse_cdf(u_out[sel], law)]
        return np.bincount(out, minlength=n + 1)

    counts = _run(batch, shots, workers)
    report = SampleReport(shots, counts, seed, "scheme",
                          postselected_counts=counts[:n].copy(),
                          success_count=int(counts[:n].sum()),
                          q_succ=scheme.q_succ)
    if report.success_count > 0:
        report.empirical_tvd_vs_target = tvd(report.frequencies(), born(scheme.target, state))
    return report


def empirical_tvd(report: SampleReport, expected) -> float:
    """TVD between observed frequencies and ``expected``."""
    expected = np.asarray(expected, dtype=float)
    freq = report.frequencies()
    return tvd(freq, expected)
