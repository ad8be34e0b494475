import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_mixed
from postsim.generators import fourier_povm, haar_random_povm
from postsim.noise import (
    NoiseModel,
    basis_state_deviations,
    compare_implementations,
    gate_count_estimates,
    haar_tvd_constant,
    noisy_post_bound,
    noisy_scheme_distribution,
    visibility,
    worst_case_tvd_lower_bound,
)
from postsim.partitions import random_partition, standard_partition
from postsim.povm import QuantumState, basis_measurement, born, tvd
from postsim.scheme import build_scheme


def explicit_noisy_law(scheme, rho, eta, d_tot):
    """Build every noisy sub-measurement as matrices, mix, postselect."""
    n, d = scheme.target.n_outcomes, scheme.target.dim
    total = np.zeros((n + 1, d, d), dtype=complex)
    for p, sub in zip(scheme.mix_probs, scheme.sub_povms):
        # each dilated projector picks up (1 - eta)/d_tot of the identity
        block = sub.povm.effects[:-1]
        noisy = eta * block + (1 - eta) * np.eye(d) / d_tot
        rest = np.eye(d) - noisy.sum(axis=0)
        for lab, e in zip(sub.labels[:-1], noisy):
            total[lab] += p * e
        total[n] += p * rest
    probs = np.einsum("ij,kji->k", rho, total).real
    return probs[:n] / probs[:n].sum(), probs[:n].sum()


def test_visibility_examples():
    assert visibility(NoiseModel()) == 1.0
    assert visibility(NoiseModel(r2=0.01, g2=100)) == pytest.approx(math.exp(-1))
    assert NoiseModel(r2=0.005, g2=16**2).eta == pytest.approx(0.27804, abs=1e-5)
    assert NoiseModel(r1=0.1, g1=2, n_qubits=3, r_p=0.01, r_m=0.02).eta == pytest.approx(math.exp(-0.29))
    with pytest.raises(ValueError):
        NoiseModel(r2=-1)


def test_gate_counts():
    assert gate_count_estimates(1) == (16, 16)
    assert gate_count_estimates(3) == (4096, 256)
    for n in range(1, 8):
        a, b = gate_count_estimates(n)
        assert a // b == 4 ** (n - 1)
    with pytest.raises(ValueError):
        gate_count_estimates(0)


def test_worst_case_bound_examples():
    p = haar_random_povm(4, 16, 0)
    assert worst_case_tvd_lower_bound(p, 1.0) == 0
    f = fourier_povm(4, 16)
    assert np.allclose(basis_state_deviations(f), 0, atol=1e-15)
    assert worst_case_tvd_lower_bound(f, 0.3) == pytest.approx(0, abs=1e-15)
    with pytest.raises(ValueError):
        worst_case_tvd_lower_bound(p, 1.2)


def test_basis_deviation_is_a_real_tvd():
    # the deviation for basis state i is the TVD between the noiseless law and uniform
    p = haar_random_povm(3, 9, 8)
    dev = basis_state_deviations(p)
    for i in range(3):
        law = born(p, QuantumState.basis(3, i))
        assert dev[i] == pytest.approx(tvd(law, np.full(9, 1 / 9)), abs=1e-12)


def test_haar_mean_of_worst_case():
    vals = np.array([worst_case_tvd_lower_bound(haar_random_povm(4, 16, 40, t), 0.0)
                     for t in range(200)])
    se = vals.std(ddof=1) / np.sqrt(vals.size)
    assert vals.mean() >= haar_tvd_constant(16) - 3 * se


def test_noisy_distribution_endpoints(rng):
    p = haar_random_povm(3, 9, 2)
    res = build_scheme(p, standard_partition(9, 3))
    rho = random_mixed(rng, 3)
    law, kept = noisy_scheme_distribution(res, rho, 1.0)
    assert np.allclose(law, born(p, rho), atol=1e-14) and kept == pytest.approx(res.q_succ)
    law0, kept0 = noisy_scheme_distribution(res, rho, 0.0, d_tot=6)
    owner = res.partition.block_of()
    expect = res.mix_probs[owner] / 6
    assert np.allclose(law0, expect / expect.sum())
    assert kept0 == pytest.approx(res.mean_block_size() / 6)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([2, 3, 4]), st.integers(2, 4), st.floats(0, 1), st.integers(0, 2**32 - 1))
def test_noisy_distribution_matches_explicit_mixture(d, m, eta, seed):
    m = min(m, d)
    p = haar_random_povm(d, d * d, seed)
    res = build_scheme(p, random_partition(d * d, m, seed, 1))
    rho = random_mixed(np.random.default_rng(seed), d).rho
    law, kept = noisy_scheme_distribution(res, rho, eta, 2 * d)
    ref, ref_kept = explicit_noisy_law(res, rho, eta, 2 * d)
    assert np.allclose(law, ref, atol=1e-12) and kept == pytest.approx(ref_kept, abs=1e-12)


def test_noisy_distribution_checks_dimension():
    res = build_scheme(basis_measurement(4), standard_partition(4, 3))
    with pytest.raises(ValueError):
        noisy_scheme_distribution(res, np.eye(4) / 4, 0.5, d_tot=3)
    with pytest.raises(ValueError):
        noisy_scheme_distribution(res, np.eye(4) / 4, -0.1)


def test_post_bound_formula():
    assert noisy_post_bound(0.25, 0.9) == pytest.approx(0.2)
    assert noisy_post_bound(0.8, 0.9) == pytest.approx(0.1)
    assert noisy_post_bound(0.3, 1.0) == 0


def test_compare_example_numbers():
    p = haar_random_povm(4, 16, 11)
    res = build_scheme(p, standard_partition(16, 4))
    rep = compare_implementations(2, 1e-3, res, QuantumState.maximally_mixed(4))
    assert rep.eta_naimark == pytest.approx(math.exp(-0.256))
    assert rep.eta_post == pytest.approx(math.exp(-0.064))
    assert 1 - rep.eta_naimark == pytest.approx(0.22586, abs=1e-5)
    assert 1 - rep.eta_post == pytest.approx(0.06199, abs=1e-5)
    assert rep.c_n == pytest.approx((15 / 16) ** 16)
    assert rep.naimark_tvd_lower == pytest.approx((1 - math.exp(-0.256)) * (15 / 16) ** 16)
    assert rep.post_tvd_exact <= rep.post_tvd_upper + 1e-12
    assert set(rep.csv_row()) == set(rep.CSV_FIELDS)


def test_compare_zero_rate():
    p = haar_random_povm(4, 16, 1)
    rep = compare_implementations(2, 0.0, build_scheme(p, standard_partition(16, 4)), np.eye(4) / 4)
    assert rep.naimark_tvd_lower == 0 and rep.post_tvd_upper == 0 and rep.ratio is None
    with pytest.raises(ValueError):
        compare_implementations(3, 0.0, build_scheme(p, standard_partition(16, 4)), np.eye(4) / 4)


def closed_forms(n_qubits, r2, q):
    g_n, g_p = gate_count_estimates(n_qubits)
    naimark = (1 - math.exp(-r2 * g_n)) * haar_tvd_constant(4 ** n_qubits)
    return naimark, noisy_post_bound(q, math.exp(-r2 * g_p))


def test_low_noise_ratio_limit():
    # for small r2 both bounds are linear in r2; their ratio is 2 q c_n 4^(N-1) when q <= 1/2
    for n_qubits in (2, 3, 4):
        for q in (0.2, 0.4):
            naimark, post = closed_forms(n_qubits, 1e-12, q)
            limit = 2 * q * haar_tvd_constant(4**n_qubits) * 4 ** (n_qubits - 1)
            assert naimark / post == pytest.approx(limit, rel=1e-6)


@pytest.mark.parametrize("n_qubits", [3, 4, 5])
@pytest.mark.parametrize("q", [0.2, 0.25, 0.5])
def test_naimark_bound_dominates_at_low_noise(n_qubits, q):
    g_naimark = gate_count_estimates(n_qubits)[0]
    for x in np.geomspace(1e-6, 0.1, 30):
        naimark, post = closed_forms(n_qubits, x / g_naimark, q)
        assert naimark >= post


def test_dominance_fails_once_bounds_saturate():
    # N = 2, q = 0.2: the postselection bound is larger even at r2 = 1e-4
    naimark, post = closed_forms(2, 1e-4, 0.2)
    assert naimark < post
    # N = 5, r2 = 1e-2: the Naimark bound saturates at c_n while the other passes 1
    naimark, post = closed_forms(5, 1e-2, 0.5)
    assert naimark == pytest.approx(haar_tvd_constant(1024)) and post > 0.99
