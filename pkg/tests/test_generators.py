import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from conftest import sic2_fiducial
from postsim.generators import (
    NotASicError,
    bundled_fiducial_path,
    displacement,
    find_fiducial,
    fourier_povm,
    haar_isometry,
    haar_random_povm,
    haar_unitary,
    ic_covariant_povm,
    ic_fiducial,
    load_sic,
    read_fiducial,
    sic_povm,
    write_fiducial,
)
from postsim.povm import validate


def test_haar_unitary_small_cases():
    u = haar_unitary(1, 5)
    assert u.shape == (1, 1) and abs(abs(u[0, 0]) - 1) < 1e-15
    for n in (2, 7, 20):
        u = haar_unitary(n, 11, n)
        assert np.max(np.abs(u.conj().T @ u - np.eye(n))) < 1e-10


def test_haar_unitary_is_seeded():
    assert np.array_equal(haar_unitary(5, 3, 1), haar_unitary(5, 3, 1))
    assert not np.array_equal(haar_unitary(5, 3, 1), haar_unitary(5, 3, 2))


def test_haar_unitary_second_moment():
    # E|U_11|^2 = 1/n
    n, trials = 8, 10_000
    x = np.array([abs(haar_unitary(n, 99, t)[0, 0]) ** 2 for t in range(trials)])
    se = x.std(ddof=1) / np.sqrt(trials)
    assert abs(x.mean() - 1 / n) < 3 * se


@pytest.mark.parametrize("method", ["gram", "qr"])
def test_entry_law_is_beta(method):
    # |V_ij|^2 of a Haar isometry has density (n-1)(1-x)^(n-2)
    n, d = 6, 3
    x = []
    for t in range(1500):
        p = haar_random_povm(d, n, 17, t, method=method)
        x.append(abs(p.generator_vectors()[2, 1]) ** 2)
    assert stats.kstest(x, stats.beta(1, n - 1).cdf).pvalue > 1e-3


def test_isometry_phases_are_uniform():
    ph = [np.angle(haar_isometry(2, 5, 8, t)[0, 0]) for t in range(1500)]
    assert stats.kstest(ph, stats.uniform(-np.pi, 2 * np.pi).cdf).pvalue > 1e-3


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 12), st.integers(0, 40), st.integers(0, 2**63))
def test_isometry_columns_orthonormal(d, extra, seed):
    v = haar_isometry(d, d + extra, seed)
    assert v.shape == (d + extra, d)
    assert np.max(np.abs(v.conj().T @ v - np.eye(d))) < 1e-10


def test_isometry_argument_checks():
    with pytest.raises(ValueError):
        haar_isometry(4, 3, 0)
    with pytest.raises(ValueError):
        haar_random_povm(2, 5, 0)
    with pytest.raises(ValueError):
        haar_random_povm(2, 3, 0, method="svd")


def test_haar_povm_properties():
    p = haar_random_povm(4, 16, 1)
    assert validate(p, 1e-10).passed
    assert p.is_rank_one()
    one = haar_random_povm(1, 9, 2, strict=False)
    assert np.all(one.effects.real >= 0) and abs(one.effects.sum() - 1) < 1e-12


def test_haar_weight_mean():
    w = np.array([haar_random_povm(4, 16, 5, t).weights()[0] for t in range(200)])
    se = w.std(ddof=1) / np.sqrt(w.size)
    assert abs(w.mean() - 0.25) < 3 * se


def test_displacement_examples():
    assert np.allclose(displacement(5, 0, 0), np.eye(5))
    assert np.allclose(displacement(2, 1, 0), np.diag([1, -1]))
    assert np.allclose(displacement(2, 0, 1), [[0, 1], [1, 0]])
    with pytest.raises(ValueError):
        displacement(3, 3, 0)


def test_displacements_are_orthogonal_unitaries():
    d = 4
    ops = [displacement(d, m, k) for m in range(d) for k in range(d)]
    gram = np.array([[np.trace(a.conj().T @ b) for b in ops] for a in ops])
    assert np.allclose(gram, d * np.eye(d * d))


def test_ic_fiducial_normalised():
    assert abs(np.linalg.norm(ic_fiducial(2)) - 1) < 1e-15
    with pytest.raises(ValueError):
        ic_fiducial(3, 1.0)


@pytest.mark.parametrize("d", range(2, 9))
def test_ic_povm(d):
    p = ic_covariant_povm(d)
    assert p.n_outcomes == d * d
    assert np.max(np.abs(p.effects.sum(axis=0) - np.eye(d))) < 1e-8
    assert p.weights().mean() == pytest.approx(1 / d)


def _span(p):
    d = p.dim
    return np.linalg.matrix_rank(p.effects.reshape(d * d, -1), tol=1e-9)


@pytest.mark.parametrize("d", [2, 3, 5, 6, 7, 9, 10])
def test_ic_povm_spans_operator_space(d):
    assert _span(ic_covariant_povm(d)) == d * d


def test_ic_default_alpha_loses_rank_when_4_divides_d():
    # alpha^4 is real for alpha = (1+i)/2; a generic alpha avoids this
    assert _span(ic_covariant_povm(4)) == 14
    assert _span(ic_covariant_povm(8)) == 60
    assert _span(ic_covariant_povm(8, 0.3 + 0.1j)) == 64


def test_sic_qubit():
    p, rep = sic_povm(2, sic2_fiducial())
    assert p.n_outcomes == 4
    assert rep.passed and rep.overlap_spread < 1e-12
    assert rep.overlap_mean == pytest.approx(1 / 3)
    assert np.max(np.abs(p.effects.sum(axis=0) - np.eye(2))) < 1e-8


def test_sic_rejects_non_fiducial():
    with pytest.raises(NotASicError):
        sic_povm(3, np.array([1, 0, 0]))
    with pytest.raises(ValueError):
        sic_povm(2, np.array([1, 1]))


@pytest.mark.parametrize("d", range(2, 17))
def test_bundled_fiducials_are_sics(d):
    path = bundled_fiducial_path(d)
    assert path is not None
    p, rep = sic_povm(d, read_fiducial(path))
    assert rep.passed
    assert rep.overlap_mean == pytest.approx(1 / (d + 1), abs=1e-8)


def test_fiducial_files(tmp_path):
    psi = sic2_fiducial()
    write_fiducial(tmp_path / "d2.txt", psi)
    assert np.allclose(read_fiducial(tmp_path / "d2.txt"), psi)
    assert find_fiducial(2, tmp_path) == tmp_path / "d2.txt"
    assert find_fiducial(999, tmp_path) is None
    (tmp_path / "bad.txt").write_text("2\n1 0\n1 0\n")
    with pytest.raises(ValueError):
        read_fiducial(tmp_path / "bad.txt")
    (tmp_path / "short.txt").write_text("3\n1 0\n")
    with pytest.raises(ValueError):
        read_fiducial(tmp_path / "short.txt")
    with pytest.raises(FileNotFoundError):
        load_sic(999)


def test_fourier_examples():
    p = fourier_povm(2, 4)
    assert np.allclose(p.weights(), 0.5)
    for d, n in [(2, 4), (3, 5), (4, 16)]:
        assert abs(np.sum(fourier_povm(d, n).weights() ** 2) - d * d / n) < 1e-12
    sq = fourier_povm(5, 5)
    assert np.allclose(sq.weights(), 1) and sq.is_rank_one()
