import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_mixed, random_pure, sic2_fiducial
from postsim.generators import haar_random_povm, sic_povm
from postsim.povm import (
    InvalidPovmError,
    NumericalIntegrityError,
    Povm,
    QuantumState,
    StochasticMap,
    StructuralError,
    basis_measurement,
    born,
    depolarize,
    mix,
    post_process,
    trivial_povm,
    tvd,
    validate,
)


@pytest.fixture
def sic2():
    return sic_povm(2, sic2_fiducial())[0]


def test_validate_examples():
    basis = basis_measurement(3)
    assert validate(basis).passed
    half = Povm(0.5 * basis.effects, check=False)
    rep = validate(half)
    assert not rep.passed
    assert rep.max_completeness_deviation == pytest.approx(0.5)
    assert any("completeness" in p for p in rep.problems)
    bad = np.array([np.diag([1.001, 0.0]), np.diag([-1e-3, 1.0])])
    rep = validate(Povm(bad, check=False))
    assert rep.min_eigenvalue == pytest.approx(-1e-3)
    assert any("positivity" in p for p in rep.problems)


def test_constructor_checks():
    with pytest.raises(InvalidPovmError):
        Povm([0.5 * np.eye(2)])
    with pytest.raises(StructuralError):
        Povm([np.eye(2), np.eye(3)])
    with pytest.raises(StructuralError):
        Povm([])
    with pytest.raises(StructuralError):
        Povm([np.eye(2)], generator=np.ones((2, 2)))
    p = basis_measurement(2)
    with pytest.raises(ValueError):
        p.effects[0, 0, 0] = 3


def test_report_serialises():
    d = validate(basis_measurement(2)).to_dict()
    assert d["passed"] is True and d["problems"] == []


def test_born_examples(sic2, rng):
    assert np.array_equal(born(basis_measurement(4), QuantumState.basis(4, 0)), [1, 0, 0, 0])
    assert np.allclose(born(sic2, QuantumState.maximally_mixed(2)), 0.25)
    p = haar_random_povm(3, 7, 4)
    assert np.allclose(born(p, np.eye(3) / 3), p.weights() / 3)


def test_born_dimension_mismatch():
    with pytest.raises(StructuralError):
        born(basis_measurement(2), QuantumState.maximally_mixed(3))


def test_born_refuses_broken_effects():
    neg = Povm([np.diag([1.0, -0.1]), np.diag([0.0, 1.1])], check=False)
    with pytest.raises(NumericalIntegrityError):
        born(neg, QuantumState.basis(2, 1))
    short = Povm([np.eye(2) * 0.9], check=False)
    with pytest.raises(NumericalIntegrityError):
        born(short, QuantumState.basis(2, 0))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(0, 30), st.integers(0, 2**32 - 1))
def test_born_is_a_distribution(d, extra, seed):
    r = np.random.default_rng(seed)
    p = born(haar_random_povm(d, d + extra, seed, strict=False), random_mixed(r, d))
    assert np.all(p >= 0) and abs(p.sum() - 1) < 1e-12


def test_state_validation():
    with pytest.raises(ValueError):
        QuantumState(np.diag([0.6, 0.6]))
    with pytest.raises(ValueError):
        QuantumState(np.diag([1.5, -0.5]))
    with pytest.raises(ValueError):
        QuantumState([[0.5, 0.5], [0, 0.5]])
    assert np.allclose(QuantumState.pure([3, 4j]).rho, np.outer([0.6, 0.8j], [0.6, -0.8j]))


def test_post_process_examples(sic2):
    ident = StochasticMap(np.eye(4))
    assert np.allclose(post_process(sic2, ident).effects, sic2.effects)
    merged = post_process(sic2, StochasticMap(np.ones((1, 4))))
    assert np.allclose(merged.effects, trivial_povm(2).effects)
    pairs = post_process(sic2, StochasticMap.from_grouping([[0, 1], [2, 3]], 4))
    assert np.allclose(pairs.weights(), [1, 1])


def test_stochastic_map_checks():
    with pytest.raises(ValueError):
        StochasticMap([[0.5, 1], [0.4, 0]])
    with pytest.raises(ValueError):
        StochasticMap([[-0.1], [1.1]])


def test_mix_examples(sic2):
    b = basis_measurement(2)
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    x = Povm([np.outer(h[:, k], h[:, k]) for k in range(2)])
    assert np.allclose(mix([b, x], [1, 0]).effects, b.effects)
    assert np.allclose(mix([sic2, sic2], [0.3, 0.7]).effects, sic2.effects)
    half = mix([b, x], [0.5, 0.5])
    assert np.allclose(half.weights(), [1, 1])
    assert np.allclose(half.effects, 0.5 * (b.effects + x.effects))
    with pytest.raises(StructuralError):
        mix([b, sic2], [0.5, 0.5])
    with pytest.raises(ValueError):
        mix([b, x], [0.5, 0.6])


def test_depolarize_examples(sic2):
    b = basis_measurement(2)
    assert np.allclose(depolarize(sic2, 1.0).effects, sic2.effects)
    assert np.allclose(depolarize(sic2, 0.0).effects, np.eye(2) / 4)
    assert np.allclose(depolarize(b, 0.5).effects[0], np.diag([0.75, 0.25]))
    assert np.allclose(depolarize(b, 0.5, mode="trace").effects[0], np.diag([0.75, 0.25]))
    tr = depolarize(sic2, 0.0, mode="trace")
    assert np.allclose(tr.effects, np.eye(2) / 4)
    with pytest.raises(ValueError):
        depolarize(b, 1.5)
    with pytest.raises(ValueError):
        depolarize(b, 0.5, mode="bogus")


def test_tvd_examples():
    assert tvd([0.3, 0.7], [0.3, 0.7]) == 0
    assert tvd([1, 0], [0, 1]) == 1
    assert tvd([0.75, 0.25], [0.5, 0.5]) == pytest.approx(0.25)
    with pytest.raises(StructuralError):
        tvd([1], [0.5, 0.5])


def test_ranks_and_generator(rng):
    p = haar_random_povm(4, 10, 3)
    assert p.is_rank_one()
    v = p.generator_vectors()
    assert np.allclose(np.einsum("ji,jl->jil", v.conj(), v), p.effects)
    assert trivial_povm(3).ranks().tolist() == [3]
    with pytest.raises(ValueError):
        trivial_povm(2).generator_vectors()
    assert random_pure(rng, 3).dim == 3
