import math

import numpy as np
import pytest

import holevo_lab as hl
from holevo_lab.opalg import (
    ExtendedReal,
    entropy_raw,
    random_density,
    relative_entropy_raw,
    trace_norm,
)

LOG2 = math.log(2.0)


def h2(q):
    return -q * math.log(q) - (1 - q) * math.log(1 - q)


# --- entropy ---------------------------------------------------------------

def test_entropy_pure_state_is_zero():
    assert float(hl.entropy(hl.DensityOperator.basis_state(2, 0))) == pytest.approx(0.0, abs=1e-14)


def test_entropy_maximally_mixed():
    assert float(hl.entropy(hl.DensityOperator.maximally_mixed(2))) == pytest.approx(LOG2, abs=1e-14)


def test_entropy_binary_diagonal():
    # independent scalar oracle: h2(0.25) = 0.5623351446188083
    val = float(hl.entropy(hl.DensityOperator.diagonal([0.25, 0.75])))
    assert val == pytest.approx(h2(0.25), abs=1e-13)
    assert val == pytest.approx(0.5623351446188083, abs=1e-13)


def test_entropy_rejects_bad_input():
    with pytest.raises(hl.InvalidOperand):
        hl.DensityOperator(np.array([[0.5, 0.4], [0.1, 0.5]]))  # not Hermitian
    with pytest.raises(hl.InvalidOperand):
        hl.DensityOperator(np.diag([0.7, 0.7]))  # trace 1.4


# --- relative entropy ------------------------------------------------------

def test_relative_entropy_self_is_zero(rng):
    rho = random_density(rng, 3)
    assert float(hl.relative_entropy(rho, rho)) == pytest.approx(0.0, abs=1e-12)


def test_relative_entropy_disjoint_supports_is_infinite():
    r = hl.relative_entropy(hl.DensityOperator.basis_state(2, 0),
                            hl.DensityOperator.basis_state(2, 1))
    assert r.is_infinite
    assert float(r) == math.inf


def test_relative_entropy_classical_diagonal():
    # scalar KL: 0.5 log(0.5/0.75) + 0.5 log(0.5/0.25) = 0.1438410362258904
    val = float(hl.relative_entropy(hl.DensityOperator.diagonal([0.5, 0.5]),
                                    hl.DensityOperator.diagonal([0.75, 0.25])))
    assert val == pytest.approx(0.1438410362258904, abs=1e-12)


def test_relative_entropy_dim_mismatch():
    with pytest.raises(hl.DimensionMismatch):
        hl.relative_entropy(hl.DensityOperator.maximally_mixed(2),
                            hl.DensityOperator.maximally_mixed(3))


def test_support_condition_on_diagonal_constructions():
    # finite iff supp(a) <= supp(b), set up by construction
    a = hl.DensityOperator.diagonal([0.5, 0.5, 0.0])
    b_ok = hl.DensityOperator.diagonal([0.2, 0.5, 0.3])
    b_bad = hl.DensityOperator.diagonal([1.0, 0.0, 0.0])
    assert hl.relative_entropy(a, b_ok).is_finite
    assert hl.relative_entropy(a, b_bad).is_infinite


# --- trace distance --------------------------------------------------------

def test_trace_distance_examples():
    rho = hl.DensityOperator.diagonal([0.5, 0.5])
    assert hl.trace_distance(rho, rho) == pytest.approx(0.0, abs=1e-14)
    assert hl.trace_distance(hl.DensityOperator.basis_state(2, 0),
                             hl.DensityOperator.basis_state(2, 1)) == pytest.approx(2.0, abs=1e-12)
    assert hl.trace_distance(rho, hl.DensityOperator.diagonal([0.75, 0.25])) \
        == pytest.approx(0.5, abs=1e-12)


# --- tensor / partial trace ------------------------------------------------

def test_tensor_examples():
    i2 = hl.DensityOperator.maximally_mixed(2)
    assert np.allclose(hl.tensor(i2, i2).mat, np.eye(4) / 4)
    e0, e1 = hl.DensityOperator.basis_state(2, 0), hl.DensityOperator.basis_state(2, 1)
    prod = hl.tensor(e0, e1)
    expected = np.zeros((4, 4))
    expected[1, 1] = 1.0
    assert np.allclose(prod.mat, expected)


def test_entropy_additive_on_products(rng):
    for _ in range(25):
        a = random_density(rng, 2)
        b = random_density(rng, 3)
        lhs = float(hl.entropy(hl.tensor(a, b)))
        rhs = float(hl.entropy(a)) + float(hl.entropy(b))
        assert lhs == pytest.approx(rhs, abs=1e-10)


def test_partial_trace_recovers_factors(rng):
    a = random_density(rng, 2)
    b = random_density(rng, 3)
    w = hl.tensor(a, b)
    assert np.max(np.abs(hl.partial_trace(w, (2, 3), "first").mat - a.mat)) < 1e-12
    assert np.max(np.abs(hl.partial_trace(w, (2, 3), "second").mat - b.mat)) < 1e-12


def test_partial_trace_maximally_entangled():
    v = np.zeros(4, dtype=complex)
    v[0] = v[3] = 1 / math.sqrt(2)
    w = hl.DensityOperator.pure(v)
    red = hl.partial_trace(w, (2, 2), "first")
    assert np.allclose(red.mat, np.eye(2) / 2, atol=1e-12)


def test_partial_trace_preserves_trace(rng):
    for _ in range(10):
        w = random_density(rng, 4)
        red = hl.partial_trace(w, (2, 2), "first")
        assert abs(np.trace(red.mat) - 1.0) < 1e-12


def test_partial_trace_dim_mismatch():
    with pytest.raises(hl.DimensionMismatch):
        hl.partial_trace(hl.DensityOperator.maximally_mixed(6), (2, 2))


# --- inequalities over random states ---------------------------------------

def test_pinsker_inequality(rng):
    for _ in range(200):
        d = int(rng.integers(2, 5))
        rho, sigma = random_density(rng, d), random_density(rng, d)
        rel = relative_entropy_raw(rho.mat, sigma.mat)
        t = trace_norm(rho.mat - sigma.mat)
        assert rel >= 0.5 * t * t - 1e-9


def test_entropy_concavity(rng):
    for _ in range(100):
        d = int(rng.integers(2, 5))
        rho, sigma = random_density(rng, d), random_density(rng, d)
        lam = float(rng.uniform(0, 1))
        mix = lam * rho.mat + (1 - lam) * sigma.mat
        assert entropy_raw(mix) >= lam * entropy_raw(rho.mat) \
            + (1 - lam) * entropy_raw(sigma.mat) - 1e-9


def test_nonnegativity(rng):
    for _ in range(100):
        d = int(rng.integers(2, 5))
        rho, sigma = random_density(rng, d), random_density(rng, d)
        assert entropy_raw(rho.mat) >= -1e-9
        assert relative_entropy_raw(rho.mat, sigma.mat) >= -1e-9


# --- extended reals --------------------------------------------------------

def test_extended_real_variants():
    fin = ExtendedReal.finite(1.5)
    inf = ExtendedReal.infinite()
    assert fin.is_finite and not fin.is_infinite
    assert inf.is_infinite
    assert float(fin + fin) == 3.0
    assert (fin + inf).is_infinite
    assert fin < inf
    assert ExtendedReal.from_float(math.inf).is_infinite
    with pytest.raises(ValueError):
        ExtendedReal.from_float(math.nan)
