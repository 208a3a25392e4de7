import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ivdag.errors import InvalidInputError
from ivdag.numerics import acyclicity, acyclicity_value, matrix_exp


def taylor_expm(M, terms=60, dps=60, squarings=None):
    """Extended-precision reference: Taylor series after scaling, then squaring."""
    with mpmath.workdps(dps):
        A = mpmath.matrix(M.tolist())
        norm = float(np.abs(M).sum(axis=0).max()) if M.size else 0.0
        s = squarings if squarings is not None else max(0, math.ceil(math.log2(norm))) if norm > 1 else 0
        A = A / (2 ** s)
        term = mpmath.eye(M.shape[0])
        total = mpmath.eye(M.shape[0])
        for k in range(1, terms):
            term = term * A / k
            total += term
        for _ in range(s):
            total = total * total
        return np.array(total.tolist(), dtype=float)


def rel_err(a, b):
    return np.linalg.norm(a - b, 1) / np.linalg.norm(b, 1)


def test_zero_matrix_is_identity():
    assert np.array_equal(matrix_exp(np.zeros((3, 3))), np.eye(3))


def test_nilpotent_series_terminates():
    np.testing.assert_allclose(matrix_exp([[0.0, 1.0], [0.0, 0.0]]), [[1.0, 1.0], [0.0, 1.0]], rtol=0, atol=1e-15)


def test_symmetric_permutation_matches_taylor_oracle():
    M = np.array([[0.0, 1.0], [1.0, 0.0]])
    expected = np.array([[math.cosh(1), math.sinh(1)], [math.sinh(1), math.cosh(1)]])
    np.testing.assert_allclose(taylor_expm(M), expected, rtol=1e-15)
    np.testing.assert_allclose(matrix_exp(M), expected, rtol=1e-14)


@pytest.mark.parametrize("norm", [1e-3, 0.01, 0.2, 0.9, 2.0, 4.0, 8.0, 20.0, 50.0])
def test_relative_error_against_extended_precision(norm, rng):
    # each norm lands in a different Pade order / squaring count
    for _ in range(3):
        p = int(rng.integers(2, 7))
        M = rng.standard_normal((p, p))
        M *= norm / np.abs(M).sum(axis=0).max()
        assert rel_err(matrix_exp(M), taylor_expm(M, terms=80)) <= 1e-10


def test_nonnegative_matrix_of_hadamard_square(rng):
    for _ in range(20):
        W = rng.uniform(-2, 2, size=(6, 6))
        M = W * W
        assert rel_err(matrix_exp(M), taylor_expm(M, terms=80)) <= 1e-10


@pytest.mark.parametrize("bad", [np.ones((2, 3)), np.array([[np.nan, 0], [0, 0]]), np.array([[np.inf]])])
def test_rejects_invalid_input(bad):
    with pytest.raises(InvalidInputError):
        matrix_exp(bad)


def test_h_at_zero():
    value, grad = acyclicity(np.zeros((4, 4)))
    assert value == 0.0
    assert np.array_equal(grad, np.zeros((4, 4)))


def test_h_on_triangular(rng):
    W = np.triu(rng.uniform(-3, 3, size=(5, 5)), k=1)
    assert acyclicity_value(W) < 1e-12


def test_h_two_cycle_closed_form():
    assert abs(acyclicity_value(np.array([[0.0, 1.0], [1.0, 0.0]])) - (2 * math.cosh(1) - 2)) < 1e-12
    assert abs(2 * math.cosh(1) - 2 - 1.0861612696) < 1e-10


def fd_grad(f, W, step=1e-5):
    G = np.zeros_like(W)
    for idx in np.ndindex(W.shape):
        E = np.zeros_like(W)
        E[idx] = step
        G[idx] = (f(W + E) - f(W - E)) / (2 * step)
    return G


def test_gradient_matches_finite_differences(rng):
    for _ in range(25):
        p = int(rng.integers(2, 9))
        W = rng.uniform(-1, 1, size=(p, p))
        _, grad = acyclicity(W)
        num = fd_grad(acyclicity_value, W)
        assert np.max(np.abs(grad - num)) / max(np.max(np.abs(num)), 1e-8) < 1e-4


square = st.integers(1, 6).flatmap(
    lambda p: arrays(np.float64, (p, p), elements=st.floats(-2, 2, allow_nan=False)))


@given(square)
def test_h_nonnegative(W):
    assert acyclicity_value(W) >= -1e-12


@given(square)
def test_exp_inverse_identity(M):
    np.testing.assert_allclose(matrix_exp(M) @ matrix_exp(-M), np.eye(M.shape[0]), atol=1e-8)


@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_h_vanishes_on_permuted_triangular(p, seed):
    r = np.random.default_rng(seed)
    W = np.triu(r.uniform(-2, 2, size=(p, p)), k=1)
    P = np.eye(p)[r.permutation(p)]
    assert acyclicity_value(P.T @ W @ P) < 1e-10


@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_h_detects_two_cycles_above_weight_floor(p, seed):
    # h sums nonnegative closed-walk weights, so extra edges can only raise it
    r = np.random.default_rng(seed)
    W = r.uniform(-2, 2, size=(p, p)) * (r.random((p, p)) < 0.3)
    i, j = r.choice(p, size=2, replace=False)
    W[i, j], W[j, i] = r.choice([-1, 1], size=2) * r.uniform(0.1, 2.0, size=2)
    assert acyclicity_value(W) > 1e-6


@pytest.mark.parametrize("k", [2, 3, 4, 5])
def test_h_on_k_cycle_matches_series(k):
    # sum_m tr(A^(mk))/(mk)! with A^k = a^k I on a k-cycle of squared weight a
    a = 0.1 ** 2
    W = np.zeros((k, k))
    for t in range(k):
        W[t, (t + 1) % k] = 0.1
    series = sum(k * a ** (m * k) / math.factorial(m * k) for m in range(1, 6))
    assert acyclicity_value(W) == pytest.approx(series, rel=1e-9)
