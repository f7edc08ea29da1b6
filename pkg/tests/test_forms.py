from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from flagint.algebra import commutator
from flagint.errors import DimensionError, InvalidInputError, SingularMatrixError
from flagint.formlang import EvaluationDomainError
from flagint.forms import (
    ConnectionForm,
    FormFlag,
    GaugeFunction,
    TwoForm,
    covariant_ext_derivative,
    curvature,
    flatness_residual,
    gauge_transform_connection,
    gauge_transform_curvature,
    preset_alpha_connection,
    preset_constant,
    preset_cr_connection,
    random_gauge_function,
    random_polynomial_connection,
    square_grid,
)

X = np.array([[0, 1], [0, 0]], dtype=complex)
Y = np.array([[0, 0], [1, 0]], dtype=complex)


def _fd_partial(field_at, x, j, h=1e-5):
    e = np.zeros_like(x)
    e[j] = h
    return (field_at(x + e) - field_at(x - e)) / (2 * h)


def test_constant_connection_curvature_is_bracket():
    F = curvature(preset_constant([X, Y]))(np.zeros(2))
    assert np.array_equal(F[0, 1], commutator(X, Y))
    assert np.array_equal(F[1, 0], -commutator(X, Y))
    assert np.array_equal(F[0, 0], np.zeros((2, 2)))


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_curvature_matches_finite_differences(seed):
    A = random_polynomial_connection(seed, 3, 2, degree=2)
    x = np.array([0.3, -0.2, 0.5])
    F = curvature(A)(x)
    dA = [_fd_partial(A, x, j) for j in range(3)]
    a = A(x)
    for i, j in itertools.combinations(range(3), 2):
        expected = dA[j][i] - dA[i][j] + a[i] @ a[j] - a[j] @ a[i]
        assert np.linalg.norm(F[i, j] - expected) <= 1e-8


def test_curvature_is_antisymmetric_on_grids():
    A = random_polynomial_connection(9, 3, 2)
    F = curvature(A)(square_grid(-1, 1, 4, 3))
    assert F.shape == (64, 3, 3, 2, 2)
    assert np.array_equal(F, -np.swapaxes(F, 1, 2))


@pytest.mark.parametrize("f", ["x1 + i*x2", "(x1 + i*x2)^2", "exp(x1 + i*x2)", "sin(x1 + i*x2)", "3.5"])
def test_cr_preset_is_flat_for_holomorphic_f(f):
    A = preset_cr_connection(f)
    assert flatness_residual(A, square_grid(-1, 1, 21)) <= 1e-10


@pytest.mark.parametrize("f, expected", [("conj(x1 + i*x2)", 2 * np.sqrt(2)), ("x1", np.sqrt(2))])
def test_cr_preset_curvature_measures_dbar(f, expected):
    # F = real matrix of -i(df/dx1 + i df/dx2); |.|_F = sqrt(2) |df/dx1 + i df/dx2|
    assert flatness_residual(preset_cr_connection(f), square_grid(-1, 1, 5)) == pytest.approx(expected, rel=1e-14)


def test_alpha_preset_is_alpha_over_z():
    alpha = 0.3 + 0.7j
    A = preset_alpha_connection(alpha)
    x = np.array([0.6, -0.8])
    z = complex(*x)
    a = A(x)
    assert a[0, 0, 0] == pytest.approx(alpha / z, abs=1e-15)
    assert a[1, 0, 0] == pytest.approx(1j * alpha / z, abs=1e-15)
    assert flatness_residual(A, np.array([[0.5, 0.5], [-1.0, 2.0]])) <= 1e-14


@given(st.integers(0, 10_000))
def test_bianchi_identity_for_random_connections(seed):
    A = random_polynomial_connection(seed, 3, 2, degree=2)
    pts = np.random.default_rng(seed).uniform(-1, 1, size=(5, 3))
    C = covariant_ext_derivative(curvature(A), A)(pts)
    assert np.max(np.linalg.norm(C, axis=(-2, -1))) <= 1e-10


def test_covariant_derivative_is_nonzero_for_generic_two_forms():
    A = random_polynomial_connection(4, 3, 2, degree=1)
    omega = TwoForm.from_expressions(3, 2, {(0, 1): [["x3", "0"], ["0", "x3"]]})
    C = covariant_ext_derivative(omega, A)(np.zeros(3))
    # d_3 w_12 = I, and the commutator terms vanish because w_12 = 0 at the origin
    assert np.allclose(C[0, 1, 2], np.eye(2), atol=1e-15)
    assert np.allclose(C[1, 0, 2], -np.eye(2), atol=1e-15)
    assert np.allclose(C[2, 0, 1], np.eye(2), atol=1e-15)


def test_covariant_derivative_needs_three_dimensions():
    A = random_polynomial_connection(1, 2, 2)
    with pytest.raises(DimensionError):
        covariant_ext_derivative(curvature(A), A)


@pytest.mark.parametrize("seed", [11, 12])
def test_gauge_transform_formula_against_finite_differences(seed):
    A = random_polynomial_connection(seed, 2, 2)
    g = random_gauge_function(seed + 1, 2, 2)
    x = np.array([0.2, -0.4])
    gx = g(x)
    ginv = np.linalg.inv(gx)
    got = gauge_transform_connection(g, A)(x)
    for i in range(2):
        expected = gx @ A(x)[i] @ ginv + _fd_partial(g, x, i) @ ginv
        assert np.linalg.norm(got[i] - expected) <= 1e-8


@given(st.integers(0, 10_000))
def test_curvature_transforms_by_conjugation(seed):
    A = random_polynomial_connection(seed, 2, 2, degree=2)
    g = random_gauge_function(seed + 7, 2, 2)
    pts = np.random.default_rng(seed).uniform(-1, 1, size=(4, 2))
    lhs = curvature(gauge_transform_connection(g, A))(pts)
    rhs = gauge_transform_curvature(g, curvature(A))(pts)
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * max(1.0, np.max(np.abs(rhs)))


def test_random_gauge_function_is_invertible_and_seeded():
    g = random_gauge_function(5, 3, 2)
    pts = square_grid(-2, 2, 7, 3)
    assert np.min(np.abs(np.linalg.det(g(pts)))) > 1e-3
    assert np.array_equal(g(pts), random_gauge_function(5, 3, 2)(pts))


def test_singular_gauge_is_rejected():
    g = GaugeFunction.from_expressions([["x1", "0"], ["0", "1"]], 2)
    A = preset_constant([X, Y])
    with pytest.raises(SingularMatrixError):
        gauge_transform_connection(g, A)(np.array([0.0, 0.3]))


def test_domain_error_carries_component_location():
    A = ConnectionForm.from_expressions([[["0", "1/x1"], ["0", "0"]], [["0", "0"], ["0", "0"]]])
    with pytest.raises(EvaluationDomainError) as info:
        A(np.array([0.0, 1.0]))
    assert info.value.location == "A_1[0,1]"
    assert info.value.subexpression == "1/x1"


def test_two_form_validation_and_antisymmetry():
    with pytest.raises(DimensionError):
        TwoForm.from_expressions(2, 1, {(1, 0): [["1"]]})
    w = TwoForm.from_expressions(3, 1, {(0, 2): [["x2"]]})
    v = w(np.array([0.0, 4.0, 0.0]))
    assert v[0, 2, 0, 0] == 4 and v[2, 0, 0, 0] == -4 and v[0, 1, 0, 0] == 0


def test_connection_shape_checks():
    with pytest.raises(DimensionError):
        ConnectionForm.from_expressions([[["1", "0"], ["0"]]])
    A = preset_constant([X, Y])
    with pytest.raises(DimensionError):
        A(np.zeros(3))


def test_form_flag_validation():
    A = preset_constant([X, Y])
    F = curvature(A)
    assert FormFlag(2, F, A).m == 2
    with pytest.raises(InvalidInputError):
        FormFlag(2, A, A)
    with pytest.raises(InvalidInputError):
        FormFlag(3, F, A)
    with pytest.raises(DimensionError):
        FormFlag(2, curvature(random_polynomial_connection(0, 3, 2)), A)
