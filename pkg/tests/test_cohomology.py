from __future__ import annotations

import cmath

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from flagint.algebra import group_distance
from flagint.cohomology import (
    alpha_class,
    conjugacy_invariants,
    discrepancy_S1,
    monodromy_representation,
    random_periodic_function,
    same_alpha_class,
)
from flagint.errors import InvalidInputError, NotIntegrableError
from flagint.forms import (
    ConnectionForm,
    gauge_transform_connection,
    preset_alpha_connection,
    random_gauge_function,
    random_polynomial_connection,
)
from flagint.formlang import complex_literal
from flagint.holonomy import Word
from flagint.lattice import PathSpec

CIRCLE = PathSpec.from_strings(["cos(2*pi*t)", "sin(2*pi*t)"])
TWICE = PathSpec.from_strings(["cos(4*pi*t)", "sin(4*pi*t)"])
AWAY = PathSpec.from_strings(["1.5 - 0.5*cos(2*pi*t)", "0.5*sin(2*pi*t)"])
BASE = [1.0, 0.0]


def matrix_log_connection(M: np.ndarray) -> ConnectionForm:
    """``M dz / z``: flat, with monodromy ``exp(2 pi i M)`` around the origin."""
    r2 = "(x1^2 + x2^2)"
    lit = [[complex_literal(M[r, c]) for c in range(2)] for r in range(2)]
    A1 = [[f"{lit[r][c]}*(x1 - i*x2)/{r2}" for c in range(2)] for r in range(2)]
    A2 = [[f"{lit[r][c]}*(x2 + i*x1)/{r2}" for c in range(2)] for r in range(2)]
    return ConnectionForm.from_expressions([A1, A2])


M = np.array([[0.1, 0.4], [-0.2, 0.3 + 0.1j]])


def test_alpha_monodromy_matches_closed_form():
    alpha = 0.3 + 0.7j
    rep = monodromy_representation(preset_alpha_connection(alpha), BASE, {"g": CIRCLE, "e": AWAY}, 4096)
    assert abs(rep.images["g"][0, 0] - cmath.exp(2j * cmath.pi * alpha)) <= 1e-8
    assert abs(rep.images["e"][0, 0] - 1.0) <= 1e-12


def test_matrix_monodromy_and_representation_property():
    A = matrix_log_connection(M)
    rep = monodromy_representation(A, BASE, {"g": CIRCLE}, 4096)
    assert group_distance(rep.images["g"], scipy.linalg.expm(2j * np.pi * M)) <= 1e-6
    # the doubled loop on the same mesh per revolution
    twice = monodromy_representation(A, BASE, {"gg": TWICE}, 8192)
    composed = rep.image(Word.parse("g g", ["g"]))
    assert group_distance(twice.images["gg"], composed) <= 1e-6


def test_gauge_group_conjugates_monodromy():
    A = matrix_log_connection(M)
    g = random_gauge_function(3, 2, 2, degree=1, scale=0.3)
    rep = monodromy_representation(A, BASE, {"g": CIRCLE}, 4096)
    rep_g = monodromy_representation(gauge_transform_connection(g, A), BASE, {"g": CIRCLE}, 4096)
    gb = g(np.array(BASE))
    expected = gb @ rep.images["g"] @ np.linalg.inv(gb)
    assert group_distance(rep_g.images["g"], expected) <= 1e-6
    inv_a, inv_b = conjugacy_invariants(rep.images["g"]), conjugacy_invariants(rep_g.images["g"])
    assert inv_a.close_to(inv_b, 1e-6)


def test_non_flat_connection_is_refused():
    A = random_polynomial_connection(1, 2, 2)
    with pytest.raises(NotIntegrableError) as info:
        monodromy_representation(A, BASE, {"g": CIRCLE}, 256)
    assert info.value.residual > 1e-8


def test_loops_must_be_based_at_base():
    with pytest.raises(InvalidInputError):
        monodromy_representation(preset_alpha_connection(0.5), [0.0, 1.0], {"g": CIRCLE}, 64)


def test_conjugacy_invariants():
    g = np.array([[2.0, 1.0], [1.0, 1.0]])
    h = np.array([[0.5, 0.2], [0.0, 3.0]])
    a, b = conjugacy_invariants(h), conjugacy_invariants(g @ h @ np.linalg.inv(g))
    assert a.close_to(b, 1e-12)
    assert not a.close_to(conjugacy_invariants(2 * h), 1e-6)
    assert a.trace == pytest.approx(3.5) and a.det == pytest.approx(1.5)


# ------------------------------------------------------------- circle


@pytest.mark.parametrize("c", [0.0, 1.0, -2.5, 1e-3])
def test_discrepancy_of_constant_form(c):
    assert abs(discrepancy_S1(complex_literal(c), 64) - c) <= 1e-12


@given(st.integers(0, 10_000), st.integers(0, 10_000))
def test_discrepancy_is_linear(s1, s2):
    w1, w2 = random_periodic_function(s1), random_periodic_function(s2)
    total = discrepancy_S1(f"{w1} + {w2}", 128)
    assert abs(total - discrepancy_S1(w1, 128) - discrepancy_S1(w2, 128)) <= 1e-12


@given(st.integers(0, 10_000))
def test_discrepancy_is_gauge_invariant(seed):
    w, f = random_periodic_function(seed), random_periodic_function(seed + 1, modes=4)
    assert abs(discrepancy_S1(w, 256, gauge=f) - discrepancy_S1(w, 256)) <= 1e-10


def test_discrepancy_rejects_non_periodic_and_complex_forms():
    with pytest.raises(InvalidInputError):
        discrepancy_S1("t", 32)
    with pytest.raises(InvalidInputError):
        discrepancy_S1("1", 32, gauge="t^2")
    with pytest.raises(InvalidInputError):
        discrepancy_S1("i", 32)


# ------------------------------------------------------------- C / Z


@pytest.mark.parametrize(
    "alpha, rep",
    [(2.3 + 0.5j, 0.3 + 0.5j), (-0.25, 0.75), (1.0, 0.0), (0.0 - 1j, -1j)],
)
def test_alpha_class_representative(alpha, rep):
    cls = alpha_class(alpha)
    assert abs(cls.representative - rep) <= 1e-12
    assert 0.0 <= cls.representative.real < 1.0
    assert abs(cls.monodromy - cmath.exp(2j * cmath.pi * alpha)) <= 1e-12


@given(
    st.complex_numbers(max_magnitude=50, allow_nan=False, allow_infinity=False),
    st.integers(-20, 20),
)
def test_integer_shifts_preserve_class(alpha, k):
    assert same_alpha_class(alpha, alpha + k, tol=1e-9)
    assert not same_alpha_class(alpha, alpha + 0.5, tol=1e-9)


def test_alpha_class_rejects_non_finite():
    with pytest.raises(InvalidInputError):
        alpha_class(complex("nan"))
