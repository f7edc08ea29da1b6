"""Monodromy of flat connections, conjugacy invariants, and two small
cohomology computations (the circle discrepancy and the class of z^alpha)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from flagint.errors import InvalidInputError, NotIntegrableError
from flagint.forms import ConnectionForm, flatness_residual
from flagint.formlang import ScalarExpr, as_expr, complex_literal, dual, evaluate_node
from flagint.holonomy import Word, path_holonomy, word_holonomy
from flagint.lattice import ENDPOINT_TOL, PATH_ALIASES, PathSpec, sample_path

DEFAULT_FLAT_TOL = 1e-8
_FLAT_SAMPLES_PER_LOOP = 256


@dataclass(frozen=True)
class MonodromyRep:
    base: np.ndarray
    generators: dict[str, PathSpec]
    images: dict[str, np.ndarray]
    flatness_residual: float
    flat_tol: float

    def image(self, word: Word) -> np.ndarray:
        return word_holonomy(self.images, word)


def monodromy_representation(
    A: ConnectionForm,
    base,
    loops: Mapping[str, PathSpec],
    N: int,
    flat_tol: float = DEFAULT_FLAT_TOL,
    extra_points=None,
) -> MonodromyRep:
    """Holonomies of named loops at ``base``, certified by a flatness check.

    Curvature is sampled along every loop (and at ``extra_points`` if
    given); a residual above ``flat_tol`` raises :class:`NotIntegrableError`
    because the images would then depend on more than the homotopy class.
    """
    base = np.asarray(base, dtype=float)
    if base.shape != (A.m,):
        raise InvalidInputError(f"base point must have {A.m} coordinates")
    samples = []
    for name, loop in loops.items():
        if loop.m != A.m:
            raise InvalidInputError(f"loop {name!r} lives in dimension {loop.m}, connection in {A.m}")
        if np.linalg.norm(loop.start - base) > ENDPOINT_TOL or np.linalg.norm(loop.end - base) > ENDPOINT_TOL:
            raise InvalidInputError(f"loop {name!r} is not closed at the base point")
        samples.append(sample_path(loop, min(N, _FLAT_SAMPLES_PER_LOOP)).nodes)
    if extra_points is not None:
        samples.append(np.asarray(extra_points, dtype=float).reshape(-1, A.m))
    residual = flatness_residual(A, np.concatenate(samples)) if samples else 0.0
    if residual > flat_tol:
        raise NotIntegrableError(f"connection is not flat: max curvature {residual:.3g} > {flat_tol:.3g}", residual)
    images = {name: path_holonomy(A, loop, N) for name, loop in loops.items()}
    return MonodromyRep(base, dict(loops), images, residual, flat_tol)


@dataclass(frozen=True)
class ConjugacyInvariants:
    trace: complex
    det: complex
    eigenvalues: tuple[complex, ...]

    def close_to(self, other: "ConjugacyInvariants", tol: float) -> bool:
        if len(self.eigenvalues) != len(other.eigenvalues):
            return False
        return (
            abs(self.trace - other.trace) <= tol
            and abs(self.det - other.det) <= tol
            and _multiset_distance(self.eigenvalues, other.eigenvalues) <= tol
        )


def _multiset_distance(a, b) -> float:
    # greedy nearest matching; adequate for the small n used here
    remaining = list(b)
    worst = 0.0
    for x in a:
        k = min(range(len(remaining)), key=lambda i: abs(remaining[i] - x))
        worst = max(worst, abs(remaining.pop(k) - x))
    return worst


def conjugacy_invariants(g) -> ConjugacyInvariants:
    """Trace, determinant and eigenvalues (sorted by real then imaginary part)."""
    g = np.asarray(g, dtype=complex)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise InvalidInputError("conjugacy invariants need a square matrix")
    eig = np.sort_complex(np.linalg.eigvals(g))
    return ConjugacyInvariants(complex(np.trace(g)), complex(np.linalg.det(g)), tuple(complex(e) for e in eig))


PERIOD_TOL = 1e-9
_PERIOD_PROBES = 17


def _periodic_values(e: ScalarExpr, t: np.ndarray, derivative: bool) -> np.ndarray:
    tc = t.astype(complex)
    if derivative:
        _, values = dual.split(evaluate_node(e.ast, [dual.seeded(tc, 0)]), 0)
    else:
        values = evaluate_node(e.ast, [tc])
    return np.broadcast_to(np.asarray(values, dtype=complex), t.shape)


def _check_periodic(e: ScalarExpr, what: str) -> None:
    probes = np.linspace(0.0, 1.0, _PERIOD_PROBES)
    gap = float(np.max(np.abs(_periodic_values(e, probes + 1.0, False) - _periodic_values(e, probes, False))))
    if gap > PERIOD_TOL:
        raise InvalidInputError(f"{what} is not 1-periodic (max |f(t+1) - f(t)| = {gap:.3g})")


def discrepancy_S1(omega: ScalarExpr | str, N: int, gauge: ScalarExpr | str | None = None) -> float:
    """Jump of a primitive of ``omega(t) dt`` around the circle ``t in [0, 1)``.

    Computed by the composite midpoint rule with ``N`` panels, which is
    spectrally accurate for smooth periodic integrands.  With ``gauge = f``
    the integrand is ``omega + f'`` (exact derivative), the gauge-shifted
    representative of the same class.
    """
    e = as_expr(omega, 1, PATH_ALIASES)
    if int(N) != N or N < 1:
        raise InvalidInputError("N must be a positive integer")
    _check_periodic(e, "1-form")
    mids = (2 * np.arange(N) + 1) / (2 * N)
    values = _periodic_values(e, mids, False)
    if gauge is not None:
        f = as_expr(gauge, 1, PATH_ALIASES)
        _check_periodic(f, "gauge function")
        values = values + _periodic_values(f, mids, True)
    total = complex(np.sum(values) / N)
    if abs(total.imag) > 1e-12 * max(1.0, abs(total.real)):
        raise InvalidInputError("1-form on the circle must be real-valued")
    return total.real


def random_periodic_function(seed: int, modes: int = 3, scale: float = 1.0) -> str:
    """Expression text of a random real trigonometric polynomial in ``t``."""
    rng = np.random.default_rng(seed)
    terms = [complex_literal(scale * rng.uniform(-1, 1))]
    for k in range(1, modes + 1):
        a, b = scale * rng.uniform(-1, 1, size=2)
        terms.append(f"{complex_literal(a)}*sin({2 * k}*pi*t)")
        terms.append(f"{complex_literal(b)}*cos({2 * k}*pi*t)")
    return " + ".join(terms)


@dataclass(frozen=True)
class AlphaClass:
    alpha: complex
    representative: complex  # alpha shifted by an integer so the real part lies in [0, 1)
    monodromy: complex  # exp(2 pi i alpha)


def alpha_class(alpha: complex) -> AlphaClass:
    """Class of the multivalued function ``z^alpha`` in ``C / Z``."""
    alpha = complex(alpha)
    if not (math.isfinite(alpha.real) and math.isfinite(alpha.imag)):
        raise InvalidInputError("alpha must be finite")
    shift = math.floor(alpha.real)
    rep = complex(alpha.real - shift, alpha.imag)
    if rep.real >= 1.0:
        rep = complex(rep.real - 1.0, rep.imag)
    return AlphaClass(alpha, rep, complex(np.exp(2j * np.pi * alpha)))


def same_alpha_class(alpha: complex, beta: complex, tol: float = 1e-12) -> bool:
    """Equal classes: integer real-part difference, equal imaginary parts and equal monodromy."""
    a, b = alpha_class(alpha), alpha_class(beta)
    diff = complex(alpha) - complex(beta)
    integral = abs(diff.imag) <= tol and abs(diff.real - round(diff.real)) <= tol
    return integral and abs(a.monodromy - b.monodromy) <= tol * max(1.0, abs(a.monodromy))
