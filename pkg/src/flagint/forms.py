"""Matrix-valued differential forms on a chart: connections, 2-forms, flags.

Every form is a *field*: a callable taking a list of ``m`` coordinate values
and returning the stacked component matrices.  Coordinates can be complex
arrays (vectorized sampling) or nested dual numbers, so derived forms
(curvature, gauge transforms, the covariant exterior derivative) get exact
partial derivatives of any order without finite differencing.

Axis indices (``i``, ``j``, ``k``) are 0-based throughout; expression
variables are ``x1..xm``.
"""

from __future__ import annotations

import itertools
import dataclasses
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from flagint.errors import DimensionError, InvalidInputError, SingularMatrixError
from flagint.formlang import ScalarExpr, as_expr, complex_literal, evaluate_node
from flagint.formlang import dual
from flagint.formlang.expr import EvaluationDomainError

Field = Callable[[Sequence], object]

GAUGE_DET_TOL = 1e-9


# ---------------------------------------------------------------- helpers


def coords_of(points) -> list[np.ndarray]:
    """Split an ``(..., m)`` point array into ``m`` complex coordinate arrays."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 0:
        raise InvalidInputError("points need a trailing coordinate axis")
    return [pts[..., k].astype(complex) for k in range(pts.shape[-1])]


def _broadcast_value(value, lead: tuple[int, ...], tail: tuple[int, ...]) -> np.ndarray:
    return np.broadcast_to(np.asarray(value, dtype=complex), lead + tail).copy()


def _is_zero(x) -> bool:
    return isinstance(x, float) and x == 0.0


def _matmul(x, y):
    if _is_zero(x) or _is_zero(y):
        return 0.0
    return x @ y


def _bracket(x, y):
    return x @ y - y @ x


def _select(x, *idx):
    """``x[..., idx, :, :]`` that tolerates the scalar zero tangent."""
    if _is_zero(x):
        return 0.0
    return x[(Ellipsis,) + idx + (slice(None), slice(None))]


def field_partials(fn: Field, coords: Sequence, m: int):
    """Value of ``fn`` and its ``m`` exact first partials at ``coords``.

    Each partial seeds one coordinate with a fresh outermost infinitesimal, so
    the coordinates may already be duals (for derivatives of derived forms).
    Partials that vanish identically are returned as the scalar ``0.0``.
    """
    d = max(dual.depth(c) for c in coords)
    value = None
    derivs = []
    for k in range(m):
        seeded = list(coords)
        seeded[k] = dual.seeded(seeded[k], d)
        value, tangent = dual.split(fn(seeded), d)
        derivs.append(tangent)
    if value is None:
        value = fn(list(coords))
    return value, derivs


def _expr_grid(grid, m: int, n: int, what: str) -> tuple[tuple[ScalarExpr, ...], ...]:
    rows = list(grid)
    if len(rows) != n or any(len(list(r)) != n for r in rows):
        raise DimensionError(f"{what} must be an {n}x{n} grid of expressions")
    return tuple(tuple(as_expr(e, m) for e in row) for row in rows)


def _grid_field(grid: tuple[tuple[ScalarExpr, ...], ...], location: str) -> Field:
    def fn(coords):
        rows = []
        for r, row in enumerate(grid):
            entries = []
            for c, e in enumerate(row):
                try:
                    entries.append(evaluate_node(e.ast, coords))
                except EvaluationDomainError as exc:
                    raise EvaluationDomainError(exc.subexpression, f"{location}[{r},{c}]") from None
            rows.append(dual.stack(entries, axis=-1))
        return dual.stack(rows, axis=-2)

    return fn


def _check_mn(m: int, n: int) -> None:
    if m < 1 or n < 1:
        raise DimensionError("chart and algebra dimensions must be positive")


# ---------------------------------------------------------------- types


@dataclass(frozen=True)
class ConnectionForm:
    """Algebra-valued 1-form ``A = sum_i A_i dx_i``; field values ``(..., m, n, n)``."""

    m: int
    n: int
    field: Field = dataclasses.field(repr=False)
    components: tuple | None = dataclasses.field(default=None, repr=False)
    label: str = ""

    def __post_init__(self) -> None:
        _check_mn(self.m, self.n)

    @classmethod
    def from_expressions(cls, components: Sequence, m: int | None = None, label: str = "") -> "ConnectionForm":
        """Build from ``m`` grids of expressions (strings or :class:`ScalarExpr`)."""
        comps = list(components)
        m = len(comps) if m is None else m
        if len(comps) != m or m < 1:
            raise DimensionError(f"need {m} component grids, got {len(comps)}")
        n = len(list(comps[0]))
        grids = tuple(_expr_grid(g, m, n, f"A_{i + 1}") for i, g in enumerate(comps))
        fields = [_grid_field(g, f"A_{i + 1}") for i, g in enumerate(grids)]

        def fn(coords):
            return dual.stack([f(coords) for f in fields], axis=-3)

        return cls(m, n, fn, grids, label)

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if pts.shape[-1] != self.m:
            raise DimensionError(f"points have {pts.shape[-1]} coordinates, form has m={self.m}")
        value = dual.primal(self.field(coords_of(pts)))
        return _broadcast_value(value, pts.shape[:-1], (self.m, self.n, self.n))


@dataclass(frozen=True)
class TwoForm:
    """Antisymmetric 2-form; field values ``(..., m, m, n, n)`` with ``w[j,i] = -w[i,j]``."""

    m: int
    n: int
    field: Field = dataclasses.field(repr=False)
    label: str = ""

    def __post_init__(self) -> None:
        _check_mn(self.m, self.n)

    @classmethod
    def from_expressions(cls, m: int, n: int, components: Mapping[tuple[int, int], Sequence], label: str = "") -> "TwoForm":
        """``components`` maps 0-based pairs ``(i, j)`` with ``i < j`` to expression grids.

        Missing pairs are zero; the lower triangle is filled structurally.
        """
        fields: dict[tuple[int, int], Field] = {}
        for (i, j), grid in components.items():
            if not (0 <= i < j < m):
                raise DimensionError(f"2-form component ({i},{j}) needs 0 <= i < j < {m}")
            fields[(i, j)] = _grid_field(_expr_grid(grid, m, n, f"w_{i + 1}{j + 1}"), f"w_{i + 1}{j + 1}")

        def fn(coords):
            vals = {key: f(coords) for key, f in fields.items()}
            return _assemble_antisymmetric(m, n, vals)

        return cls(m, n, fn, label)

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if pts.shape[-1] != self.m:
            raise DimensionError(f"points have {pts.shape[-1]} coordinates, form has m={self.m}")
        value = dual.primal(self.field(coords_of(pts)))
        return _broadcast_value(value, pts.shape[:-1], (self.m, self.m, self.n, self.n))


def _assemble_antisymmetric(m: int, n: int, upper: Mapping[tuple[int, int], object]):
    zero = np.zeros((n, n), dtype=complex)
    rows = []
    for i in range(m):
        row = []
        for j in range(m):
            if i < j:
                row.append(upper.get((i, j), zero))
            elif i > j:
                v = upper.get((j, i))
                row.append(zero if v is None else -v)
            else:
                row.append(zero)
        rows.append(dual.stack(row, axis=-3))
    return dual.stack(rows, axis=-4)


@dataclass(frozen=True)
class ThreeFormCoefficient:
    """Totally antisymmetric coefficients ``C_ijk``; field values ``(..., m, m, m, n, n)``."""

    m: int
    n: int
    field: Field = dataclasses.field(repr=False)

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        value = dual.primal(self.field(coords_of(pts)))
        return _broadcast_value(value, pts.shape[:-1], (self.m,) * 3 + (self.n, self.n))

    def component(self, i: int, j: int, k: int, points) -> np.ndarray:
        return self(points)[..., i, j, k, :, :]


@dataclass(frozen=True)
class FormFlag:
    """Ordered flag of forms: ``(A,)`` for degree 1, ``(w, A)`` for degree 2."""

    degree: int
    top: ConnectionForm | TwoForm
    lower: ConnectionForm | None = None

    def __post_init__(self) -> None:
        if self.degree == 1:
            if not isinstance(self.top, ConnectionForm) or self.lower is not None:
                raise InvalidInputError("a degree-1 flag is a single connection form")
        elif self.degree == 2:
            if not isinstance(self.top, TwoForm) or not isinstance(self.lower, ConnectionForm):
                raise InvalidInputError("a degree-2 flag is (TwoForm, ConnectionForm)")
            if (self.top.m, self.top.n) != (self.lower.m, self.lower.n):
                raise DimensionError("flag members must share chart and algebra dimensions")
        else:
            raise InvalidInputError("flag degree must be 1 or 2")

    @property
    def m(self) -> int:
        return self.top.m

    @property
    def n(self) -> int:
        return self.top.n


@dataclass(frozen=True)
class GaugeFunction:
    """Group-valued function ``g(x)``; field values ``(..., n, n)``."""

    m: int
    n: int
    field: Field = dataclasses.field(repr=False)
    entries: tuple | None = dataclasses.field(default=None, repr=False)

    @classmethod
    def from_expressions(cls, entries: Sequence, m: int) -> "GaugeFunction":
        rows = list(entries)
        grid = _expr_grid(rows, m, len(rows), "g")
        return cls(m, len(rows), _grid_field(grid, "g"), grid)

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        value = dual.primal(self.field(coords_of(pts)))
        return _broadcast_value(value, pts.shape[:-1], (self.n, self.n))


def _checked_inverse(g):
    det = np.abs(np.linalg.det(np.asarray(dual.primal(g), dtype=complex)))
    if np.any(det <= GAUGE_DET_TOL):
        raise SingularMatrixError(f"gauge function is singular (|det| = {float(np.min(det)):.3g})")
    return dual.inv(g)


# ---------------------------------------------------------------- operations


def curvature(A: ConnectionForm) -> TwoForm:
    """``F_ij = dA_i/dx_j - dA_j/dx_i + [A_i, A_j]`` with exact partials."""
    m, n = A.m, A.n

    def fn(coords):
        value, derivs = field_partials(A.field, coords, m)
        upper = {}
        for i, j in itertools.combinations(range(m), 2):
            a_i, a_j = _select(value, i), _select(value, j)
            term = _bracket(a_i, a_j)
            d_j_ai = _select(derivs[j], i)
            d_i_aj = _select(derivs[i], j)
            if not _is_zero(d_j_ai):
                term = term + d_j_ai
            if not _is_zero(d_i_aj):
                term = term - d_i_aj
            upper[(i, j)] = term
        return _assemble_antisymmetric(m, n, upper)

    return TwoForm(m, n, fn, label=f"F({A.label})" if A.label else "F")


def covariant_ext_derivative(omega: TwoForm, A: ConnectionForm) -> ThreeFormCoefficient:
    """Coefficient of the covariant exterior derivative of ``omega`` along ``A``.

    ``C_ijk = cyc(d_k w_ij) + [w_ij, A_k] + [w_ki, A_j] + [w_jk, A_i]``, which
    vanishes identically for ``omega = curvature(A)``.
    """
    if omega.m != A.m or omega.n != A.n:
        raise DimensionError("2-form and connection dimensions differ")
    m, n = A.m, A.n
    if m < 3:
        raise DimensionError("the covariant exterior derivative of a 2-form needs m >= 3")

    def fn(coords):
        w, dw = field_partials(omega.field, coords, m)
        a = A.field(coords)
        coeffs = {}
        for i, j, k in itertools.combinations(range(m), 3):
            c = _bracket(_select(w, i, j), _select(a, k))
            c = c + _bracket(_select(w, k, i), _select(a, j))
            c = c + _bracket(_select(w, j, k), _select(a, i))
            for der, p, q in ((dw[k], i, j), (dw[j], k, i), (dw[i], j, k)):
                term = _select(der, p, q)
                if not _is_zero(term):
                    c = c + term
            coeffs[(i, j, k)] = c
        zero = np.zeros((n, n), dtype=complex)
        planes = []
        for i in range(m):
            rows = []
            for j in range(m):
                row = []
                for k in range(m):
                    key = tuple(sorted((i, j, k)))
                    if len(set(key)) < 3:
                        row.append(zero)
                        continue
                    sign = _permutation_sign((i, j, k))
                    row.append(coeffs[key] if sign > 0 else -coeffs[key])
                rows.append(dual.stack(row, axis=-3))
            planes.append(dual.stack(rows, axis=-4))
        return dual.stack(planes, axis=-5)

    return ThreeFormCoefficient(m, n, fn)


def _permutation_sign(p: tuple[int, ...]) -> int:
    sign = 1
    p = list(p)
    for a in range(len(p)):
        for b in range(a + 1, len(p)):
            if p[a] > p[b]:
                sign = -sign
    return sign


def gauge_transform_connection(g: GaugeFunction, A: ConnectionForm) -> ConnectionForm:
    """``A'_i = g A_i g^-1 + (d_i g) g^-1``; holonomies transform by endpoint conjugation."""
    if g.m != A.m or g.n != A.n:
        raise DimensionError("gauge function and connection dimensions differ")
    m = A.m

    def fn(coords):
        gv, dg = field_partials(g.field, coords, m)
        ginv = _checked_inverse(gv)
        a = A.field(coords)
        comps = []
        for i in range(m):
            term = gv @ _select(a, i) @ ginv
            extra = _matmul(dg[i], ginv)
            comps.append(term if _is_zero(extra) else term + extra)
        return dual.stack(comps, axis=-3)

    return ConnectionForm(m, A.n, fn, label=f"g({A.label})" if A.label else "g(A)")


def gauge_transform_curvature(g: GaugeFunction, F: TwoForm) -> TwoForm:
    """Pointwise conjugation ``F_ij -> g F_ij g^-1``."""
    if g.m != F.m or g.n != F.n:
        raise DimensionError("gauge function and 2-form dimensions differ")

    def fn(coords):
        gv = g.field(coords)
        ginv = _checked_inverse(gv)
        lift = (Ellipsis, None, None, slice(None), slice(None))
        return gv[lift] @ F.field(coords) @ ginv[lift]

    return TwoForm(F.m, F.n, fn, label=F.label)


def flatness_residual(A: ConnectionForm, points) -> float:
    """Largest Frobenius norm of any curvature component over ``points``."""
    F = curvature(A)(np.asarray(points, dtype=float).reshape(-1, A.m))
    if A.m < 2:
        return 0.0
    return float(np.max(np.linalg.norm(F, axis=(-2, -1))))


def square_grid(lo: float, hi: float, count: int, m: int = 2) -> np.ndarray:
    """``count^m`` points of the uniform grid on ``[lo, hi]^m``, shape ``(count^m, m)``."""
    axis = np.linspace(lo, hi, count)
    mesh = np.meshgrid(*([axis] * m), indexing="ij")
    return np.stack([c.reshape(-1) for c in mesh], axis=-1)


# ---------------------------------------------------------------- presets


def preset_cr_connection(f: ScalarExpr | str) -> ConnectionForm:
    """Real 2x2 connection of ``f dz`` for a function ``f`` of ``z = x1 + i x2``.

    With ``u = re f`` and ``v = -im f`` the components are
    ``A1 = [[u, v], [-v, u]]`` and ``A2 = [[v, -u], [u, v]]``; the curvature is
    the real matrix of ``-i (df/dx1 + i df/dx2)``, so the connection is flat
    exactly where ``f`` satisfies the Cauchy-Riemann equations.
    """
    f = as_expr(f, 2)
    text = f"({f})"
    u = f"re{text}"
    v = f"-im{text}"
    neg_u = f"-re{text}"
    neg_v = f"im{text}"
    return ConnectionForm.from_expressions([[[u, v], [neg_v, u]], [[v, neg_u], [u, v]]], label=f"cr[{f}]")


def preset_alpha_connection(alpha: complex) -> ConnectionForm:
    """Scalar connection ``alpha dz / z`` in real coordinates (singular at the origin)."""
    a = complex_literal(complex(alpha))
    r2 = "(x1^2 + x2^2)"
    return ConnectionForm.from_expressions(
        [[[f"{a}*(x1 - i*x2)/{r2}"]], [[f"{a}*(x2 + i*x1)/{r2}"]]],
        label=f"alpha[{complex(alpha)}]",
    )


def preset_constant(matrices: Sequence) -> ConnectionForm:
    """Constant connection ``A_i = X_i``."""
    mats = [np.asarray(X, dtype=complex) for X in matrices]
    if not mats:
        raise DimensionError("need at least one matrix")
    n = mats[0].shape[0]
    for X in mats:
        if X.shape != (n, n):
            raise DimensionError("constant connection matrices must share a square shape")
    grids = [[[complex_literal(X[r, c]) for c in range(n)] for r in range(n)] for X in mats]
    return ConnectionForm.from_expressions(grids, label="constant")


def _monomials(m: int, degree: int) -> list[tuple[int, ...]]:
    out = []
    for total in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(m), total):
            powers = [0] * m
            for k in combo:
                powers[k] += 1
            out.append(tuple(powers))
    return out


def _monomial_text(powers: tuple[int, ...]) -> str:
    factors = []
    for k, p in enumerate(powers):
        if p == 1:
            factors.append(f"x{k + 1}")
        elif p > 1:
            factors.append(f"x{k + 1}^{p}")
    return "*".join(factors)


def random_polynomial(rng: np.random.Generator, m: int, degree: int, scale: float) -> str:
    """Expression text of a polynomial with complex coefficients of modulus <= ``scale``."""
    terms = []
    for powers in _monomials(m, degree):
        coeff = scale * rng.uniform(0.0, 1.0) * np.exp(2j * np.pi * rng.uniform())
        mono = _monomial_text(powers)
        lit = complex_literal(coeff)
        terms.append(f"{lit}*{mono}" if mono else lit)
    return " + ".join(terms)


def random_polynomial_connection(seed: int, m: int, n: int, degree: int = 2, scale: float = 1.0) -> ConnectionForm:
    """Connection whose entries are random complex polynomials of total degree <= ``degree``."""
    rng = np.random.default_rng(seed)
    grids = [[[random_polynomial(rng, m, degree, scale) for _ in range(n)] for _ in range(n)] for _ in range(m)]
    return ConnectionForm.from_expressions(grids, label=f"poly[seed={seed}]")


def random_gauge_function(seed: int, m: int, n: int, degree: int = 1, scale: float = 0.5) -> GaugeFunction:
    """Smooth gauge function that is invertible everywhere.

    Built as ``L U`` with ``L`` unit lower triangular and ``U`` upper triangular
    with ``exp(polynomial)`` on the diagonal, so ``det g = exp(sum of diagonal
    polynomials)`` never vanishes.
    """
    rng = np.random.default_rng(seed)

    def poly() -> str:
        return random_polynomial(rng, m, degree, scale)

    lower = [[("1.0" if r == c else poly()) if c <= r else None for c in range(n)] for r in range(n)]
    upper = [[(f"exp({poly()})" if r == c else poly()) if c >= r else None for c in range(n)] for r in range(n)]
    entries = []
    for r in range(n):
        row = []
        for c in range(n):
            terms = [f"({lower[r][k]})*({upper[k][c]})" for k in range(min(r, c) + 1)]
            row.append(" + ".join(terms))
        entries.append(row)
    return GaugeFunction.from_expressions(entries, m)
