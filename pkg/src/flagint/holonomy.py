"""Ordered-product integration of connections and 2-flags.

Conventions:

* A factor belonging to a later part of a path multiplies on the **left**, so
  ``Hol(g2 * g1) = Hol(g2) @ Hol(g1)`` and the transport solves
  ``U' = A(dx/dt) U``.
* Segment factors are ``exp(sum_i A_i(x_mid) dx_i)`` with the form evaluated at
  the parameter midpoint (second order); ``quadrature="left"`` uses the left
  endpoint instead (first order).
* Surface holonomy of ``(w, A)`` over a homotopy ``h`` approximates the
  holonomy of the boundary loop based at ``h(1, 0)``:
  ``Hol(right)^-1 Hol(row t2=1) Hol(left) Hol(row t2=0)^-1``.  When the sides
  are fixed points this is ``Hol(end path) Hol(start path)^-1``.
"""

from __future__ import annotations

import math
import re
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from flagint.algebra import group_distance, group_inverse, identity, mat_exp, mat_log
from flagint.errors import DimensionError, InvalidInputError
from flagint.forms import ConnectionForm, FormFlag, TwoForm
from flagint.lattice import (
    ENDPOINT_TOL,
    FaceSequence,
    HomotopySpec,
    PathSpec,
    cube_boundary_sequence_d2,
    lattice_2d,
    sample_path,
)

QUADRATURES = ("midpoint", "left")


def _check_dims(A: ConnectionForm, m: int) -> None:
    if A.m != m:
        raise DimensionError(f"connection has m={A.m}, geometry has m={m}")


def link_generators(A: ConnectionForm, points: np.ndarray, displacements: np.ndarray) -> np.ndarray:
    """``sum_i A_i(points) dx_i`` for stacks of points and displacement vectors."""
    values = A(points)
    return np.einsum("...i,...ijk->...jk", displacements.astype(complex), values)


def ordered_product(factors: np.ndarray) -> np.ndarray:
    """``F[N-1] @ ... @ F[0]`` (later factors on the left), left to right in a fixed order."""
    factors = np.asarray(factors)
    n = factors.shape[-1]
    result = identity(n)
    for F in factors:
        result = F @ result
    return result


def path_holonomy(A: ConnectionForm, path: PathSpec, N: int, quadrature: str = "midpoint") -> np.ndarray:
    """Ordered exponential of ``A`` along ``path`` on a uniform ``N``-segment partition."""
    _check_dims(A, path.m)
    if quadrature not in QUADRATURES:
        raise InvalidInputError(f"quadrature must be one of {QUADRATURES}")
    sample = sample_path(path, N)
    points = sample.midpoints if quadrature == "midpoint" else sample.nodes[:-1]
    return ordered_product(mat_exp(link_generators(A, points, sample.displacements)))


def _cell_generators(omega: TwoForm, points: np.ndarray, e1: np.ndarray, e2: np.ndarray) -> np.ndarray:
    # sum_{p<q} w_pq (e1^p e2^q - e1^q e2^p) = sum_{p,q} w_pq e1^p e2^q by antisymmetry
    w = omega(points)
    return np.einsum("...p,...q,...pqjk->...jk", e1.astype(complex), e2.astype(complex), w)


def surface_holonomy(flag: FormFlag, h: HomotopySpec, N1: int, N2: int) -> np.ndarray:
    """Surface ordered product of a 2-flag ``(w, A)`` over the homotopy ``h``.

    Rows ``t2 = const`` are swept in order (later rows on the left); inside a
    row the cells are taken in increasing ``t1`` (later on the left).  Cell
    ``(a, b)`` contributes ``I + C (exp(W) - I) C^-1`` where ``W`` is ``w`` at
    the cell center contracted with the cell's averaged edge vectors and
    ``C`` transports from the cell center to the base point ``h(1, 0)``: to the
    cell's lower right vertex, along the remainder of row ``b``, then down the
    side ``t1 = 1``.  Every transport uses midpoint links of ``A``.
    """
    if flag.degree != 2:
        raise InvalidInputError("surface holonomy needs a degree-2 flag")
    omega, A = flag.top, flag.lower
    _check_dims(A, h.m)
    lat = lattice_2d(h, N1, N2)
    V = lat.vertices
    n = A.n
    eye = identity(n)

    # links along rows b = 0..N2-1 and their inverses, (N1, N2, n, n)
    row_gen = link_generators(A, lat.row_midpoints[:, :N2], lat.edge1[:, :N2])
    row_link, row_link_inv = mat_exp(row_gen), mat_exp(-row_gen)
    # links up the side t1 = 1
    side_gen = link_generators(A, lat.column_midpoints[N1], lat.edge2[N1])
    side_down, side_up = mat_exp(-side_gen), mat_exp(side_gen)
    # half links from each cell center to its lower right vertex
    corner = V[1:, :N2]
    half_gen = link_generators(A, 0.5 * (lat.centers + corner), corner - lat.centers)
    half, half_inv = mat_exp(half_gen), mat_exp(-half_gen)
    # cell terms with edge vectors averaged over opposite sides
    e1 = 0.5 * (lat.edge1[:, :N2] + lat.edge1[:, 1:])
    e2 = 0.5 * (lat.edge2[:N1] + lat.edge2[1:])
    cell_exp = mat_exp(_cell_generators(omega, lat.centers, e1, e2))

    result = eye
    down = eye  # transport from V[N1, b] down to the base point
    down_inv = eye
    for b in range(N2):
        # suffix transports S[a] from V[a+1, b] to the row end V[N1, b]
        along = np.empty((N1, n, n), dtype=complex)
        along_inv = np.empty((N1, n, n), dtype=complex)
        acc, acc_inv = eye, eye
        for a in range(N1 - 1, -1, -1):
            along[a], along_inv[a] = acc, acc_inv
            acc = acc @ row_link[a, b]
            acc_inv = row_link_inv[a, b] @ acc_inv
        conj = down @ along @ half[:, b]
        conj_inv = half_inv[:, b] @ along_inv @ down_inv
        cells = eye + conj @ (cell_exp[:, b] - eye) @ conj_inv
        result = ordered_product(cells) @ result
        down = down @ side_down[b]
        down_inv = side_up[b] @ down_inv
    return result


def boundary_loop_holonomy(A: ConnectionForm, h: HomotopySpec, N: int) -> np.ndarray:
    """``Hol(right)^-1 Hol(row t2=1) Hol(left) Hol(row t2=0)^-1`` at ``N`` links per side.

    This is the loop that :func:`surface_holonomy` of ``(F(A), A)`` approximates.
    """
    _check_dims(A, h.m)
    sides = h.boundary_paths()
    hol = {k: path_holonomy(A, p, N) for k, p in sides.items()}
    return group_inverse(hol["right"]) @ hol["end"] @ hol["left"] @ group_inverse(hol["start"])


def cube_boundary_holonomy(
    flag: FormFlag,
    center,
    eps: float,
    axes: tuple[int, int, int],
    Nsub: int,
    sequence: FaceSequence | None = None,
) -> np.ndarray:
    """Ordered product over the twelve-entry cube boundary sequence.

    Faces use :func:`surface_holonomy` on their affine homotopies at
    ``Nsub x Nsub``; connecting edges use :func:`path_holonomy` at ``Nsub``.
    Later entries multiply on the left.  Faces that evaluate exactly to the
    identity are dropped and adjacent mutually inverse edges are cancelled
    before multiplying, so ``w = 0`` gives exactly ``I``.
    """
    if flag.degree != 2:
        raise InvalidInputError("cube boundary holonomy needs a degree-2 flag")
    if flag.m < 3:
        raise DimensionError("cube boundary holonomy needs m >= 3")
    seq = sequence if sequence is not None else cube_boundary_sequence_d2(center, eps, axes)
    eye = identity(flag.n)
    stack: list[tuple[tuple | None, np.ndarray]] = []
    for entry in seq:
        if entry.kind == "face":
            value = surface_holonomy(flag, entry.homotopy(), Nsub, Nsub)
            if np.array_equal(value, eye):
                continue
            stack.append((None, value))
            continue
        key = (tuple(entry.start), tuple(entry.end))
        if stack and stack[-1][0] == (key[1], key[0]):
            stack.pop()
            continue
        stack.append((key, path_holonomy(flag.lower, entry.path(), Nsub)))
    result = eye
    for _, value in stack:
        result = value @ result
    return result


def square_loop(x, i: int, j: int, eps: float) -> list[PathSpec]:
    """Sides of the centered ``eps`` square in the ``(i, j)`` plane.

    Starting at the lower left corner the loop runs ``+e_j, +e_i, -e_j, -e_i``,
    the orientation for which ``log Hol / eps^2 -> +F_ij``.
    """
    x = np.asarray(x, dtype=float)
    if i == j or not (0 <= i < x.size and 0 <= j < x.size):
        raise InvalidInputError("loop axes must be distinct coordinate indices")
    ei = np.zeros(x.size)
    ej = np.zeros(x.size)
    ei[i] = eps
    ej[j] = eps
    c0 = x - 0.5 * (ei + ej)
    corners = [c0, c0 + ej, c0 + ej + ei, c0 + ei, c0]
    return [PathSpec.segment(p, q) for p, q in zip(corners, corners[1:])]


def loop_holonomy(A: ConnectionForm, sides: Sequence[PathSpec], N: int) -> np.ndarray:
    result = identity(A.n)
    for side in sides:
        result = path_holonomy(A, side, N) @ result
    return result


def loop_curvature_estimate(A: ConnectionForm, x, i: int, j: int, eps: float, N: int) -> np.ndarray:
    """``log Hol(square loop) / eps^2``, an estimate of ``F_ij(x)``."""
    if not eps > 0:
        raise InvalidInputError("eps must be positive")
    x = np.asarray(x, dtype=float)
    _check_dims(A, x.size)
    return mat_log(loop_holonomy(A, square_loop(x, i, j, eps), N)) / (eps * eps)


# ------------------------------------------------------------------ words


class UnassignedGeneratorError(InvalidInputError):
    pass


_LETTER = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)(?:\^\(?([+-]?1)\)?|(⁻¹))?")


@dataclass(frozen=True)
class Word:
    """Free-group word as ``(generator, +1 | -1)`` letters in written order."""

    letters: tuple[tuple[str, int], ...]
    generators: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        for name, power in self.letters:
            if power not in (1, -1):
                raise InvalidInputError("word exponents must be +1 or -1")
            if self.generators and name not in self.generators:
                raise InvalidInputError(f"letter {name!r} is not a declared generator")

    @classmethod
    def parse(cls, text: str, generators: Sequence[str]) -> "Word":
        """Parse ``"a b a^-1 b^-1"``; single-character generators may be run together."""
        gens = frozenset(generators)
        chunks = text.split()
        if len(chunks) == 1 and gens and all(len(g) == 1 for g in gens) and chunks[0] not in gens:
            chunks = _split_compact(chunks[0])
        letters = []
        for chunk in chunks:
            m = _LETTER.fullmatch(chunk)
            if m is None:
                raise InvalidInputError(f"cannot parse word letter {chunk!r}")
            power = -1 if (m.group(3) or (m.group(2) or "1").lstrip("+") == "-1") else 1
            letters.append((m.group(1), power))
        return cls(tuple(letters), gens)

    def inverse(self) -> "Word":
        return Word(tuple((g, -p) for g, p in reversed(self.letters)), self.generators)

    def __str__(self) -> str:
        return " ".join(g if p == 1 else f"{g}^-1" for g, p in self.letters)


def _split_compact(text: str) -> list[str]:
    out = []
    pos = 0
    while pos < len(text):
        m = re.match(r"[A-Za-z_](?:\^\(?[+-]?1\)?|⁻¹)?", text[pos:])
        if m is None:
            raise InvalidInputError(f"cannot parse word {text!r}")
        out.append(m.group())
        pos += m.end()
    return out


def word_holonomy(assignments: Mapping[str, np.ndarray], word: Word) -> np.ndarray:
    """Product of assigned elements in written order (leftmost letter applied last)."""
    result = None
    for name, power in word.letters:
        if name not in assignments:
            raise UnassignedGeneratorError(f"generator {name!r} has no assigned value")
        g = np.asarray(assignments[name], dtype=complex)
        g = g if power == 1 else group_inverse(g)
        result = g if result is None else result @ g
    if result is None:
        some = next(iter(assignments.values()), None)
        if some is None:
            raise InvalidInputError("cannot size the empty word without assignments")
        return identity(np.asarray(some).shape[0])
    return result


# ------------------------------------------------------------ convergence


def _distance(x, y) -> float:
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    return float(np.linalg.norm(x - y))


def _observed_order(d_coarse: float, d_fine: float, ratio: float) -> float:
    if d_fine == 0.0:
        return math.inf
    if d_coarse == 0.0:
        return math.nan
    return math.log(d_coarse / d_fine) / math.log(ratio)


@dataclass(frozen=True)
class ConvergenceReport:
    """Values of a discretized quantity on refining levels.

    ``residuals[k]`` is the distance of level ``k`` to ``reference`` when one is
    given, otherwise to the finest level.  ``estimated_order`` comes from the
    last three levels (successive differences, or reference residuals when a
    reference exists); ``saturated`` flags an exactly converged sequence,
    reported with infinite order.
    """

    levels: tuple[float, ...]
    values: tuple
    residuals: tuple[float, ...]
    estimated_order: float
    extrapolant: object
    saturated: bool
    reference: object = None
    wall_ms: tuple[float, ...] = ()
    distance: Callable[[object, object], float] = field(default=None, repr=False, compare=False)

    def orders(self) -> list[float]:
        """Observed order at each level (NaN where fewer levels are available).

        With a reference it compares residuals at levels ``k-1`` and ``k``;
        without one it compares successive differences ending at ``k``.  The
        last entry equals ``estimated_order``.
        """
        dist = self.distance or _distance
        L, v = self.levels, self.values
        out = []
        for k in range(len(L)):
            if self.reference is not None and k >= 1:
                out.append(_observed_order(self.residuals[k - 1], self.residuals[k], L[k] / L[k - 1]))
            elif self.reference is None and k >= 2:
                out.append(_observed_order(dist(v[k - 1], v[k - 2]), dist(v[k], v[k - 1]), L[k - 1] / L[k - 2]))
            else:
                out.append(math.nan)
        return out


def refine(
    f: Callable[[float], object],
    levels: Sequence[float],
    reference=None,
    distance: Callable[[object, object], float] = _distance,
) -> ConvergenceReport:
    """Run ``f`` on each level and estimate the convergence order.

    Levels are refinement parameters (segment counts, or ``1/eps``); at least
    three strictly increasing positive ones are needed.  The Richardson
    extrapolant is ``v_L + (v_L - v_{L-1}) / (r^p - 1)`` with ``r`` the last
    level ratio and ``p`` the estimated order.
    """
    levels = tuple(levels)
    if len(levels) < 3:
        raise InvalidInputError("refine needs at least three levels")
    if any(not (isinstance(N, (int, float)) and math.isfinite(N) and N > 0) for N in levels):
        raise InvalidInputError("levels must be finite positive numbers")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise InvalidInputError("levels must be strictly increasing")
    values, wall = [], []
    for N in levels:
        t0 = time.perf_counter()
        values.append(f(N))
        wall.append(1000.0 * (time.perf_counter() - t0))
    values = tuple(values)
    target = values[-1] if reference is None else reference
    residuals = tuple(distance(v, target) for v in values)
    ratio = levels[-1] / levels[-2]
    if reference is None:
        d1 = distance(values[-2], values[-3])
        d2 = distance(values[-1], values[-2])
        ratio_prev = levels[-2] / levels[-3]
    else:
        d1, d2 = residuals[-2], residuals[-1]
        ratio_prev = ratio
    order = _observed_order(d1, d2, ratio_prev)
    saturated = d2 == 0.0
    extrapolant = values[-1]
    if math.isfinite(order):
        last = np.asarray(values[-1], dtype=complex)
        prev = np.asarray(values[-2], dtype=complex)
        denom = ratio**order - 1.0
        extrapolant = last + (last - prev) / denom if denom != 0 else last
    return ConvergenceReport(levels, values, residuals, order, extrapolant, saturated, reference, tuple(wall), distance)


def homotopy_invariance_check(A: ConnectionForm, path1: PathSpec, path2: PathSpec, N: int) -> float:
    """Distance between the holonomies of two paths with common endpoints."""
    if np.linalg.norm(path1.start - path2.start) > ENDPOINT_TOL or np.linalg.norm(path1.end - path2.end) > ENDPOINT_TOL:
        raise InvalidInputError("paths must share endpoints within 1e-9")
    return group_distance(path_holonomy(A, path1, N), path_holonomy(A, path2, N))
