"""Lattice approximation of paths and flagged homotopies.

Paths and homotopies are expression-backed maps from parameter space into
the chart.  Sampling uses uniform partitions with parameters ``k / N`` so
that refinement nests exactly.  This module also builds the ordered
boundary sequence of a small cube and the cube-to-flagged-disk cell tables.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from flagint.errors import DimensionError, InvalidInputError
from flagint.formlang import ScalarExpr, as_expr, complex_literal, evaluate_node, parse

PATH_ALIASES = {"t": 1}
HOMOTOPY_ALIASES = {"t1": 1, "t2": 2}
# parametrizations must be real; tolerated imaginary round-off
_IMAG_TOL = 1e-12
ENDPOINT_TOL = 1e-9


def _real_coords(values: list, shape: tuple[int, ...]) -> np.ndarray:
    out = np.stack([np.broadcast_to(np.asarray(v, dtype=complex), shape) for v in values], axis=-1)
    if out.size and np.max(np.abs(out.imag)) > _IMAG_TOL * max(1.0, float(np.max(np.abs(out.real)))):
        raise InvalidInputError("parametrization produced non-real chart coordinates")
    if not np.all(np.isfinite(out)):
        raise InvalidInputError("parametrization produced non-finite coordinates")
    return out.real.copy()


@dataclass(frozen=True)
class PathSpec:
    """Curve ``t -> (x1(t), ..., xm(t))`` on ``[0, 1]``."""

    coords: tuple[ScalarExpr, ...]

    def __post_init__(self) -> None:
        if not self.coords:
            raise DimensionError("a path needs at least one coordinate")
        for e in self.coords:
            if e.arity != 1:
                raise DimensionError("path coordinates must have arity 1")

    @classmethod
    def from_strings(cls, coords: Sequence) -> "PathSpec":
        return cls(tuple(as_expr(c, 1, PATH_ALIASES) for c in coords))

    @classmethod
    def segment(cls, start, end) -> "PathSpec":
        """Straight segment from ``start`` to ``end``."""
        start = np.asarray(start, dtype=float)
        end = np.asarray(end, dtype=float)
        if start.shape != end.shape or start.ndim != 1:
            raise DimensionError("segment endpoints must be points of equal dimension")
        coords = []
        for a, b in zip(start, end):
            if b == a:
                coords.append(complex_literal(a))
            else:
                coords.append(f"{complex_literal(a)} + {complex_literal(b - a)}*t")
        return cls.from_strings(coords)

    @property
    def m(self) -> int:
        return len(self.coords)

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        tc = t.astype(complex)
        return _real_coords([evaluate_node(e.ast, [tc]) for e in self.coords], t.shape)

    @cached_property
    def start(self) -> np.ndarray:
        return self(0.0)

    @cached_property
    def end(self) -> np.ndarray:
        return self(1.0)

    def subpath(self, t0: float, t1: float) -> "PathSpec":
        """The piece ``s -> path(t0 + (t1 - t0) s)`` reparametrized to ``[0, 1]``."""
        if t0 == 0.0:
            text = f"{complex_literal(t1)}*x1"
        else:
            text = f"{complex_literal(t0)} + {complex_literal(t1 - t0)}*x1"
        param = parse(text, 1)
        return PathSpec(tuple(e.substitute({1: param}, 1) for e in self.coords))

    def is_closed(self, tol: float = ENDPOINT_TOL) -> bool:
        return bool(np.linalg.norm(self.end - self.start) <= tol)


@dataclass(frozen=True)
class PathSample:
    """Uniform partition of a path: ``N + 1`` nodes, ``N`` segments."""

    nodes: np.ndarray  # (N+1, m)
    midpoints: np.ndarray  # (N, m), path evaluated at parameter midpoints
    displacements: np.ndarray  # (N, m), nodes[k+1] - nodes[k]

    @property
    def N(self) -> int:
        return self.displacements.shape[0]


def _check_count(N: int, name: str = "N") -> None:
    if int(N) != N or N < 1:
        raise InvalidInputError(f"{name} must be a positive integer, got {N!r}")


def sample_path(path: PathSpec, N: int) -> PathSample:
    """Sample ``path`` on the uniform partition ``t_k = k / N``."""
    _check_count(N)
    k = np.arange(N + 1)
    nodes = path(k / N)
    mids = path((2 * k[:-1] + 1) / (2 * N))
    return PathSample(nodes, mids, np.diff(nodes, axis=0))


@dataclass(frozen=True)
class Flagging:
    """Boundary data of a 2-disk: corners and the two boundary paths between them."""

    sigma0: np.ndarray
    sigma1: np.ndarray
    path0: PathSpec
    path1: PathSpec

    def __post_init__(self) -> None:
        for p in (self.path0, self.path1):
            if np.linalg.norm(p.start - self.sigma0) > ENDPOINT_TOL or np.linalg.norm(p.end - self.sigma1) > ENDPOINT_TOL:
                raise InvalidInputError("flag boundary paths must run from sigma0 to sigma1")


@dataclass(frozen=True)
class HomotopySpec:
    """Map ``(t1, t2) -> chart`` on the unit square.

    Rows ``t2 = const`` are paths in ``t1``; the family sweeps from the path
    ``t2 = 0`` to the path ``t2 = 1``.
    """

    coords: tuple[ScalarExpr, ...]

    def __post_init__(self) -> None:
        if not self.coords:
            raise DimensionError("a homotopy needs at least one coordinate")
        for e in self.coords:
            if e.arity != 2:
                raise DimensionError("homotopy coordinates must have arity 2")

    @classmethod
    def from_strings(cls, coords: Sequence) -> "HomotopySpec":
        return cls(tuple(as_expr(c, 2, HOMOTOPY_ALIASES) for c in coords))

    @property
    def m(self) -> int:
        return len(self.coords)

    def __call__(self, t1, t2) -> np.ndarray:
        t1, t2 = np.broadcast_arrays(np.asarray(t1, dtype=float), np.asarray(t2, dtype=float))
        args = [t1.astype(complex), t2.astype(complex)]
        return _real_coords([evaluate_node(e.ast, args) for e in self.coords], t1.shape)

    def _restrict(self, fixed: int, value: float) -> PathSpec:
        lit = parse(complex_literal(value), 1)
        free = parse("x1", 1)
        repl = {fixed: lit, 3 - fixed: free}
        return PathSpec(tuple(e.substitute(repl, 1) for e in self.coords))

    def row(self, t2: float) -> PathSpec:
        """The path ``t1 -> h(t1, t2)``."""
        return self._restrict(2, t2)

    def column(self, t1: float) -> PathSpec:
        """The path ``t2 -> h(t1, t2)``."""
        return self._restrict(1, t1)

    def boundary_paths(self) -> dict[str, PathSpec]:
        return {"start": self.row(0.0), "end": self.row(1.0), "left": self.column(0.0), "right": self.column(1.0)}

    def flagging(self) -> Flagging:
        """Flag data when the sides ``t1 = 0`` and ``t1 = 1`` are fixed points."""
        start, end = self.row(0.0), self.row(1.0)
        return Flagging(start.start, start.end, start, end)


@dataclass(frozen=True)
class Lattice2D:
    """Uniform ``N1 x N2`` lattice of a homotopy.

    ``vertices[a, b] = h(a / N1, b / N2)``.  Cell ``(a, b)`` has lowest vertex
    ``vertices[a, b]`` and edge vectors ``edge1[a, b]`` (along ``t1``) and
    ``edge2[a, b]`` (along ``t2``).
    """

    vertices: np.ndarray  # (N1+1, N2+1, m)
    row_midpoints: np.ndarray  # (N1, N2+1, m): h at (t1 midpoint, t2 node)
    column_midpoints: np.ndarray  # (N1+1, N2, m): h at (t1 node, t2 midpoint)
    centers: np.ndarray  # (N1, N2, m): h at cell parameter midpoints

    @property
    def shape(self) -> tuple[int, int]:
        return self.centers.shape[0], self.centers.shape[1]

    @property
    def edge1(self) -> np.ndarray:
        """Edge vectors along ``t1`` for every row, shape ``(N1, N2+1, m)``."""
        return np.diff(self.vertices, axis=0)

    @property
    def edge2(self) -> np.ndarray:
        """Edge vectors along ``t2`` for every column, shape ``(N1+1, N2, m)``."""
        return np.diff(self.vertices, axis=1)

    def cell_vertices(self, a: int, b: int) -> np.ndarray:
        """The four corners of cell ``(a, b)`` counter-clockwise in parameter space."""
        V = self.vertices
        return np.stack([V[a, b], V[a + 1, b], V[a + 1, b + 1], V[a, b + 1]])

    def cell_frame(self, a: int, b: int) -> tuple[np.ndarray, np.ndarray]:
        """Edge vectors out of the lowest vertex of cell ``(a, b)``."""
        V = self.vertices
        return V[a + 1, b] - V[a, b], V[a, b + 1] - V[a, b]


def lattice_2d(h: HomotopySpec, N1: int, N2: int) -> Lattice2D:
    _check_count(N1, "N1")
    _check_count(N2, "N2")
    s1 = np.arange(N1 + 1) / N1
    s2 = np.arange(N2 + 1) / N2
    m1 = (2 * np.arange(N1) + 1) / (2 * N1)
    m2 = (2 * np.arange(N2) + 1) / (2 * N2)
    return Lattice2D(
        vertices=h(s1[:, None], s2[None, :]),
        row_midpoints=h(m1[:, None], s2[None, :]),
        column_midpoints=h(s1[:, None], m2[None, :]),
        centers=h(m1[:, None], m2[None, :]),
    )


# ------------------------------------------------------------ cube boundary


@dataclass(frozen=True)
class FaceEntry:
    """One entry of a cube boundary sequence.

    A ``face`` entry is the loop ``base -> base+p -> base+p+q -> base+q -> base``;
    an ``edge`` entry is the segment ``start -> end``.
    """

    kind: str  # "face" or "edge"
    cell_id: str
    orientation: int
    start: np.ndarray
    end: np.ndarray
    p: np.ndarray | None = None
    q: np.ndarray | None = None

    def inverse(self) -> "FaceEntry":
        if self.kind == "face":
            return FaceEntry("face", self.cell_id, -self.orientation, self.start, self.end, self.q, self.p)
        return FaceEntry("edge", self.cell_id, -self.orientation, self.end, self.start)

    def homotopy(self) -> HomotopySpec:
        """Affine homotopy sweeping the face, based at ``h(1, 0) = base``."""
        if self.kind != "face":
            raise InvalidInputError("only face entries carry a homotopy")
        coords = []
        for b, p, q in zip(self.start, self.p, self.q):
            terms = [complex_literal(b + p) if p else complex_literal(b)]
            if p:
                terms.append(f"{complex_literal(-p)}*t1")
            if q:
                terms.append(f"{complex_literal(q)}*t2")
            coords.append(" + ".join(terms))
        return HomotopySpec.from_strings(coords)

    def path(self) -> PathSpec:
        if self.kind != "edge":
            raise InvalidInputError("only edge entries carry a path")
        return PathSpec.segment(self.start, self.end)


@dataclass(frozen=True)
class FaceSequence:
    entries: tuple[FaceEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def reversed(self) -> "FaceSequence":
        """Inverse loop: each entry inverted, order reversed."""
        return FaceSequence(tuple(e.inverse() for e in reversed(self.entries)))

    def is_composable(self) -> bool:
        return all(np.array_equal(a.end, b.start) for a, b in zip(self.entries, self.entries[1:]))


# (cell id, base corner, p, q) over the symbolic cube offsets u, v, w
_CUBE_FACES = (
    ("[0,0,0][u,v,0]", "0", "v", "u"),
    ("[u,0,0][u,v,w]", "u", "v", "w"),
    ("[0,0,0][u,0,w]", "0", "u", "w"),
    ("[0,0,w][u,v,w]", "w", "u", "v"),
    ("[0,0,0][0,v,w]", "0", "w", "v"),
    ("[0,v,0][u,v,w]", "v", "w", "u"),
)
_CUBE_EDGES = (("0", "u"), ("u", "0"), ("0", "w"), ("w", "0"), ("0", "v"), ("v", "0"))


def cube_boundary_sequence_d2(center, eps: float, axes: tuple[int, int, int]) -> FaceSequence:
    """Twelve-entry boundary loop of the cube ``center +- eps/2`` along ``axes``.

    Faces and connecting edges alternate starting with a face; every face
    loop is oriented by the outward normal and the whole word cancels in the
    free group on the cube's edges, so ``A``-edge factors cancel in pairs.
    """
    center = np.asarray(center, dtype=float)
    if center.ndim != 1:
        raise DimensionError("center must be a point")
    m = center.shape[0]
    if len(axes) != 3 or len(set(axes)) != 3 or any(not 0 <= a < m for a in axes):
        raise InvalidInputError(f"axes must be three distinct indices in [0, {m})")
    if not eps > 0:
        raise InvalidInputError("eps must be positive")
    corner = center.copy()
    offsets = {"0": np.zeros(m)}
    for name, axis in zip("uvw", axes):
        corner[axis] -= eps / 2
        vec = np.zeros(m)
        vec[axis] = eps
        offsets[name] = vec
    entries = []
    for (cell, base, p, q), (e0, e1) in zip(_CUBE_FACES, _CUBE_EDGES):
        start = corner + offsets[base]
        entries.append(FaceEntry("face", cell, 1, start, start, offsets[p], offsets[q]))
        entries.append(FaceEntry("edge", f"[{e0}][{e1}]", 1, corner + offsets[e0], corner + offsets[e1]))
    return FaceSequence(tuple(entries))


# ------------------------------------------------------------ kappa tables


@dataclass(frozen=True)
class KappaTable:
    """Cube cell to flag cell data.

    Cells are labelled by strings over ``{0, 1, *}`` (``*`` marks a free
    coordinate).  For ``d = 3`` ``assignment`` maps cube cells to the flag
    cells ``sigma0, sigma1, sigma0', sigma1', sigma0'', sigma1''``.  For ``d = 2``
    ``chains`` is the sweeping sequence of edge chains and ``swept`` the face
    crossed between consecutive chains.
    """

    d: int
    assignment: dict[str, str]
    chains: tuple[tuple[str, ...], ...] = ()
    swept: tuple[str, ...] = ()


_KAPPA3 = {
    "000": "sigma0",
    "111": "sigma1",
    "*00": "sigma0'",
    "10*": "sigma0'",
    "1*1": "sigma0'",
    "*11": "sigma1'",
    "01*": "sigma1'",
    "0*0": "sigma1'",
    "**0": "sigma0''",
    "1**": "sigma0''",
    "*1*": "sigma0''",
    "**1": "sigma1''",
    "0**": "sigma1''",
    "*0*": "sigma1''",
}

_KAPPA2_CHAINS = (
    ("*00", "10*", "1*1"),
    ("*00", "1*0", "11*"),
    ("0*0", "*10", "11*"),
    ("0*0", "01*", "*11"),
)


def cell_boundary(cell: str) -> set[str]:
    """Codimension-one faces of a cube cell (as a mod-2 chain)."""
    out: set[str] = set()
    for pos, ch in enumerate(cell):
        if ch == "*":
            for bit in "01":
                out ^= {cell[:pos] + bit + cell[pos + 1 :]}
    return out


def cube_cells(d: int, dim: int) -> list[str]:
    """All ``dim``-dimensional cells of the ``d``-cube."""
    cells = []
    for free in itertools.combinations(range(d), dim):
        for bits in itertools.product("01", repeat=d - dim):
            it = iter(bits)
            cells.append("".join("*" if k in free else next(it) for k in range(d)))
    return cells


def _swept_face(before: tuple[str, ...], after: tuple[str, ...]) -> str:
    diff = set(before) ^ set(after)
    for face in cube_cells(3, 2):
        if cell_boundary(face) == diff:
            return face
    raise AssertionError("consecutive chains do not differ by a single face")


def kappa_tables(d: int) -> KappaTable:
    if d == 3:
        return KappaTable(3, dict(_KAPPA3))
    if d == 2:
        swept = tuple(_swept_face(a, b) for a, b in zip(_KAPPA2_CHAINS, _KAPPA2_CHAINS[1:]))
        return KappaTable(2, {}, _KAPPA2_CHAINS, swept)
    raise InvalidInputError("kappa tables exist for d = 2 and d = 3 only")
