"""Forward-mode dual numbers with array payloads, nestable for higher partials.

A :class:`Dual` holds a primal part ``a`` and a tangent ``b``; both may be
numbers, ``numpy`` arrays (elementwise or matrix stacks) or themselves
``Dual`` values.  Nesting depth tags the infinitesimal: when two operands
of different depth meet, the shallower one is a constant with respect to
the outer infinitesimals of the deeper one, so perturbations never mix.
"""

from __future__ import annotations

import numpy as np


class DomainFault(ArithmeticError):
    """Raised by the elementary functions at a singular argument."""


def depth(x) -> int:
    d = 0
    while isinstance(x, Dual):
        d += 1
        x = x.a
    return d


def primal(x):
    while isinstance(x, Dual):
        x = x.a
    return x


class Dual:
    __slots__ = ("a", "b")
    # make numpy defer to the reflected operators instead of building object arrays
    __array_ufunc__ = None

    def __init__(self, a, b) -> None:
        self.a = a
        self.b = b

    def __repr__(self) -> str:
        return f"Dual({self.a!r}, {self.b!r})"

    @property
    def shape(self):
        return np.shape(primal(self))

    def __getitem__(self, idx):
        return Dual(self.a[idx], _index(self.b, idx, np.shape(self.a)))

    def __neg__(self):
        return Dual(-self.a, -self.b)

    def __add__(self, o):
        if isinstance(o, Dual):
            d, e = depth(self), depth(o)
            if d == e:
                return Dual(self.a + o.a, self.b + o.b)
            if e > d:
                return Dual(self + o.a, o.b)
        return Dual(self.a + o, self.b)

    def __radd__(self, o):
        return Dual(o + self.a, self.b)

    def __sub__(self, o):
        if isinstance(o, Dual):
            d, e = depth(self), depth(o)
            if d == e:
                return Dual(self.a - o.a, self.b - o.b)
            if e > d:
                return Dual(self - o.a, -o.b)
        return Dual(self.a - o, self.b)

    def __rsub__(self, o):
        return Dual(o - self.a, -self.b)

    def __mul__(self, o):
        if isinstance(o, Dual):
            d, e = depth(self), depth(o)
            if d == e:
                return Dual(self.a * o.a, self.a * o.b + self.b * o.a)
            if e > d:
                return Dual(self * o.a, self * o.b)
        return Dual(self.a * o, self.b * o)

    def __rmul__(self, o):
        return Dual(o * self.a, o * self.b)

    def __matmul__(self, o):
        if isinstance(o, Dual):
            d, e = depth(self), depth(o)
            if d == e:
                return Dual(self.a @ o.a, self.a @ o.b + self.b @ o.a)
            if e > d:
                return Dual(self @ o.a, self @ o.b)
        return Dual(self.a @ o, self.b @ o)

    def __rmatmul__(self, o):
        return Dual(o @ self.a, o @ self.b)

    def __truediv__(self, o):
        return self * reciprocal(o)

    def __rtruediv__(self, o):
        return o * reciprocal(self)


def _index(b, idx, a_shape):
    # tangents may be broadcast scalars; index only when b carries the full shape
    if np.shape(b) == a_shape or isinstance(b, Dual):
        return b[idx]
    return np.broadcast_to(b, a_shape)[idx]


def _check_nonzero(x) -> None:
    if np.any(np.asarray(x) == 0):
        raise DomainFault("singular argument")


def reciprocal(x):
    if isinstance(x, Dual):
        r = reciprocal(x.a)
        return Dual(r, -(x.b * r * r))
    _check_nonzero(x)
    return 1.0 / x


def exp(x):
    if isinstance(x, Dual):
        e = exp(x.a)
        return Dual(e, e * x.b)
    return np.exp(x)


def _on_cut_from_above(x) -> np.ndarray:
    # principal branches take the negative real axis from above, whatever the sign of a zero imaginary part
    z = np.asarray(x, dtype=complex)
    return np.where(z.imag == 0, z.real + 0j, z)


def log(x):
    if isinstance(x, Dual):
        return Dual(log(x.a), x.b * reciprocal(x.a))
    _check_nonzero(x)
    return np.log(_on_cut_from_above(x))


def sin(x):
    if isinstance(x, Dual):
        return Dual(sin(x.a), cos(x.a) * x.b)
    return np.sin(x)


def cos(x):
    if isinstance(x, Dual):
        return Dual(cos(x.a), -(sin(x.a) * x.b))
    return np.cos(x)


def sqrt(x):
    if isinstance(x, Dual):
        r = sqrt(x.a)
        return Dual(r, x.b * reciprocal(2.0 * r))
    return np.sqrt(_on_cut_from_above(x))


def real(x):
    if isinstance(x, Dual):
        return Dual(real(x.a), real(x.b))
    return np.real(x) + 0j


def imag(x):
    if isinstance(x, Dual):
        return Dual(imag(x.a), imag(x.b))
    return np.imag(x) + 0j


def conj(x):
    if isinstance(x, Dual):
        return Dual(conj(x.a), conj(x.b))
    return np.conj(x)


def ipow(x, k: int):
    """Integer power by repeated squaring (negative ``k`` via reciprocal)."""
    if k < 0:
        return reciprocal(ipow(x, -k))
    result = None
    base = x
    while k:
        if k & 1:
            result = base if result is None else result * base
        k >>= 1
        if k:
            base = base * base
    return 1.0 + 0j if result is None else result


def inv(x):
    """Matrix inverse over the last two axes, differentiated through duals."""
    if isinstance(x, Dual):
        ai = inv(x.a)
        return Dual(ai, -(ai @ x.b @ ai))
    return np.linalg.inv(x)


def stack(parts, axis: int = 0):
    """``np.stack`` for a mix of arrays, scalars and duals (broadcasting first)."""
    d = max(depth(p) for p in parts)
    if d == 0:
        arrays = np.broadcast_arrays(*[np.asarray(p, dtype=complex) for p in parts])
        return np.stack(arrays, axis=axis)
    a_parts = [p.a if depth(p) == d else p for p in parts]
    b_parts = [p.b if depth(p) == d else 0.0 for p in parts]
    return Dual(stack(a_parts, axis), stack(b_parts, axis))


def lift(x, d: int):
    """Embed ``x`` at nesting depth ``d`` with zero tangents in the added layers."""
    while depth(x) < d:
        x = Dual(x, 0.0)
    return x


def seeded(x, d: int, value=1.0):
    """Return ``x`` carrying a fresh infinitesimal at depth ``d + 1``."""
    return Dual(lift(x, d), value)


def split(result, d: int):
    """(primal, tangent) of ``result`` with respect to the layer at depth ``d + 1``.

    Results that never touched the seeded coordinate come back shallower and
    have zero tangent.
    """
    if depth(result) > d:
        return result.a, result.b
    return result, 0.0
