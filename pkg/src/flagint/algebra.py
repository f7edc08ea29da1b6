"""Matrix Lie algebra numerics: exponential, near-identity logarithm, brackets.

Algebra and group elements are plain complex ``numpy`` arrays of shape
``(n, n)``.  Real algebras (for instance the 2x2 real representation of
``C``) are stored with zero imaginary parts.  :func:`mat_exp` additionally
accepts stacks of shape ``(..., n, n)`` so that the holonomy code can
exponentiate every lattice factor in one call.
"""

from __future__ import annotations

import math

import numpy as np

from flagint.errors import (
    DimensionError,
    InvalidInputError,
    OutOfDomainError,
    SingularMatrixError,
)

AlgebraElement = np.ndarray
GroupElement = np.ndarray

# Scaling threshold for the truncated Taylor series; after scaling ||X|| <= 1/2.
_EXP_THETA = 0.5
_UNIT_ROUNDOFF = 2.0**-53
_LOG_DOMAIN = 0.5


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Return ``x`` as a finite complex square matrix, or raise."""
    a = np.asarray(x, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise InvalidInputError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return a


def identity(n: int) -> GroupElement:
    return np.eye(n, dtype=complex)


def _taylor_degree(theta: float) -> int:
    # smallest q with theta^(q+1)/(q+1)! * 1/(1 - theta/(q+2)) below unit roundoff
    if theta == 0.0:
        return 1
    q = 1
    term = theta * theta / 2.0
    while term / (1.0 - theta / (q + 2)) > _UNIT_ROUNDOFF * 0.25:
        q += 1
        term *= theta / (q + 1)
    return q


def mat_exp(X) -> GroupElement:
    """Matrix exponential by scaling and squaring with a truncated Taylor series.

    ``X`` may be a single ``(n, n)`` matrix or a stack ``(..., n, n)``; one
    scaling exponent (from the largest Frobenius norm in the stack) is used for
    the whole stack, which keeps the work vectorized.  The Taylor degree is
    chosen from the scaled norm so that the truncation error is below unit
    roundoff.
    """
    X = np.asarray(X, dtype=complex)
    if X.ndim < 2 or X.shape[-1] != X.shape[-2]:
        raise InvalidInputError(f"mat_exp needs square matrices, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InvalidInputError("mat_exp input has non-finite entries")
    n = X.shape[-1]
    eye = np.eye(n, dtype=complex)
    if X.size == 0:
        return np.broadcast_to(eye, X.shape).copy()
    norm = float(np.max(np.linalg.norm(X, axis=(-2, -1))))
    s = 0
    if norm > _EXP_THETA:
        s = int(math.ceil(math.log2(norm / _EXP_THETA)))
    Y = X / (2.0**s) if s else X
    q = _taylor_degree(norm / (2.0**s))
    E = eye + Y / q
    for k in range(q - 1, 0, -1):
        E = eye + (Y @ E) / k
    for _ in range(s):
        E = E @ E
    return E


def _sqrtm_near_identity(G: np.ndarray) -> np.ndarray:
    # Denman-Beavers iteration; quadratically convergent for spectra near 1.
    Y = G.copy()
    Z = identity(G.shape[0])
    for _ in range(60):
        Y_next = 0.5 * (Y + np.linalg.inv(Z))
        Z = 0.5 * (Z + np.linalg.inv(Y))
        done = np.linalg.norm(Y_next - Y) <= 4 * _UNIT_ROUNDOFF * np.linalg.norm(Y_next)
        Y = Y_next
        if done:
            break
    return Y


def mat_log(G) -> AlgebraElement:
    """Principal logarithm of a group element close to the identity.

    Only ``||G - I||_F < 0.5`` is supported.  One square root is taken first
    (``G <- G^(1/2)``, result doubled), then the series
    ``log S = 2 * sum_k Z^(2k+1) / (2k+1)`` with ``Z = (S - I)(S + I)^-1``
    is summed to unit roundoff.
    """
    G = as_matrix(G, "group element")
    n = G.shape[0]
    eye = identity(n)
    dist = float(np.linalg.norm(G - eye))
    if dist >= _LOG_DOMAIN:
        raise OutOfDomainError(
            f"mat_log needs ||G - I|| < {_LOG_DOMAIN}, got {dist:.3g}; refine the mesh or shrink the loop"
        )
    if dist == 0.0:
        return np.zeros((n, n), dtype=complex)
    S = _sqrtm_near_identity(G)
    Z = (S - eye) @ np.linalg.inv(S + eye)
    Z2 = Z @ Z
    power = Z
    total = Z.copy()
    k = 1
    znorm = np.linalg.norm(Z)
    while True:
        power = power @ Z2
        term = power / (2 * k + 1)
        total = total + term
        k += 1
        if np.linalg.norm(term) <= _UNIT_ROUNDOFF * 0.1 * znorm or k > 200:
            break
    return 4.0 * total


def _same_shape(X: np.ndarray, Y: np.ndarray) -> None:
    if X.shape != Y.shape:
        raise DimensionError(f"dimension mismatch: {X.shape} vs {Y.shape}")


def commutator(X, Y) -> AlgebraElement:
    """Lie bracket ``XY - YX``."""
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    _same_shape(X, Y)
    return X @ Y - Y @ X


def is_invertible(g: np.ndarray) -> bool:
    n = g.shape[0]
    scale = float(np.linalg.norm(g)) ** n
    return scale > 0.0 and abs(np.linalg.det(g)) > 1e-12 * scale


def group_inverse(g) -> GroupElement:
    g = as_matrix(g, "group element")
    if not is_invertible(g):
        raise SingularMatrixError("group element is singular")
    if g.shape[0] == 2:
        # closed-form adjugate: exact for unimodular matrices with exact entries
        (a, b), (c, d) = g
        det = a * d - b * c
        adj = np.array([[d, -b], [-c, a]], dtype=complex)
        return adj if det == 1 else adj / det
    return np.linalg.inv(g)


def conjugate(g, X) -> AlgebraElement:
    """Adjoint action ``g X g^-1``."""
    g = as_matrix(g, "g")
    X = as_matrix(X, "X")
    _same_shape(g, X)
    return g @ X @ group_inverse(g)


def group_distance(g, h) -> float:
    """Frobenius distance ``||g - h||``."""
    g = as_matrix(g, "g")
    h = as_matrix(h, "h")
    _same_shape(g, h)
    return float(np.linalg.norm(g - h))


def random_algebra_element(seed: int, n: int, scale: float) -> AlgebraElement:
    """Deterministic random complex matrix with entry magnitudes at most ``scale``."""
    if n < 1:
        raise InvalidInputError("n must be positive")
    if scale < 0:
        raise InvalidInputError("scale must be non-negative")
    rng = np.random.default_rng(seed)
    radius = rng.uniform(0.0, 1.0, size=(n, n))
    phase = rng.uniform(0.0, 2 * np.pi, size=(n, n))
    return scale * radius * np.exp(1j * phase)


def random_unimodular(seed: int, n: int = 2, steps: int = 6, max_shear: int = 3) -> GroupElement:
    """Random integer matrix of determinant 1 (product of elementary shears).

    Integer entries keep products and adjugate inverses exact in floating
    point, which makes word identities testable bit for bit.
    """
    if n < 2:
        raise InvalidInputError("n must be at least 2")
    rng = np.random.default_rng(seed)
    g = np.eye(n)
    for _ in range(steps):
        r, c = rng.choice(n, size=2, replace=False)
        k = 0
        while k == 0:
            k = int(rng.integers(-max_shear, max_shear + 1))
        shear = np.eye(n)
        shear[r, c] = k
        g = shear @ g
    return g.astype(complex)
