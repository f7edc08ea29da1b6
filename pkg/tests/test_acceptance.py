"""Acceptance criteria: each runs its shipped configs through the CLI at the
stated tolerance and runtime budget, then re-derives the headline quantity
with an oracle that does not share the code path under test.

Run standalone with ``python3 tests/test_acceptance.py`` for the PASS/FAIL
listing alone.
"""

from __future__ import annotations

import io
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
import pytest
from scipy.integrate import quad, solve_ivp

sys.path.insert(0, str(Path(__file__).resolve().parent))

from conftest import ACCEPTANCE_LINES, CONFIGS  # noqa: E402

from flagint.algebra import group_distance, group_inverse, identity, mat_log, random_unimodular  # noqa: E402
from flagint.cli.main import run as cli_run  # noqa: E402
from flagint.cohomology import discrepancy_S1, random_periodic_function  # noqa: E402
from flagint.forms import (  # noqa: E402
    FormFlag,
    TwoForm,
    covariant_ext_derivative,
    curvature,
    flatness_residual,
    gauge_transform_connection,
    preset_alpha_connection,
    preset_constant,
    preset_cr_connection,
    random_gauge_function,
    random_polynomial_connection,
    square_grid,
)
from flagint.formlang import parse  # noqa: E402
from flagint.formlang.expr import evaluate  # noqa: E402
from flagint.holonomy import (  # noqa: E402
    cube_boundary_holonomy,
    loop_curvature_estimate,
    path_holonomy,
    surface_holonomy,
)
from flagint.lattice import PATH_ALIASES, HomotopySpec, PathSpec  # noqa: E402

ACCEPTANCE = CONFIGS / "acceptance"
ALPHA = 0.3 + 0.7j
X = np.array([[0, 1], [0, 0]], dtype=complex)
Y = np.array([[0, 0], [1, 0]], dtype=complex)


def _transport(A, coords: list[str], n: int) -> np.ndarray:
    # dU/dt = <A(gamma), gamma'> U, integrated to 1e-12
    exprs = [parse(c, 1, PATH_ALIASES) for c in coords]

    def gamma(t):
        return np.array([evaluate(e, (t,)).real for e in exprs])

    def rhs(t, u):
        h = 1e-6
        dx = (gamma(t + h) - gamma(t - h)) / (2 * h)
        M = np.einsum("i,ijk->jk", dx, A(gamma(t)))
        return (M @ u.reshape(n, n)).reshape(-1)

    sol = solve_ivp(rhs, (0.0, 1.0), identity(n).reshape(-1), rtol=1e-12, atol=1e-12, method="DOP853")
    return sol.y[:, -1].reshape(n, n)


# ------------------------------------------------------------------ oracles
# each returns a short description of what it confirmed, asserting on failure


def oracle_monodromy() -> str:
    circle = PathSpec.from_strings(["cos(2*pi*t)", "sin(2*pi*t)"])
    exact = np.exp(2j * np.pi * ALPHA)
    A = preset_alpha_connection(ALPHA)
    errs = [abs(path_holonomy(A, circle, N)[0, 0] - exact) for N in (2048, 4096)]
    order = math.log2(errs[0] / errs[1])
    assert errs[1] <= 1e-8 and order >= 1.9
    return f"closed form exp(2 pi i alpha): error {errs[1]:.1e}, order {order:.2f}"


def oracle_curvature() -> str:
    target = np.diag([1.0, -1.0])
    assert np.array_equal(X @ Y - Y @ X, target)
    A = preset_constant([X, Y])
    # two-level Richardson on the O(eps) estimate
    e1 = loop_curvature_estimate(A, [0.0, 0.0], 0, 1, 2e-3, 1)
    e2 = loop_curvature_estimate(A, [0.0, 0.0], 0, 1, 1e-3, 1)
    gap = group_distance(2 * e2 - e1, target)
    assert gap <= 1e-5
    return f"hand commutator diag(1,-1); two-level extrapolant within {gap:.1e}"


def oracle_cr() -> str:
    pts = square_grid(-1.0, 1.0, 21)
    for f in ("x1 + i*x2", "(x1 + i*x2)^2", "exp(x1 + i*x2)"):
        assert flatness_residual(preset_cr_connection(f), pts) <= 1e-10
    # conj z: df/dx1 + i df/dx2 = 2, a rotation-scaling block of norm 2 sqrt 2
    r = flatness_residual(preset_cr_connection("x1 - i*x2"), pts)
    assert abs(r - 2 * math.sqrt(2)) <= 1e-12
    return f"conj z residual equals 2 sqrt 2 ({r:.15f})"


def oracle_bianchi() -> str:
    # covariant derivative rebuilt from central differences of F plus brackets
    A = random_polynomial_connection(400, 3, 2)
    F = curvature(A)
    x = np.array([0.3, -0.2, 0.4])
    h = 1e-5

    def dF(k):
        e = np.zeros(3)
        e[k] = h
        return (F(x + e) - F(x - e)) / (2 * h)

    Fx, Ax, D = F(x), A(x), [dF(k) for k in range(3)]

    def br(P, Q):
        return P @ Q - Q @ P

    fd = D[2][0, 1] + D[1][2, 0] + D[0][1, 2] + br(Fx[0, 1], Ax[2]) + br(Fx[2, 0], Ax[1]) + br(Fx[1, 2], Ax[0])
    lib = covariant_ext_derivative(F, A)(x)
    assert np.linalg.norm(fd) <= 1e-7 and np.linalg.norm(lib) <= 1e-10
    return f"finite-difference D F = {np.linalg.norm(fd):.1e}"


def oracle_cube() -> str:
    eps = np.array([0.2, 0.1, 0.05, 0.025])
    slopes = []
    for k in range(3):
        A = random_polynomial_connection(500 + k, 3, 2)
        flag = FormFlag(2, curvature(A), A)
        norms = [np.linalg.norm(mat_log(cube_boundary_holonomy(flag, [0.1, -0.2, 0.15], e, (0, 1, 2), 8))) for e in eps]
        slopes.append(np.polyfit(np.log(eps), np.log(norms), 1)[0])
    assert min(slopes) >= 3.5
    return "least-squares slopes " + ", ".join(f"{s:.2f}" for s in slopes)


def oracle_stokes() -> str:
    A = random_polynomial_connection(600, 2, 2, degree=2, scale=0.7)
    h = HomotopySpec.from_strings(["t1", "(0.2 + 0.4*t2)*sin(pi*t1)"])
    arc0 = _transport(A, ["t", "0.2*sin(pi*t)"], 2)
    arc1 = _transport(A, ["t", "0.6*sin(pi*t)"], 2)
    S = surface_holonomy(FormFlag(2, curvature(A), A), h, 128, 128)
    # endpoints are fixed, so the side paths are constant and drop out
    gap = group_distance(S, arc1 @ group_inverse(arc0))
    assert gap <= 1e-4
    return f"ODE-integrated Hol(end) Hol(start)^-1 within {gap:.1e} at N=128"


def oracle_gauge() -> str:
    A = random_polynomial_connection(700, 2, 2, degree=2, scale=1.0)
    g = random_gauge_function(701, 2, 2, 1, 0.5)
    coords = ["cos(pi*t)", "0.5*sin(2*pi*t) + t"]
    lhs = _transport(gauge_transform_connection(g, A), coords, 2)
    rhs = g(np.array([-1.0, 1.0])) @ _transport(A, coords, 2) @ group_inverse(g(np.array([1.0, 0.0])))
    gap = group_distance(lhs, rhs)
    assert gap <= 1e-8
    return f"ODE transports satisfy covariance within {gap:.1e}"


def oracle_words() -> str:
    # Fricke: tr[a,b] = tr(a)^2 + tr(b)^2 + tr(ab)^2 - tr(a)tr(b)tr(ab) - 2
    for k in range(10):
        a = random_unimodular(800 + 2 * k).real.astype(int)
        b = random_unimodular(801 + 2 * k).real.astype(int)
        ta, tb, tab = int(np.trace(a)), int(np.trace(b)), int(np.trace(a @ b))
        fricke = ta * ta + tb * tb + tab * tab - ta * tb * tab - 2

        def inv(g):
            return np.array([[g[1, 1], -g[0, 1]], [-g[1, 0], g[0, 0]]], dtype=object)

        a_, b_ = a.astype(object), b.astype(object)
        w1 = a_ @ b_ @ inv(a_) @ inv(b_)
        w2 = b_ @ inv(a_) @ inv(b_) @ a_
        assert w1[0, 0] + w1[1, 1] == w2[0, 0] + w2[1, 1] == fricke
    return "integer traces match the Fricke polynomial"


def oracle_discrepancy() -> str:
    worst = 0.0
    for k in range(10):
        omega = random_periodic_function(900 + 2 * k, 3)
        f = random_periodic_function(901 + 2 * k, 3)
        e = parse(omega, 1, PATH_ALIASES)
        integral = complex(quad(lambda t: evaluate(e, (t,)).real, 0, 1, epsabs=1e-13, epsrel=1e-13, limit=200)[0])
        worst = max(worst, abs(discrepancy_S1(omega, 256, gauge=f) - integral))
    assert worst <= 1e-10
    assert abs(discrepancy_S1("1.75", 256) - 1.75) <= 1e-12
    return f"adaptive quadrature of omega over the circle within {worst:.1e}"


def oracle_homotopy() -> str:
    A = preset_alpha_connection(ALPHA)
    expected = abs(np.exp(2j * np.pi * ALPHA) - 1)
    circle = path_holonomy(A, PathSpec.from_strings(["cos(2*pi*t)", "sin(2*pi*t)"]), 4096)
    small = path_holonomy(A, PathSpec.from_strings(["1.5 - 0.5*cos(2*pi*t)", "0.5*sin(2*pi*t)"]), 4096)
    gap = abs(group_distance(circle, small) - expected)
    assert gap <= 1e-4
    assert group_distance(small, identity(1)) <= 1e-6
    return f"|exp(2 pi i alpha) - 1| = {expected:.6f} reproduced within {gap:.1e}"


def oracle_axioms() -> str:
    A = random_polynomial_connection(1100, 2, 3)
    whole = PathSpec.from_strings(["t^2 - 0.5", "sin(3*t)"])
    N, k = 512, 192
    s = k / N
    first = PathSpec.from_strings([f"({s}*t)^2 - 0.5", f"sin(3*{s}*t)"])
    second = PathSpec.from_strings([f"({s} + {1 - s}*t)^2 - 0.5", f"sin(3*({s} + {1 - s}*t))"])
    gap = group_distance(path_holonomy(A, second, N - k) @ path_holonomy(A, first, k), path_holonomy(A, whole, N))
    assert gap <= 1e-13
    zero = TwoForm.from_expressions(2, 2, {(0, 1): [["0", "0"], ["0", "0"]]})
    S = surface_holonomy(FormFlag(2, zero, preset_constant([X, Y])), HomotopySpec.from_strings(["t1", "t2"]), 16, 16)
    assert np.array_equal(S, identity(2))
    return f"reparametrized halves compose within {gap:.1e}; zero 2-form gives exactly I"


@dataclass(frozen=True)
class Criterion:
    number: int
    title: str
    configs: tuple[str, ...]
    budget_s: float
    oracle: Callable[[], str]


CRITERIA = (
    Criterion(1, "monodromy oracle", ("01_monodromy_oracle.json",), 2.0, oracle_monodromy),
    Criterion(2, "curvature from a small loop", ("02_curvature_from_loop.json",), 1.0, oracle_curvature),
    Criterion(3, "Cauchy-Riemann flatness", ("03_cr_flatness.json",), 1.0, oracle_cr),
    Criterion(4, "Bianchi identity", ("04_bianchi.json",), 5.0, oracle_bianchi),
    Criterion(5, "cube-boundary decay", ("05_cube_boundary_decay.json",), 30.0, oracle_cube),
    Criterion(6, "nonabelian Stokes", ("06_nonabelian_stokes.json",), 30.0, oracle_stokes),
    Criterion(7, "gauge covariance", ("07_gauge_covariance.json",), 2.0, oracle_gauge),
    Criterion(8, "base-point words", ("08_word_commutators.json",), 1.0, oracle_words),
    Criterion(9, "circle discrepancy", ("09_s1_discrepancy.json",), 1.0, oracle_discrepancy),
    Criterion(10, "homotopy invariance", ("10_homotopy_invariance.json",), 3.0, oracle_homotopy),
    Criterion(
        11,
        "multiplicativity and zero forms",
        ("11a_multiplicativity.json", "11b_zero_form_path.json", "11c_zero_form_surface.json", "11d_zero_form_cube.json"),
        1.0,
        oracle_axioms,
    ),
)


def evaluate_criterion(c: Criterion) -> tuple[bool, str]:
    """Run the configs (timed, budget is for the CLI runs combined) and the oracle."""
    failures = []
    elapsed = 0.0
    for name in c.configs:
        out = io.StringIO()
        t0 = time.perf_counter()
        code = cli_run(str(ACCEPTANCE / name), out=out)
        elapsed += time.perf_counter() - t0
        if code != 0:
            failures.append(f"{name} -> {out.getvalue().splitlines()[0]}")
    if elapsed > c.budget_s:
        failures.append(f"runtime {elapsed:.2f} s over budget {c.budget_s:g} s")
    try:
        detail = c.oracle()
    except AssertionError as exc:
        failures.append(f"oracle failed {exc}".strip())
        detail = ""
    ok = not failures
    summary = "; ".join(failures) if failures else f"{elapsed:.2f} s of {c.budget_s:g} s; {detail}"
    return ok, f"{'PASS' if ok else 'FAIL'} criterion {c.number}: {c.title} ({summary})"


@pytest.mark.acceptance
@pytest.mark.parametrize("criterion", CRITERIA, ids=lambda c: f"{c.number:02d}-{c.title.replace(' ', '-')}")
def test_acceptance_criterion(criterion):
    ok, line = evaluate_criterion(criterion)
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


if __name__ == "__main__":
    results = [evaluate_criterion(c) for c in CRITERIA]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
