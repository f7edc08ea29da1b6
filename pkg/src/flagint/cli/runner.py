"""Execute validated configurations and collect report lines and CSV rows."""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Mapping

import numpy as np

from flagint.algebra import group_distance, group_inverse, identity, mat_log, random_unimodular
from flagint.cohomology import (
    alpha_class,
    conjugacy_invariants,
    discrepancy_S1,
    monodromy_representation,
    random_periodic_function,
    same_alpha_class,
)
from flagint.errors import ConfigError, InvalidInputError
from flagint.forms import (
    FormFlag,
    covariant_ext_derivative,
    curvature,
    flatness_residual,
    gauge_transform_connection,
    square_grid,
)
from flagint.holonomy import (
    ConvergenceReport,
    Word,
    boundary_loop_holonomy,
    cube_boundary_holonomy,
    homotopy_invariance_check,
    loop_curvature_estimate,
    path_holonomy,
    refine,
    surface_holonomy,
    word_holonomy,
)

from . import config as build

Config = Mapping[str, Any]


@dataclass(frozen=True)
class Row:
    level: str
    N: float
    residual: float
    estimated_order: float
    wall_ms: float


@dataclass
class CaseResult:
    lines: list[str] = field(default_factory=list)
    rows: list[Row] = field(default_factory=list)
    ok: bool = True

    def say(self, text: str) -> None:
        self.lines.append(text)

    def check(self, name: str, passed: bool, detail: str) -> None:
        self.ok = self.ok and bool(passed)
        self.lines.append(f"check {name}: {detail} {'PASS' if passed else 'FAIL'}")


@dataclass
class RunResult:
    kind: str
    cases: list[CaseResult]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.cases)

    @property
    def rows(self) -> list[Row]:
        if len(self.cases) == 1:
            return list(self.cases[0].rows)
        out = []
        for k, case in enumerate(self.cases):
            out.extend(Row(f"{k}/{r.level}", r.N, r.residual, r.estimated_order, r.wall_ms) for r in case.rows)
        return out

    def report_lines(self) -> list[str]:
        lines = [f"kind: {self.kind}"]
        for k, case in enumerate(self.cases):
            if len(self.cases) > 1:
                lines.append(f"case {k}: {'ok' if case.ok else 'FAIL'}")
                lines.extend("  " + s for s in case.lines)
            else:
                lines.extend(case.lines)
        return lines


# ------------------------------------------------------------------ formatting


def fnum(x: float) -> str:
    return format(float(x), ".6e")


def fcomplex(z: complex) -> str:
    z = complex(z)
    if z.imag == 0:
        return format(z.real, ".12g")
    sign = "+" if z.imag >= 0 or math.isnan(z.imag) else "-"
    return f"{z.real:.12g}{sign}{abs(z.imag):.12g}i"


def fmatrix(M) -> str:
    M = np.asarray(M, dtype=complex)
    return "[" + ", ".join("[" + ", ".join(fcomplex(x) for x in row) + "]" for row in M) + "]"


def fle(value: float, bound: float) -> str:
    return f"{fnum(value)} <= {fnum(bound)}"


def fge(value: float, bound: float) -> str:
    return f"{fnum(value)} >= {fnum(bound)}"


def _report_rows(rep: ConvergenceReport, label: Callable[[float], float] = lambda L: L) -> list[Row]:
    orders = rep.orders()
    wall = rep.wall_ms or (math.nan,) * len(rep.levels)
    return [
        Row(str(k), label(L), r, o, w)
        for k, (L, r, o, w) in enumerate(zip(rep.levels, rep.residuals, orders, wall))
    ]


def _decreasing(xs) -> bool:
    return all(b < a for a, b in zip(xs, xs[1:]))


def _eps_list(cfg: Config) -> list[float]:
    eps = cfg["eps"]
    return [float(eps)] if isinstance(eps, (int, float)) else [float(e) for e in eps]


# ------------------------------------------------------------------ kinds


def _integrate_path(cfg: Config) -> CaseResult:
    out = CaseResult()
    A = build.connection(cfg["connection"])
    p = build.path(cfg["path"])
    quad = cfg.get("quadrature", "midpoint")
    expect = cfg.get("expect", {})

    def hol(N):
        return path_holonomy(A, p, N, quad)

    if "levels" in cfg:
        rep = refine(hol, cfg["levels"])
        out.rows = _report_rows(rep)
        N, H = rep.levels[-1], rep.values[-1]
        out.say(f"levels: {list(rep.levels)}")
        out.say(f"estimated order: {fnum(rep.estimated_order)}")
        if "min_order" in cfg:
            out.check("order", rep.estimated_order >= cfg["min_order"], fge(rep.estimated_order, cfg["min_order"]))
    else:
        N = cfg["N"]
        H = hol(N)
    out.say(f"holonomy (N={N}): {fmatrix(H)}")

    if "value" in expect:
        target = build.matrix_value(expect["value"])
        d = group_distance(H, target)
        out.check("value", d <= expect.get("tol", 1e-8), fle(d, expect.get("tol", 1e-8)))
    if expect.get("identity"):
        exact = np.array_equal(H, identity(A.n))
        out.check("identity", exact, f"exact={exact}")

    if "gauge" in cfg:
        g = build.gauge(cfg["gauge"], A)
        Hg = path_holonomy(gauge_transform_connection(g, A), p, N, quad)
        predicted = g(p.end) @ H @ group_inverse(g(p.start))
        d = group_distance(Hg, predicted)
        tol = cfg.get("covariance_tol", 1e-6)
        out.check("gauge covariance", d <= tol, fle(d, tol))

    if "compare_path" in cfg:
        q = build.path(cfg["compare_path"])
        d = homotopy_invariance_check(A, p, q, N)
        out.say(f"distance to compare_path: {fnum(d)}")
        ed = cfg.get("expect_distance", {})
        if "max" in ed:
            out.check("distance", d <= ed["max"], fle(d, ed["max"]))
        if "abs_of" in ed:
            target = abs(build.complex_value(ed["abs_of"]))
            gap = abs(d - target)
            tol = ed.get("tol", 1e-4)
            out.check("distance", gap <= tol, f"|{fnum(d)} - {fnum(target)}| = {fle(gap, tol)}")

    if "split_at" in cfg:
        k = cfg["split_at"]
        if not 0 < k < N:
            raise ConfigError(f"split_at must lie strictly between 0 and N={N}")
        s = k / N
        H1 = path_holonomy(A, p.subpath(0.0, s), k, quad)
        H2 = path_holonomy(A, p.subpath(s, 1.0), N - k, quad)
        d = group_distance(H, H2 @ H1)
        tol = cfg.get("split_tol", 1e-13)
        out.check("multiplicativity", d <= tol, fle(d, tol))
    return out


def _integrate_surface(cfg: Config) -> CaseResult:
    out = CaseResult()
    fl = build.flag(cfg)
    h = build.homotopy(cfg["homotopy"])
    expect = cfg.get("expect", {})
    tol = expect.get("tol", 1e-4)

    def surf(N):
        return surface_holonomy(fl, h, N, N)

    reference = None
    if expect.get("stokes"):
        ref_N = expect.get("reference_N", 8192)
        reference = boundary_loop_holonomy(fl.lower, h, ref_N)
        out.say(f"boundary loop holonomy (N={ref_N}): {fmatrix(reference)}")

    if "levels" in cfg:
        rep = refine(surf, cfg["levels"], reference=reference)
        out.rows = _report_rows(rep)
        N, S = rep.levels[-1], rep.values[-1]
        out.say(f"levels: {list(rep.levels)}")
        out.say("residuals: " + ", ".join(fnum(r) for r in rep.residuals))
        out.say(f"estimated order: {fnum(rep.estimated_order)}")
        if reference is not None:
            out.check("residuals decrease", _decreasing(rep.residuals), "strictly decreasing" if _decreasing(rep.residuals) else "not monotone")
        if "min_order" in cfg:
            out.check("order", rep.estimated_order >= cfg["min_order"], fge(rep.estimated_order, cfg["min_order"]))
    else:
        N = cfg["N"]
        S = surf(N)
    out.say(f"surface holonomy (N={N}): {fmatrix(S)}")

    if reference is not None:
        d = group_distance(S, reference)
        out.check("stokes", d <= tol, fle(d, tol))
    if expect.get("identity"):
        exact = np.array_equal(S, identity(fl.n))
        out.check("identity", exact, f"exact={exact}")
    if "value" in expect:
        d = group_distance(S, build.matrix_value(expect["value"]))
        out.check("value", d <= tol, fle(d, tol))
    if "log_value" in expect:
        d = group_distance(mat_log(S), build.matrix_value(expect["log_value"]))
        out.check("log value", d <= tol, fle(d, tol))
    return out


def _curvature_estimate(cfg: Config) -> CaseResult:
    out = CaseResult()
    A = build.connection(cfg["connection"])
    x = np.asarray(cfg["point"], dtype=float)
    if len(cfg["axes"]) != 2:
        raise ConfigError("curvature-estimate needs two axes")
    i, j = cfg["axes"]
    if x.size != A.m or max(i, j) >= A.m:
        raise ConfigError(f"point and axes must fit the chart dimension m={A.m}")
    N = cfg.get("N", 1)
    expect = cfg.get("expect", {"curvature": True})
    eps = sorted(_eps_list(cfg), reverse=True)

    def estimate(e):
        return loop_curvature_estimate(A, x, i, j, e, N)

    if len(eps) >= 3:
        inv_eps = [1.0 / e for e in eps]
        by_level = dict(zip(inv_eps, eps))
        rep = refine(lambda L: estimate(by_level[L]), inv_eps)
        out.rows = _report_rows(rep)
        est = rep.extrapolant
        out.say(f"eps: {eps}")
        out.say(f"estimated order: {fnum(rep.estimated_order)}")
        out.say(f"finest estimate: {fmatrix(rep.values[-1])}")
        out.say(f"richardson estimate: {fmatrix(est)}")
    else:
        est = estimate(eps[-1])
        out.say(f"estimate (eps={eps[-1]}): {fmatrix(est)}")

    if "value" in expect:
        target = build.matrix_value(expect["value"])
    else:
        target = curvature(A)(x)[i, j]
    out.say(f"target: {fmatrix(target)}")
    tol = expect.get("tol", 1e-6)
    d = group_distance(est, target)
    out.check("curvature", d <= tol, fle(d, tol))
    return out


def _check_flat(cfg: Config) -> CaseResult:
    out = CaseResult()
    A = build.connection(cfg["connection"])
    grid = cfg.get("grid", {})
    lo, hi, count = grid.get("lo", -1.0), grid.get("hi", 1.0), grid.get("count", 21)
    residual = flatness_residual(A, square_grid(lo, hi, count, A.m))
    out.say(f"connection: {A.label or 'components'}")
    out.say(f"grid: {count}^{A.m} points on [{lo}, {hi}]^{A.m}")
    out.say(f"max residual: {fnum(residual)}")
    if cfg.get("expect_flat", True):
        tol = cfg.get("tol", 1e-10)
        out.check("flat", residual <= tol, fle(residual, tol))
    else:
        bound = cfg.get("min_residual", 0.1)
        out.check("not flat", residual > bound, f"{fnum(residual)} > {fnum(bound)}")
    return out


def _connections(cfg: Config):
    if "random_connections" in cfg:
        return build.random_connections(cfg["random_connections"])
    return [build.connection(cfg["connection"])]


def _check_bianchi(cfg: Config) -> CaseResult:
    out = CaseResult()
    conns = _connections(cfg)
    spec = cfg["points"]
    rng = np.random.default_rng(spec.get("seed", 0))
    count = spec.get("count", 10)
    lo, hi = spec.get("lo", -1.0), spec.get("hi", 1.0)
    worst = 0.0
    for k, A in enumerate(conns):
        pts = rng.uniform(lo, hi, size=(count, A.m))
        C = covariant_ext_derivative(curvature(A), A)(pts)
        norm = float(np.max(np.linalg.norm(C, axis=(-2, -1))))
        worst = max(worst, norm)
        out.say(f"connection {k}: max |D F| = {fnum(norm)}")
    tol = cfg.get("tol", 1e-10)
    out.check("bianchi", worst <= tol, fle(worst, tol))
    return out


def _cube_boundary(cfg: Config) -> CaseResult:
    out = CaseResult()
    if "random_connections" in cfg:
        flags = [FormFlag(2, curvature(A), A) for A in build.random_connections(cfg["random_connections"])]
    else:
        flags = [build.flag(cfg)]
    center = np.asarray(cfg["center"], dtype=float)
    axes = tuple(cfg["axes"])
    if len(axes) != 3:
        raise ConfigError("cube-boundary needs three axes")
    eps = sorted(_eps_list(cfg), reverse=True)
    Nsub = cfg["Nsub"]
    expect = cfg.get("expect", {})
    for k, fl in enumerate(flags):
        norms, wall = [], []
        all_identity = True
        for e in eps:
            t0 = time.perf_counter()
            H = cube_boundary_holonomy(fl, center, e, axes, Nsub)
            all_identity = all_identity and np.array_equal(H, identity(fl.n))
            norms.append(float(np.linalg.norm(mat_log(H))))
            wall.append(1000.0 * (time.perf_counter() - t0))
        prefix = f"flag {k}: " if len(flags) > 1 else ""
        out.say(prefix + "|log H| = " + ", ".join(fnum(v) for v in norms))
        for lvl, (e, v, w) in enumerate(zip(eps, norms, wall)):
            local = math.nan
            if lvl and v > 0 and norms[lvl - 1] > 0:
                local = math.log(norms[lvl - 1] / v) / math.log(eps[lvl - 1] / e)
            label = f"{k}/{lvl}" if len(flags) > 1 else str(lvl)
            out.rows.append(Row(label, 1.0 / e, v, local, w))
        if expect.get("identity"):
            out.check(f"{prefix}identity", all_identity, f"exact={all_identity}")
        if "min_slope" in cfg:
            if min(norms) == 0.0:
                slope = math.inf
            elif len(eps) < 2:
                raise ConfigError("a slope fit needs at least two eps values")
            else:
                slope = float(np.polyfit(np.log(eps), np.log(norms), 1)[0])
            out.check(f"{prefix}slope", slope >= cfg["min_slope"], fge(slope, cfg["min_slope"]))
    return out


def _monodromy(cfg: Config) -> CaseResult:
    out = CaseResult()
    A = build.connection(cfg["connection"])
    loops = {name: build.path(spec) for name, spec in cfg["loops"].items()}
    rep = monodromy_representation(A, cfg["base"], loops, cfg["N"], cfg.get("flat_tol", 1e-8))
    out.say(f"flatness residual: {fnum(rep.flatness_residual)}")
    for name, g in rep.images.items():
        inv = conjugacy_invariants(g)
        out.say(f"image {name}: {fmatrix(g)} trace={fcomplex(inv.trace)} det={fcomplex(inv.det)}")
    names = list(loops)
    for text in cfg.get("words", []):
        out.say(f"image [{text}]: {fmatrix(rep.image(Word.parse(text, names)))}")
    expect = cfg.get("expect", {})
    tol = expect.get("tol", 1e-6)
    for text, M in expect.get("images", {}).items():
        d = group_distance(rep.image(Word.parse(text, names)), build.matrix_value(M))
        out.check(f"image [{text}]", d <= tol, fle(d, tol))
    return out


def _direct_product(assign: Mapping[str, np.ndarray], word: Word) -> np.ndarray:
    """Word value by exact rational arithmetic when every entry is an integer."""
    mats = {k: np.asarray(v, dtype=complex) for k, v in assign.items()}
    exact = all(np.all(M.imag == 0) and np.all(M.real == np.round(M.real)) for M in mats.values())
    if not exact:
        result = None
        for name, power in word.letters:
            M = mats[name] if power == 1 else np.linalg.inv(mats[name])
            result = M if result is None else result @ M
        return result
    result = None
    for name, power in word.letters:
        M = [[Fraction(int(x.real)) for x in row] for row in mats[name]]
        if power == -1:
            if len(M) != 2:
                raise InvalidInputError("exact direct products support 2x2 inverses only")
            (a, b), (c, d) = M
            det = a * d - b * c
            M = [[d / det, -b / det], [-c / det, a / det]]
        if result is None:
            result = M
        else:
            result = [[sum(result[r][t] * M[t][c] for t in range(len(M))) for c in range(len(M))] for r in range(len(result))]
    return np.array([[complex(float(x)) for x in row] for row in result], dtype=complex)


def _word(cfg: Config) -> CaseResult:
    out = CaseResult()
    if "generators" in cfg:
        sets = [{name: build.matrix_value(M) for name, M in cfg["generators"].items()}]
    else:
        spec = cfg["random_unimodular"]
        sets = [
            {"a": random_unimodular(spec["seed"] + 2 * k), "b": random_unimodular(spec["seed"] + 2 * k + 1)}
            for k in range(spec["count"])
        ]
    tol = cfg.get("tol", 1e-12)
    for k, assign in enumerate(sets):
        prefix = f"set {k}: " if len(sets) > 1 else ""
        names = list(assign)
        if len(sets) > 1:
            out.say(prefix + ", ".join(f"{n}={fmatrix(assign[n])}" for n in names))
        words = [Word.parse(w, names) for w in cfg["words"]]
        values = {}
        for text, w in zip(cfg["words"], words):
            values[text] = word_holonomy(assign, w)
            out.say(f"{prefix}[{text}] = {fmatrix(values[text])} trace={fcomplex(np.trace(values[text]))}")
        for w1, w2 in cfg.get("conjugate_pairs", []):
            for w in (w1, w2):
                if w not in values:
                    values[w] = word_holonomy(assign, Word.parse(w, names))
            gap = abs(complex(np.trace(values[w1])) - complex(np.trace(values[w2])))
            out.check(f"{prefix}trace [{w1}] vs [{w2}]", gap <= tol, fle(gap, tol))
        if cfg.get("check_direct"):
            direct = _direct_product(assign, words[0])
            exact = np.array_equal(values[cfg["words"][0]], direct)
            out.check(f"{prefix}direct product [{cfg['words'][0]}]", exact, f"exact={exact}")
    return out


def _discrepancy(cfg: Config) -> CaseResult:
    out = CaseResult()
    N = cfg.get("N", 256)
    tol = cfg.get("tol", 1e-10)
    if "omega" in cfg:
        omega = build.expr_text(cfg["omega"])
        d = discrepancy_S1(omega, N)
        out.say(f"discrepancy of [{omega}]: {d!r}")
        if "value" in cfg:
            target = build.complex_value(cfg["value"])
            gap = abs(d - target)
            out.check("value", gap <= tol, fle(gap, tol))
        if "gauge_function" in cfg:
            f = build.expr_text(cfg["gauge_function"])
            shifted = discrepancy_S1(omega, N, gauge=f)
            gap = abs(shifted - d)
            out.say(f"shifted by d[{f}]: {shifted!r}")
            out.check("gauge invariance", gap <= tol, fle(gap, tol))
    if "random_pairs" in cfg:
        spec = cfg["random_pairs"]
        modes = spec.get("modes", 3)
        worst = 0.0
        for k in range(spec["count"]):
            omega = random_periodic_function(spec["seed"] + 2 * k, modes)
            f = random_periodic_function(spec["seed"] + 2 * k + 1, modes)
            gap = abs(discrepancy_S1(omega, N, gauge=f) - discrepancy_S1(omega, N))
            worst = max(worst, gap)
            out.say(f"pair {k}: |shift| = {fnum(gap)}")
        out.check("gauge invariance", worst <= tol, fle(worst, tol))
    return out


def _alpha_class(cfg: Config) -> CaseResult:
    out = CaseResult()
    tol = cfg.get("tol", 1e-12)
    if "alpha" in cfg:
        cls = alpha_class(build.complex_value(cfg["alpha"]))
        out.say(f"alpha: {fcomplex(cls.alpha)}")
        out.say(f"representative: {fcomplex(cls.representative)}")
        out.say(f"monodromy: {fcomplex(cls.monodromy)}")
        for key, got in (("expect_representative", cls.representative), ("expect_monodromy", cls.monodromy)):
            if key in cfg:
                gap = abs(got - build.complex_value(cfg[key]))
                out.check(key.removeprefix("expect_"), gap <= tol, fle(gap, tol))
    for pair in cfg.get("pairs", []):
        a, b = build.complex_value(pair["a"]), build.complex_value(pair["b"])
        same = same_alpha_class(a, b, tol)
        out.check(f"class {fcomplex(a)} ~ {fcomplex(b)}", same == pair["same"], f"same={same}")
    return out


def _converge(cfg: Config) -> CaseResult:
    inner = dict(cfg["of"])
    inner.pop("N", None)
    inner["levels"] = cfg["levels"]
    if "min_order" in cfg:
        inner["min_order"] = cfg["min_order"]
    return KINDS[inner["kind"]](inner)


KINDS: dict[str, Callable[[Config], CaseResult]] = {
    "integrate-path": _integrate_path,
    "integrate-surface": _integrate_surface,
    "curvature-estimate": _curvature_estimate,
    "check-flat": _check_flat,
    "check-bianchi": _check_bianchi,
    "cube-boundary": _cube_boundary,
    "monodromy": _monodromy,
    "word": _word,
    "discrepancy-s1": _discrepancy,
    "alpha-class": _alpha_class,
    "converge": _converge,
}


def thread_count() -> int:
    """``FLAGINT_THREADS`` if set to a positive integer, else the number of cores."""
    raw = os.environ.get("FLAGINT_THREADS", "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError as exc:
            raise ConfigError(f"FLAGINT_THREADS must be a positive integer, got {raw!r}") from exc
        if n < 1:
            raise ConfigError(f"FLAGINT_THREADS must be a positive integer, got {raw!r}")
        return n
    return os.cpu_count() or 1


def execute(cfg: Config, cases: list[dict], threads: int | None = None) -> RunResult:
    """Run every effective case; results keep case order whatever the thread count."""
    fn = KINDS[cfg["kind"]]
    threads = thread_count() if threads is None else threads
    if threads <= 1 or len(cases) == 1:
        results = [fn(c) for c in cases]
    else:
        with ThreadPoolExecutor(max_workers=min(threads, len(cases))) as pool:
            results = list(pool.map(fn, cases))
    return RunResult(cfg["kind"], results)
