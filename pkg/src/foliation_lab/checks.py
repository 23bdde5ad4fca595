"""Named, reportable checks of the foliation identities over a scenario.

Each check samples a scenario at Halton points, evaluates a residual per
point and returns a :class:`CheckReport`.  Checks whose identity is only
claimed under hypotheses (minimal leaves, integrable normal bundle) are
*gated*: when the computed hypothesis flags fail, the report is labeled
informational instead of asserting anything.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from .errors import MisuseError
from .foliation import FrameContext, frobenius_residual_jets
from .geometry import Chart, Local, VectorFieldSpec, geodesic_trajectory
from .leaf import LeafPatch, _pairwise_sum, _quadrature
from .operators import (
    alpha_frame_j,
    alpha_pairing_j,
    alpha_transpose_j,
    div_full_j,
    div_leaf_j,
    jacobi_j,
    lemma2_sides_j,
    lemma3_sides_j,
)

HYPOTHESIS_TOL = 1e-8
WORST_POINTS = 5
VIOLATED = "hypotheses violated, residual expected"

DEFAULT_TOL = {
    "lemma2": 1e-6,
    "lemma3": 1e-6,
    "killing": 1e-6,
    "preserving": 1e-6,
    "jacobi": 1e-6,
    "prop3": 1e-6,
    "prop4": 1e-8,
    "integral": 1e-6,
    "minimal": 1e-8,
    "integrable": 1e-8,
    "integrable_perp": 1e-8,
}


@dataclass(frozen=True)
class SamplingPlan:
    samples: int = 200
    seed: int = 42
    pairs: int = 10
    box: tuple[tuple[float, float], ...] | None = None

    def bounds(self, chart: Chart) -> list[tuple[float, float]]:
        if self.box is not None:
            if len(self.box) != chart.dim:
                raise MisuseError(f"sampling box has {len(self.box)} intervals, chart has {chart.dim} coordinates")
            return [tuple(map(float, b)) for b in self.box]
        out = list(zip(chart.lower, chart.upper))
        for name, (lo, hi) in zip(chart.coords, out):
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise MisuseError(f"coordinate {name} is unbounded; give the sampling plan a box")
        return out

    def points(self, chart: Chart) -> np.ndarray:
        return _halton(chart.dim, self.samples, self.seed, tuple(self.bounds(chart)))


@lru_cache(maxsize=64)
def _halton(dim: int, n: int, seed: int, bounds) -> np.ndarray:
    u = qmc.Halton(d=dim, scramble=True, seed=seed).random(n)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    return lo + u * (hi - lo)


@dataclass(frozen=True)
class Hypotheses:
    minimal: bool
    integrable_perp: bool
    leaves_compact: bool

    @property
    def lemma(self) -> bool:
        """Hypotheses of the pointwise identities: minimal leaves, integrable D^⊥."""
        return self.minimal and self.integrable_perp


@dataclass(frozen=True)
class CheckReport:
    check: str
    scenario: str
    hypotheses: Hypotheses
    samples: int
    seed: int
    max_residual: float
    tolerance: float
    worst_points: tuple[tuple[tuple[float, ...], float], ...]
    wall_ms: float | None = None
    gated: bool = False
    note: str = ""
    detail: dict = field(default_factory=dict, compare=False)
    points: np.ndarray | None = field(default=None, compare=False, repr=False)
    residuals: np.ndarray | None = field(default=None, compare=False, repr=False)

    @property
    def passed(self) -> bool:
        return bool(self.max_residual <= self.tolerance)

    @property
    def informational(self) -> bool:
        """Gated check run outside its hypotheses: no pass/fail assertion."""
        return self.gated and not self.hypotheses.lemma

    @property
    def status(self) -> str:
        if self.informational:
            return VIOLATED
        return "pass" if self.passed else "fail"

    def to_dict(self, timestamp: bool = True) -> dict:
        return {
            "check": self.check,
            "scenario": self.scenario,
            "hypotheses": {
                "minimal": self.hypotheses.minimal,
                "integrable_perp": self.hypotheses.integrable_perp,
                "leaves_compact": self.hypotheses.leaves_compact,
            },
            "samples": self.samples,
            "seed": self.seed,
            "max_residual": self.max_residual,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "worst_points": [{"coords": list(c), "residual": r} for c, r in self.worst_points],
            "wall_ms": self.wall_ms if timestamp else None,
            "note": self.note or (VIOLATED if self.informational else None),
        }

    def to_text(self) -> str:
        line = (
            f"{self.check:<24} {self.scenario:<6} {self.status.upper() if self.status in ('pass', 'fail') else self.status}"
            f"  max_residual={self.max_residual:.3e}  tol={self.tolerance:.1e}  samples={self.samples}"
        )
        if self.note:
            line += f"  ({self.note})"
        return line


# -- random test fields ------------------------------------------------------


def random_field(chart: Chart, rng: np.random.Generator, bounds=None, degree: int = 2, name: str = "") -> VectorFieldSpec:
    """Trigonometric polynomial field: each component is a product over coordinates
    of degree-``degree`` trig polynomials with coefficients in [−1, 1]."""
    bounds = bounds if bounds is not None else list(zip(chart.lower, chart.upper))
    comps = []
    for _ in range(chart.dim):
        factors = []
        for c, (lo, hi) in zip(chart.coords, bounds):
            w = 2 * math.pi / (hi - lo)
            a = rng.uniform(-1.0, 1.0, 2 * degree + 1)
            terms = [repr(float(a[0]))]
            for j in range(1, degree + 1):
                terms.append(f"{float(a[2 * j - 1])!r}*cos({j * w!r}*{c})")
                terms.append(f"{float(a[2 * j])!r}*sin({j * w!r}*{c})")
            factors.append("(" + " + ".join(terms) + ")")
        comps.append(" * ".join(factors))
    return VectorFieldSpec.of(*comps, name=name)


def random_pairs(chart: Chart, plan: SamplingPlan) -> list[tuple[VectorFieldSpec, VectorFieldSpec]]:
    rng = np.random.default_rng(plan.seed)
    bounds = plan.bounds(chart)
    return [
        (random_field(chart, rng, bounds, name=f"V{k}"), random_field(chart, rng, bounds, name=f"W{k}"))
        for k in range(plan.pairs)
    ]


# -- hypotheses ----------------------------------------------------------------


def mean_curvature_norms(ctx: FrameContext) -> np.ndarray:
    return ctx.loc.norm(ctx.mean_curvature().truncate(0)).v


def normal_frobenius(ctx: FrameContext) -> np.ndarray:
    if ctx.l < 2:
        return np.zeros(ctx.loc.n)
    return frobenius_residual_jets(ctx.loc, [e.truncate(1) for e in ctx.normal])


@lru_cache(maxsize=64)
def hypotheses(scn, plan: SamplingPlan) -> Hypotheses:
    ctx = FrameContext(scn.chart, scn.foliation, plan.points(scn.chart), order=2)
    return Hypotheses(
        bool(np.max(mean_curvature_norms(ctx)) < HYPOTHESIS_TOL),
        bool(np.max(normal_frobenius(ctx)) < HYPOTHESIS_TOL),
        bool(scn.leaves_compact),
    )


# -- runner --------------------------------------------------------------------


def _report(name, scn, plan, tol, points, residual, t0, gated=False, note="", detail=None) -> CheckReport:
    residual = np.asarray(residual, dtype=float)
    if residual.size and not np.all(np.isfinite(residual)):
        note = (note + "; " if note else "") + "non-finite residuals"
        residual = np.where(np.isfinite(residual), residual, np.inf)
    order = np.argsort(-residual, kind="stable")[:WORST_POINTS]
    worst = tuple((tuple(float(c) for c in points[i]), float(residual[i])) for i in order)
    return CheckReport(
        check=name,
        scenario=scn.name,
        hypotheses=hypotheses(scn, plan),
        samples=int(points.shape[0]),
        seed=plan.seed,
        max_residual=float(np.max(residual)) if residual.size else 0.0,
        tolerance=DEFAULT_TOL[name.split(":")[0]] if tol is None else float(tol),
        worst_points=worst,
        wall_ms=round((time.perf_counter() - t0) * 1000.0, 3),
        gated=gated,
        note=note,
        detail=detail or {},
        points=points,
        residuals=residual,
    )


def _field(scn, f) -> VectorFieldSpec:
    if isinstance(f, VectorFieldSpec):
        return f
    return scn.field(f).spec


def _label(scn, f) -> str:
    return f if isinstance(f, str) else (f.name or str(f))


def _pairs(scn, plan, V, W):
    if V is None and W is None:
        return random_pairs(scn.chart, plan)
    V = _field(scn, V)
    return [(V, V if W is None else _field(scn, W))]


def _lemma(name, sides, scn, V, W, plan, tol):
    t0 = time.perf_counter()
    P = plan.points(scn.chart)
    ctx = FrameContext(scn.chart, scn.foliation, P, order=2)
    res = np.zeros(P.shape[0])
    for Vs, Ws in _pairs(scn, plan, V, W):
        lhs, rhs = sides(ctx, ctx.field(Vs), ctx.field(Ws))
        res = np.maximum(res, np.abs(lhs.v - rhs.v))
    return _report(name, scn, plan, tol, ctx.points, res, t0, gated=True)


def check_lemma2(scn, V=None, W=None, plan: SamplingPlan = SamplingPlan(), tol=None) -> CheckReport:
    """|f_{V,W} − ⟨α_V, α_W⟩ + div_L((∇_V W)^⊤)| at sampled points; random pairs if V is None."""
    return _lemma("lemma2", lemma2_sides_j, scn, V, W, plan, tol)


def check_lemma3(scn, V=None, W=None, plan: SamplingPlan = SamplingPlan(), tol=None) -> CheckReport:
    """|⟨J(V), W⟩ − ⟨α_V, α_W⟩ − div_L(α_V^t(W))| at sampled points."""
    return _lemma("lemma3", lemma3_sides_j, scn, V, W, plan, tol)


def killing_residuals(chart: Chart, X: VectorFieldSpec, points) -> np.ndarray:
    """Spectral norm of (L_X g) in an orthonormal frame, i.e. the max over unit
    tangent pairs of |⟨∇_Y X, Z⟩ + ⟨∇_Z X, Y⟩| with Y = Z."""
    loc = Local(chart, points, order=1)
    Xj = loc.field(X)
    g = loc.g.v
    nab = Xj.d + np.einsum("Zkab,Zb->Zka", loc.christoffel.v, Xj.v)
    low = np.einsum("Zlk,Zka->Zla", g, nab)  # low[b, a] = ⟨∇_a X, ∂_b⟩
    sym = low + np.swapaxes(low, 1, 2)
    F = np.linalg.inv(np.swapaxes(np.linalg.cholesky(g), 1, 2))  # columns orthonormal
    S = np.einsum("Zai,Zab,Zbj->Zij", F, sym, F)
    return np.max(np.abs(np.linalg.eigvalsh(S)), axis=1)


def check_killing(scn, X, plan: SamplingPlan = SamplingPlan(), tol=None) -> CheckReport:
    t0 = time.perf_counter()
    P = scn.chart.wrap(plan.points(scn.chart))
    res = killing_residuals(scn.chart, _field(scn, X), P)
    return _report(f"killing:{_label(scn, X)}", scn, plan, tol, P, res, t0)


def preserving_residuals(ctx: FrameContext, X: VectorFieldSpec) -> np.ndarray:
    """max_j |[X, F_j]^⊥| over the raw spanning fields."""
    loc = ctx.loc
    Xj = loc.field(X)
    res = np.zeros(loc.n)
    for F in ctx.spanning:
        br = loc.bracket(Xj, F).truncate(0)
        res = np.maximum(res, loc.norm(ctx.perp(br)).v)
    return res


def check_foliation_preserving(scn, X, plan: SamplingPlan = SamplingPlan(), tol=None) -> CheckReport:
    t0 = time.perf_counter()
    ctx = FrameContext(scn.chart, scn.foliation, plan.points(scn.chart), order=1)
    res = preserving_residuals(ctx, _field(scn, X))
    return _report(f"preserving:{_label(scn, X)}", scn, plan, tol, ctx.points, res, t0)


def check_jacobi_field(scn, V, plan: SamplingPlan = SamplingPlan(), tol=None) -> CheckReport:
    """max |J(V^⊥)| at sampled points."""
    t0 = time.perf_counter()
    ctx = FrameContext(scn.chart, scn.foliation, plan.points(scn.chart), order=2)
    Jv = jacobi_j(ctx, ctx.field(_field(scn, V)))
    res = ctx.loc.norm(Jv.truncate(0)).v
    return _report(f"jacobi:{_label(scn, V)}", scn, plan, tol, ctx.points, res, t0)


def check_minimal(scn, plan: SamplingPlan = SamplingPlan(), tol=None) -> CheckReport:
    t0 = time.perf_counter()
    ctx = FrameContext(scn.chart, scn.foliation, plan.points(scn.chart), order=1)
    return _report("minimal", scn, plan, tol, ctx.points, mean_curvature_norms(ctx), t0)


def check_integrable(scn, plan: SamplingPlan = SamplingPlan(), tol=None, perp: bool = True) -> CheckReport:
    """Frobenius residual of D^⊥ (``perp=True``) or of D."""
    t0 = time.perf_counter()
    ctx = FrameContext(scn.chart, scn.foliation, plan.points(scn.chart), order=1)
    if perp:
        res = normal_frobenius(ctx)
    else:
        res = frobenius_residual_jets(ctx.loc, [s.truncate(1) for s in ctx.spanning])
    return _report("integrable_perp" if perp else "integrable", scn, plan, tol, ctx.points, res, t0)


def check_prop3_divergence(scn, V=None, plan: SamplingPlan = SamplingPlan(), tol=None) -> CheckReport:
    """Divergence split across the two complementary distributions.

    For Y tangent to D: div_L(Y) = div_M(Y) + ⟨Y, H^⊥⟩, H^⊥ the mean curvature
    of D^⊥.  With roles swapped, for Y normal: div_⊥(Y) = div_M(Y) + ⟨Y, H⟩.
    Tested on Y = α_V^t(V) and on random fields.  div_M is computed from the
    coordinate formula, independently of the frame.
    """
    t0 = time.perf_counter()
    P = plan.points(scn.chart)
    ctx = FrameContext(scn.chart, scn.foliation, P, order=2)
    loc = ctx.loc
    note = ""
    if getattr(scn, "foliation2", None) is not None:
        other = FrameContext(scn.chart, scn.foliation2, P, order=0)
        off = max(float(np.max(np.abs(loc.inner(a, b).v))) for a in ctx.tangent for b in other.tangent)
        if off > 1e-8:
            note = f"second foliation is not orthogonal to D (max |⟨e_i, f_j⟩| = {off:.3g})"
    H_perp = ctx.mean_curvature_perp()
    H = ctx.mean_curvature()
    tangent_cases, normal_cases = [], []
    for Vs, Ws in _pairs(scn, plan, V, None):
        Vj, Wj = ctx.field(Vs), ctx.field(Ws)
        tangent_cases.append(alpha_transpose_j(ctx, Vj, Vj))
        tangent_cases.append(ctx.tang(Wj))
        normal_cases.append(ctx.perp(Wj))
    res = np.zeros(P.shape[0])
    corr_t = corr_n = 0.0
    for Y in tangent_cases:
        c = loc.inner(Y.truncate(0), H_perp.truncate(0)).v
        res = np.maximum(res, np.abs(div_leaf_j(ctx, Y).v - div_full_j(loc, Y).v - c))
        corr_t = max(corr_t, float(np.max(np.abs(c))))
    for Y in normal_cases:
        c = loc.inner(Y.truncate(0), H.truncate(0)).v
        div_perp = None
        for ea in ctx.normal:
            t = loc.inner(loc.covd(ea, Y), ea)
            div_perp = t if div_perp is None else div_perp + t
        res = np.maximum(res, np.abs(div_perp.v - div_full_j(loc, Y).v - c))
        corr_n = max(corr_n, float(np.max(np.abs(c))))
    detail = {"max_correction_tangent": corr_t, "max_correction_normal": corr_n}
    return _report("prop3", scn, plan, tol, ctx.points, res, t0, note=note, detail=detail)


def check_prop4_transport(
    scn,
    X,
    p=None,
    plan: SamplingPlan = SamplingPlan(),
    tol=None,
    length: float = 10.0,
    step: float = 1e-2,
    directions: int = 4,
    require_zero: bool = True,
) -> CheckReport:
    """Transport of X^⊥ along leaf geodesics from a point where X^⊥ vanishes.

    Residual per trajectory sample is max(|⟨α_{X^⊥}(ċ), e_α⟩|, |X^⊥(c(t))|).
    ``require_zero=False`` allows a start point with X^⊥(p) ≠ 0; the report
    then fails, and ``detail`` shows how |X^⊥| evolves.
    """
    t0 = time.perf_counter()
    chart = scn.chart
    spec = _field(scn, X)
    if p is None:
        if isinstance(X, str) and scn.field(X).anchor is not None:
            p = scn.field(X).anchor
        else:
            raise MisuseError("prop4 needs a start point (field anchor or explicit p)")
    p = np.asarray(p, dtype=float)
    pres = check_foliation_preserving(scn, spec, plan)
    start = FrameContext(chart, scn.foliation, p[None], order=0)
    Xp = start.loc.norm(start.perp(start.field(spec).truncate(0))).v[0]
    if Xp >= 1e-10 and require_zero:
        raise MisuseError(f"X^⊥ does not vanish at the start point (|X^⊥| = {Xp:.3g})")
    rng = np.random.default_rng(plan.seed)
    tangent = np.stack([e.v[0] for e in start.tangent])
    dirs = [tangent[i] for i in range(tangent.shape[0])]
    while len(dirs) < directions:
        dirs.append(rng.standard_normal(tangent.shape[0]) @ tangent)
    dirs = np.stack(dirs[:directions])
    g0 = start.loc.g.v[0]
    dirs = dirs / np.sqrt(np.einsum("Za,ab,Zb->Z", dirs, g0, dirs))[:, None]
    times, xs, vs = geodesic_trajectory(chart, np.repeat(p[None], len(dirs), 0), dirs, length, step)
    pts = xs.reshape(-1, chart.dim)
    vel = vs.reshape(-1, chart.dim)
    ctx = FrameContext(chart, scn.foliation, pts, order=1)
    loc = ctx.loc
    Xj = ctx.field(spec)
    Xperp = ctx.perp(Xj)
    c_dot = loc.constant(vel).truncate(0)
    # ⟨α_{X^⊥}(ċ), e_α⟩ over the normal frame
    a = None
    for e, al in zip(ctx.tangent, alpha_frame_j(ctx, Xperp)):
        term = loc.inner(c_dot, e.truncate(0)) * al.truncate(0)
        a = term if a is None else a + term
    source = loc.norm(a).v
    size = loc.norm(Xperp.truncate(0)).v
    speed = loc.norm(c_dot).v
    drift = float(np.max(np.abs(speed - 1.0)))
    off_leaf = float(np.max(loc.norm(ctx.perp(c_dot)).v / speed))
    res = np.maximum(source, size)
    notes = []
    if not pres.passed:
        notes.append(f"field is not foliation-preserving (residual {pres.max_residual:.3g})")
        res = np.maximum(res, pres.max_residual)
    if off_leaf > 1e-6:
        notes.append(f"geodesic left the leaf (normal velocity {off_leaf:.3g}); reduce the step")
        res = np.maximum(res, off_leaf)
    detail = {
        "max_source": float(np.max(source)),
        "max_normal_part": float(np.max(size)),
        "min_normal_part": float(np.min(size)),
        "speed_drift": drift,
        "leaf_drift": off_leaf,
        "length": length,
    }
    return _report(f"prop4:{_label(scn, X)}", scn, plan, tol, pts, res, t0, note="; ".join(notes), detail=detail)


def integral_identity(scn, leaf: LeafPatch, fields: Sequence[VectorFieldSpec]) -> list[tuple[float, float]]:
    """(∫_L ⟨J(V), V⟩, ∫_L |α_V|²) for each V, projected normal."""
    P, _, dw = _quadrature(scn.chart, leaf)
    ctx = FrameContext(scn.chart, scn.foliation, P, order=2)
    out = []
    for V in fields:
        Vj = ctx.perp(ctx.field(V))
        lhs = _pairwise_sum(ctx.loc.inner(jacobi_j(ctx, Vj), Vj.truncate(0)).v * dw)
        rhs = _pairwise_sum(alpha_pairing_j(ctx, Vj, Vj).v * dw)
        out.append((lhs, rhs))
    return out


def check_integral_identity(scn, leaf, fields: int = 5, plan: SamplingPlan = SamplingPlan(), tol=None) -> CheckReport:
    """Relative gap |∫⟨J(V),V⟩ − ∫|α_V|²| / max(1, ∫|α_V|²) for seeded normal fields on a compact leaf."""
    t0 = time.perf_counter()
    lp = scn.leaf(leaf) if isinstance(leaf, str) else leaf
    rng = np.random.default_rng(plan.seed)
    bounds = plan.bounds(scn.chart)
    Vs = [random_field(scn.chart, rng, bounds, name=f"V{k}") for k in range(fields)]
    res = [abs(lhs - rhs) / max(1.0, abs(rhs)) for lhs, rhs in integral_identity(scn, lp, Vs)]
    pts = [(float(k),) for k in range(fields)]
    note = "" if scn.leaves_compact else "leaves are not compact; boundary terms may survive"
    return _report(f"integral:{lp.name}", scn, plan, tol, np.array(pts), np.array(res), t0, note=note)


CHECKS: dict[str, Callable] = {
    "lemma2": check_lemma2,
    "lemma3": check_lemma3,
    "killing": check_killing,
    "preserving": check_foliation_preserving,
    "jacobi": check_jacobi_field,
    "prop3": check_prop3_divergence,
    "prop4": check_prop4_transport,
    "minimal": check_minimal,
    "integrable_perp": check_integrable,
}


def report_sequence(reports: Sequence[CheckReport], timestamp: bool = True) -> list[dict]:
    return [r.to_dict(timestamp) for r in reports]
