"""Single-chart Riemannian geometry evaluated on batches of points.

Points are plain arrays of chart coordinates, shape ``(m,)`` or ``(N, m)``;
vectors are arrays of coordinate-basis components of the same shape.  The
heavy lifting happens in :class:`Local`, which evaluates the metric as an
order-2 jet at a batch of points and derives the Levi-Civita connection and
curvature from it.

Curvature convention::

    R(X, Y)Z = ∇_X ∇_Y Z − ∇_Y ∇_X Z − ∇_[X,Y] Z
    R(∂_i, ∂_j)∂_k = R[l, k, i, j] ∂_l
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import jet as J
from .errors import GeodesicExitError, MetricError
from .expr import Expression, as_expression, evaluate_jets
from .jet import Jet


@dataclass(frozen=True)
class Chart:
    """Coordinate box with periodic identifications and a metric.

    ``metric`` holds the upper triangle row by row:
    ``g_00, g_01, ..., g_0(m-1), g_11, ...``.
    """

    coords: tuple[str, ...]
    metric: tuple[Expression, ...]
    periods: tuple[float | None, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    name: str = ""

    def __post_init__(self):
        m = len(self.coords)
        if len(self.metric) != m * (m + 1) // 2:
            raise ValueError(f"expected {m * (m + 1) // 2} upper-triangular metric entries")
        for e in self.metric:
            e.check_symbols(self.coords)
        if len(self.periods) != m or len(self.lower) != m or len(self.upper) != m:
            raise ValueError("periods/lower/upper must have one entry per coordinate")

    @classmethod
    def build(cls, coords, metric, periods=None, lower=None, upper=None, name=""):
        """Convenience constructor.

        ``metric`` is either a full m×m nested sequence or a dict
        ``{(i, j): expr}`` over the upper triangle (missing off-diagonals are 0).
        Periodic coordinates default to the box ``[0, period)``.
        """
        coords = tuple(coords)
        m = len(coords)
        if isinstance(metric, dict):
            full = {}
            for (i, j), e in metric.items():
                full[(min(i, j), max(i, j))] = e
            entries = []
            for i in range(m):
                if (i, i) not in full:
                    raise ValueError(f"missing diagonal metric entry g_{coords[i]}_{coords[i]}")
                for j in range(i, m):
                    entries.append(full.get((i, j), 0))
        else:
            entries = [metric[i][j] for i in range(m) for j in range(i, m)]
        periods = tuple(periods) if periods is not None else (None,) * m
        lower = list(lower) if lower is not None else [None] * m
        upper = list(upper) if upper is not None else [None] * m
        for k, p in enumerate(periods):
            if p is not None:
                lower[k] = 0.0 if lower[k] is None else lower[k]
                upper[k] = lower[k] + p if upper[k] is None else upper[k]
            else:
                lower[k] = -math.inf if lower[k] is None else lower[k]
                upper[k] = math.inf if upper[k] is None else upper[k]
        return cls(
            coords,
            tuple(as_expression(e) for e in entries),
            tuple(None if p is None else float(p) for p in periods),
            tuple(float(x) for x in lower),
            tuple(float(x) for x in upper),
            name,
        )

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def periodic(self) -> tuple[bool, ...]:
        return tuple(p is not None for p in self.periods)

    def metric_entry(self, i: int, j: int) -> Expression:
        i, j = min(i, j), max(i, j)
        m = self.dim
        return self.metric[i * m - i * (i - 1) // 2 + (j - i)]

    @cached_property
    def metric_plan(self) -> tuple[np.ndarray, list[tuple[int, int, Expression]]]:
        """Constant metric entries as a matrix, plus the coordinate-dependent ones."""
        m = self.dim
        const = np.zeros((m, m))
        variable = []
        for i in range(m):
            for j in range(i, m):
                e = self.metric_entry(i, j)
                if e.constant is not None:
                    const[i, j] = const[j, i] = e.constant
                else:
                    variable.append((i, j, e))
        return const, variable

    def wrap(self, points: np.ndarray) -> np.ndarray:
        """Reduce periodic coordinates into ``[lower, lower + period)``."""
        pts = np.array(points, dtype=float, copy=True)
        for k, p in enumerate(self.periods):
            if p is not None:
                lo = self.lower[k]
                pts[..., k] = lo + np.mod(pts[..., k] - lo, p)
        return pts

    def inside(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        ok = np.ones(pts.shape[0], dtype=bool)
        for k, p in enumerate(self.periods):
            if p is None:
                ok &= (pts[:, k] > self.lower[k]) & (pts[:, k] < self.upper[k])
        return ok


@dataclass(frozen=True)
class VectorFieldSpec:
    """Coordinate components of a vector field as expressions."""

    components: tuple[Expression, ...]
    name: str = field(default="", compare=False)

    @classmethod
    def of(cls, *components, name: str = "") -> "VectorFieldSpec":
        if len(components) == 1 and isinstance(components[0], (list, tuple)):
            components = tuple(components[0])
        return cls(tuple(as_expression(c) for c in components), name)

    def __str__(self) -> str:
        return "(" + ", ".join(str(c) for c in self.components) + ")"


@dataclass(frozen=True)
class TangentVector:
    base: np.ndarray
    components: np.ndarray

    def norm(self, chart: Chart) -> float:
        g = metric_at(chart, self.base)
        c = self.components
        return float(np.sqrt(max(c @ g @ c, 0.0)))


def _batch(p) -> tuple[np.ndarray, bool]:
    p = np.asarray(p, dtype=float)
    single = p.ndim == 1
    return np.atleast_2d(p), single


def _unbatch(a: np.ndarray, single: bool) -> np.ndarray:
    return a[0] if single else a


class Local:
    """Geometry of a chart at a batch of points, as jets.

    ``order`` is the jet order of the metric: 2 gives Christoffel symbols to
    order 1 and curvature values; 1 gives Christoffel values only.
    """

    def __init__(self, chart: Chart, points, order: int = 2):
        pts, _ = _batch(points)
        self.chart = chart
        self.points = chart.wrap(pts)
        self.order = order
        self.n = self.points.shape[0]
        self.m = chart.dim
        self.x = J.variables(self.points, order)
        self.env = dict(zip(chart.coords, self.x))

    def scalar(self, expr: Expression) -> Jet:
        return evaluate_jets(expr, self.env, self.n, self.m, self.order)

    def field(self, spec: VectorFieldSpec) -> Jet:
        if len(spec.components) != self.m:
            raise ValueError(f"field {spec.name or spec} has {len(spec.components)} components, chart has {self.m}")
        return J.stack([self.scalar(c) for c in spec.components])

    def constant(self, vectors) -> Jet:
        """Coordinate-constant field with the given per-point values, shape (N, m)."""
        v = np.broadcast_to(np.asarray(vectors, dtype=float), (self.n, self.m))
        return J.lift(v, self.n, self.m, self.order, (self.m,))

    @cached_property
    def g(self) -> Jet:
        const, variable = self.chart.metric_plan
        n, m, order = self.n, self.m, self.order
        v = np.broadcast_to(const, (n, m, m)).copy()
        d = np.zeros((n, m, m, m)) if order >= 1 else None
        h = np.zeros((n, m, m, m, m)) if order >= 2 else None
        for i, j, e in variable:
            s = self.scalar(e)
            v[:, i, j] = v[:, j, i] = s.v
            if order >= 1:
                d[:, i, j] = d[:, j, i] = s.d
            if order >= 2:
                h[:, i, j] = h[:, j, i] = s.h
        return Jet(v, d, h)

    @cached_property
    def g_inv(self) -> Jet:
        try:
            return J.inv(self.g)
        except np.linalg.LinAlgError as exc:
            raise MetricError(f"singular metric in chart {self.chart.name!r}") from exc

    @cached_property
    def christoffel(self) -> Jet:
        """Γ[k, i, j] = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij)."""
        dg = J.grad(self.g)  # dg[a, b, c] = ∂_c g_ab
        v = dg.v
        lower = np.einsum("Zjli->Zijl", v) + np.einsum("Zilj->Zijl", v) - np.einsum("Zijl->Zijl", v)
        parts = [lower]
        if dg.order >= 1:
            d = dg.d
            parts.append(
                np.einsum("ZjliY->ZijlY", d) + np.einsum("ZiljY->ZijlY", d) - d
            )
        low = Jet(*parts)
        return J.contract("kl,ijl->kij", self.g_inv, low) * 0.5

    @cached_property
    def riemann(self) -> np.ndarray:
        """R[l, k, i, j] values (requires an order-2 metric)."""
        gam = self.christoffel
        if gam.order < 1:
            raise ValueError("curvature needs an order-2 metric jet")
        G = gam.v
        dG = gam.d  # dG[l, j, k, i] = ∂_i Γ^l_jk
        R = (
            np.einsum("Zljki->Zlkij", dG)
            - np.einsum("Zlikj->Zlkij", dG)
            + np.einsum("Zlip,Zpjk->Zlkij", G, G)
            - np.einsum("Zljp,Zpik->Zlkij", G, G)
        )
        return R

    # -- vector calculus on jets ----------------------------------------
    def lower(self, a: Jet) -> Jet:
        """Index-lowered vector g_ab a^b."""
        return J.contract("ab,b->a", self.g, a)

    def inner(self, a: Jet, b: Jet) -> Jet:
        return J.contract("a,a->", self.lower(b), a)

    def norm(self, a: Jet) -> Jet:
        return J.sqrt(self.inner(a, a))

    def covd(self, X: Jet, Y: Jet) -> Jet:
        """(∇_X Y)^k = X^a ∂_a Y^k + Γ^k_ab X^a Y^b."""
        gx = J.contract("kab,a->kb", self.christoffel, X)
        return J.contract("ka,a->k", J.grad(Y), X) + J.contract("kb,b->k", gx, Y)

    def bracket(self, X: Jet, Y: Jet) -> Jet:
        return J.contract("ka,a->k", J.grad(Y), X) - J.contract("ka,a->k", J.grad(X), Y)

    def curvature(self, X: Jet, Y: Jet, Z: Jet) -> Jet:
        """R(X, Y)Z (order 0)."""
        R = Jet(self.riemann)
        t = J.contract("lkij,k->lij", R, Z.truncate(0))
        t = J.contract("lij,i->lj", t, X.truncate(0))
        return J.contract("lj,j->l", t, Y.truncate(0))


# -- public operations -----------------------------------------------------


def metric_at(chart: Chart, p) -> np.ndarray:
    pts, single = _batch(p)
    g = Local(chart, pts, order=0).g.v
    eig = np.linalg.eigvalsh(g)
    if np.any(eig <= 0):
        bad = int(np.argmin(eig.min(axis=1)))
        raise MetricError(
            f"metric of chart {chart.name!r} is not positive definite at {pts[bad].tolist()} "
            f"(smallest eigenvalue {eig[bad].min():.3g}); scenario misconfigured"
        )
    return _unbatch(g, single)


def christoffel_at(chart: Chart, p) -> np.ndarray:
    """Γ[k, i, j] at ``p``."""
    pts, single = _batch(p)
    return _unbatch(Local(chart, pts, order=1).christoffel.v, single)


def covariant_derivative(chart: Chart, X: VectorFieldSpec, Y: VectorFieldSpec, p) -> np.ndarray:
    pts, single = _batch(p)
    loc = Local(chart, pts, order=2)
    return _unbatch(loc.covd(loc.field(X), loc.field(Y)).v, single)


def lie_bracket(chart: Chart, X: VectorFieldSpec, Y: VectorFieldSpec, p) -> np.ndarray:
    pts, single = _batch(p)
    loc = Local(chart, pts, order=1)
    return _unbatch(loc.bracket(loc.field(X), loc.field(Y)).v, single)


def riemann(chart: Chart, X: VectorFieldSpec, Y: VectorFieldSpec, Z: VectorFieldSpec, p) -> np.ndarray:
    """R(X, Y)Z at ``p``."""
    pts, single = _batch(p)
    loc = Local(chart, pts, order=2)
    out = loc.curvature(loc.field(X), loc.field(Y), loc.field(Z))
    return _unbatch(out.v, single)


def riemann_tensor_at(chart: Chart, p) -> np.ndarray:
    pts, single = _batch(p)
    return _unbatch(Local(chart, pts, order=2).riemann, single)


# -- geodesics -------------------------------------------------------------


def _geodesic_accel(chart: Chart, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    if not chart.metric_plan[1]:
        return np.zeros_like(v)
    gam = Local(chart, x, order=1).christoffel.v
    return -np.einsum("Zkij,Zi,Zj->Zk", gam, v, v)


def _integrate(chart: Chart, x0: np.ndarray, v0: np.ndarray, t: float, step: float, record: bool):
    nsteps = max(1, int(math.ceil(abs(t) / step - 1e-9)))
    h = t / nsteps
    delta = np.zeros_like(x0)
    vel = v0.copy()
    times, xs, vs = [0.0], [x0.copy()], [v0.copy()]

    def f(d, w):
        return w, _geodesic_accel(chart, x0 + d, w)

    for s in range(nsteps):
        k1x, k1v = f(delta, vel)
        k2x, k2v = f(delta + 0.5 * h * k1x, vel + 0.5 * h * k1v)
        k3x, k3v = f(delta + 0.5 * h * k2x, vel + 0.5 * h * k2v)
        k4x, k4v = f(delta + h * k3x, vel + h * k3v)
        delta = delta + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
        vel = vel + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
        if not np.all(chart.inside(x0 + delta)):
            raise GeodesicExitError("geodesic left the chart domain", (s + 1) * h)
        if record:
            times.append((s + 1) * h)
            xs.append(x0 + delta)
            vs.append(vel)
    if record:
        return np.array(times), np.stack(xs), np.stack(vs)
    return delta, vel


def _start(p, v):
    x0, single = _batch(p)
    v0 = np.atleast_2d(np.asarray(v, dtype=float))
    if v0.shape != x0.shape:
        raise ValueError("point and velocity batches differ in shape")
    return x0, v0, single


def geodesic_displacement(chart: Chart, p, v, t: float, step: float = 1e-3) -> tuple[np.ndarray, np.ndarray]:
    """Displacement ``c(t) - p`` and velocity ``ċ(t)`` for a batch of geodesics.

    Integrates ẍ^k + Γ^k_ij ẋ^i ẋ^j = 0 with fixed-step classical RK4.  The
    state is carried as a displacement from the start point so that short
    flows keep full relative precision.  Coordinates are not wrapped.
    """
    x0, v0, _ = _start(p, v)
    if t == 0:
        return np.zeros_like(x0), v0.copy()
    return _integrate(chart, x0, v0, t, step, record=False)


def geodesic_flow(chart: Chart, p, v, t: float, step: float = 1e-3) -> tuple[np.ndarray, np.ndarray]:
    """Position and velocity after flowing for time ``t`` from ``(p, v)``."""
    x0, v0, single = _start(p, v)
    delta, vel = geodesic_displacement(chart, x0, v0, t, step)
    return _unbatch(x0 + delta, single), _unbatch(vel, single)


def geodesic_trajectory(chart: Chart, p, v, t: float, step: float = 1e-3):
    """``(times, xs, vs)`` with ``xs``/``vs`` of shape (steps + 1, N, m)."""
    x0, v0, _ = _start(p, v)
    if t == 0:
        return np.zeros(1), x0[None].copy(), v0[None].copy()
    return _integrate(chart, x0, v0, t, step, record=True)
