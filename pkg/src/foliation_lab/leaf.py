"""Leaf patches, quadrature over leaves, and the two routes to the second variation of volume.

A leaf patch is a parametrized box u ↦ φ(u) in the chart.  Periodic
parameter axes use the trapezoidal rule (spectrally accurate for smooth
periodic integrands); non-periodic axes use Gauss-Legendre nodes, which
stay away from the box boundary where bump factors and coordinate
singularities live.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import jet as J
from .errors import HypothesisWarning, MisuseError, RankError
from .expr import Expression, as_expression, evaluate_jets, parse
from .foliation import FoliationSpec, FrameContext, frobenius_residual_jets
from .geometry import Chart, Local, VectorFieldSpec, geodesic_displacement
from .operators import alpha_pairing_j, f_vw_j

DEFAULT_RESOLUTION = 64
TANGENCY_TOL = 1e-8
MINIMAL_TOL = 1e-8


@dataclass(frozen=True)
class LeafPatch:
    params: tuple[str, ...]
    embed: tuple[Expression, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    periodic: tuple[bool, ...]
    resolution: tuple[int, ...]
    name: str = ""

    @classmethod
    def build(cls, params, embed, bounds, periodic=None, resolution=DEFAULT_RESOLUTION, name=""):
        """``bounds`` is a sequence of ``(lo, hi)``; ``periodic`` defaults to all True."""
        params = tuple(params)
        k = len(params)
        periodic = (True,) * k if periodic is None else tuple(bool(p) for p in periodic)
        if isinstance(resolution, int):
            resolution = (resolution,) * k
        embed = tuple(as_expression(e) for e in embed)
        for e in embed:
            e.check_symbols(params)
        lo, hi = zip(*bounds) if bounds else ((), ())
        if not len(lo) == len(periodic) == len(resolution) == k:
            raise ValueError("bounds/periodic/resolution must have one entry per parameter")
        if any(b <= a for a, b in zip(lo, hi)):
            raise ValueError("empty parameter interval")
        return cls(params, embed, tuple(map(float, lo)), tuple(map(float, hi)), periodic, tuple(map(int, resolution)), name)

    @property
    def k(self) -> int:
        return len(self.params)

    def with_resolution(self, resolution) -> "LeafPatch":
        if isinstance(resolution, int):
            resolution = (resolution,) * self.k
        return LeafPatch(self.params, self.embed, self.lower, self.upper, self.periodic, tuple(resolution), self.name)


@dataclass(frozen=True)
class VariationField:
    """A normal variation field, optionally multiplied by a C∞ bump.

    ``bump`` names chart coordinates with finite bounds; the field is
    multiplied by ∏ exp(1 − 1/(1 − s²)) with s the coordinate rescaled to
    (−1, 1), so it vanishes to all orders on the box boundary.
    """

    field: VectorFieldSpec
    bump: tuple[str, ...] = ()

    def spec(self, chart: Chart) -> VectorFieldSpec:
        if not self.bump:
            return self.field
        factors = []
        for name in self.bump:
            k = chart.coords.index(name)
            lo, hi = chart.lower[k], chart.upper[k]
            if not (math.isfinite(lo) and math.isfinite(hi)) or chart.periodic[k]:
                raise MisuseError(f"bump axis {name} needs finite non-periodic bounds")
            s = f"((2*{name} - ({lo!r}) - ({hi!r}))/({hi - lo!r}))"
            factors.append(f"exp(1 - 1/(1 - {s}^2))")
        bump = " * ".join(factors)
        comps = [parse(f"({c}) * {bump}") for c in self.field.components]
        return VectorFieldSpec(tuple(comps), self.field.name)


@dataclass(frozen=True)
class StabilityReport:
    I_f: float
    I_alpha: float
    residual: float
    stable: bool
    warnings: tuple[str, ...] = field(default=())


@dataclass(frozen=True)
class SecondVariation:
    d2vol: float
    I_f: float
    rel_error: float
    t_step: float


# -- quadrature -------------------------------------------------------------


@lru_cache(maxsize=None)
def _rule(n: int, lo: float, hi: float, periodic: bool) -> tuple[np.ndarray, np.ndarray]:
    if periodic:
        h = (hi - lo) / n
        return lo + h * np.arange(n), np.full(n, h)
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


@lru_cache(maxsize=None)
def _diff_matrix(n: int, lo: float, hi: float, periodic: bool) -> np.ndarray:
    """Differentiation matrix on the quadrature nodes of one axis."""
    nodes, _ = _rule(n, lo, hi, periodic)
    if periodic:
        # spectral derivative, Nyquist mode dropped
        k = np.fft.fftfreq(n, d=1.0 / n) * (2 * np.pi / (hi - lo))
        if n % 2 == 0:
            k[n // 2] = 0.0
        eye = np.eye(n)
        return np.real(np.fft.ifft(1j * k[:, None] * np.fft.fft(eye, axis=0), axis=0))
    # barycentric Lagrange differentiation on the Legendre nodes
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    wb = 1.0 / np.prod(diff, axis=1)
    D = (wb[None, :] / wb[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


def leaf_grid(leaf: LeafPatch) -> tuple[np.ndarray, np.ndarray]:
    """Parameter nodes (K, k) in C order over the axes and tensor weights (K,)."""
    rules = [_rule(n, lo, hi, p) for n, lo, hi, p in zip(leaf.resolution, leaf.lower, leaf.upper, leaf.periodic)]
    mesh = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    wmesh = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    U = np.stack([m.ravel() for m in mesh], axis=1)
    w = np.prod(np.stack([m.ravel() for m in wmesh], axis=1), axis=1)
    return U, w


def embed(leaf: LeafPatch, U: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """φ(U) of shape (K, m) and Dφ(U) of shape (K, m, k)."""
    K = U.shape[0]
    env = dict(zip(leaf.params, J.variables(U, order=1)))
    comps = [evaluate_jets(e, env, K, leaf.k, 1) for e in leaf.embed]
    return np.stack([c.v for c in comps], axis=1), np.stack([c.d for c in comps], axis=1)


def _induced(g: np.ndarray, D: np.ndarray) -> np.ndarray:
    return np.einsum("Zai,Zab,Zbj->Zij", D, g, D)


def _density(chart: Chart, P: np.ndarray, D: np.ndarray) -> np.ndarray:
    G = _induced(Local(chart, P, order=0).g.v, D)
    det = np.linalg.det(G)
    scale = np.max(np.abs(G), axis=(1, 2)) ** G.shape[1]
    if np.any(det <= 1e-14 * scale):
        bad = int(np.argmin(det / scale))
        raise RankError(f"leaf embedding loses rank at {P[bad].tolist()}")
    return np.sqrt(det)


def _quadrature(chart: Chart, leaf: LeafPatch):
    U, w = leaf_grid(leaf)
    P, D = embed(leaf, U)
    return P, D, w * _density(chart, P, D)


def _pairwise_sum(x: np.ndarray) -> float:
    # numpy's reduction is a fixed pairwise tree, so results are order-stable
    return float(np.sum(x))


def leaf_volume(chart: Chart, leaf: LeafPatch) -> float:
    _, _, dw = _quadrature(chart, leaf)
    return _pairwise_sum(dw)


def integrate_leaf(chart: Chart, leaf: LeafPatch, scalar) -> float:
    """∫_L scalar dvol; ``scalar`` is an expression in chart coordinates or a callable on (K, m) points."""
    P, _, dw = _quadrature(chart, leaf)
    if callable(scalar) and not isinstance(scalar, Expression):
        vals = np.asarray(scalar(P), dtype=float)
    else:
        e = as_expression(scalar)
        loc = Local(chart, P, order=0)
        vals = np.broadcast_to(loc.scalar(e).v, dw.shape)
    return _pairwise_sum(vals * dw)


def tangency_residual(chart: Chart, fol: FoliationSpec, leaf: LeafPatch) -> float:
    """Max normal component of the embedding partials (0 when the patch lies in a leaf)."""
    U, _ = leaf_grid(leaf)
    P, D = embed(leaf, U)
    ctx = FrameContext(chart, fol, P, order=0)
    worst = 0.0
    for a in range(leaf.k):
        col = ctx.loc.constant(D[:, :, a]).truncate(0)
        worst = max(worst, float(np.max(ctx.loc.norm(ctx.perp(col)).v)))
    return worst


def check_leaf(chart: Chart, fol: FoliationSpec, leaf: LeafPatch) -> None:
    if leaf.k != fol.n:
        raise MisuseError(f"leaf {leaf.name!r} has {leaf.k} parameters, leaves have dimension {fol.n}")
    if len(leaf.embed) != chart.dim:
        raise MisuseError(f"leaf {leaf.name!r} embeds into {len(leaf.embed)} coordinates, chart has {chart.dim}")
    _quadrature(chart, leaf)
    res = tangency_residual(chart, fol, leaf)
    if res >= TANGENCY_TOL:
        raise MisuseError(f"leaf {leaf.name!r} is not tangent to D (normal part {res:.3g})")


def leaf_hypotheses(chart: Chart, fol: FoliationSpec, P: np.ndarray) -> list[str]:
    """Warnings for the minimal / integrable-normal preconditions at the given points."""
    ctx = FrameContext(chart, fol, P, order=2)
    out = []
    h = float(np.max(ctx.loc.norm(ctx.mean_curvature().truncate(0)).v))
    if h >= MINIMAL_TOL:
        out.append(f"foliation is not minimal on the leaf (max |H| = {h:.3g})")
    if ctx.l > 1:
        fr = float(np.max(frobenius_residual_jets(ctx.loc, [e.truncate(1) for e in ctx.normal])))
        if fr >= MINIMAL_TOL:
            out.append(f"normal distribution is not integrable (Frobenius residual {fr:.3g})")
    return out


def _variation_spec(chart: Chart, V) -> VectorFieldSpec:
    return V.spec(chart) if isinstance(V, VariationField) else V


def stability_report(chart: Chart, fol: FoliationSpec, leaf: LeafPatch, V, tol: float = 1e-8) -> StabilityReport:
    """I_f = ∫ f_{V,V} and I_alpha = ∫ |α_V|² over the leaf."""
    spec = _variation_spec(chart, V)
    P, _, dw = _quadrature(chart, leaf)
    notes = leaf_hypotheses(chart, fol, P)
    for note in notes:
        warnings.warn(note, HypothesisWarning, stacklevel=2)
    ctx = FrameContext(chart, fol, P, order=2)
    Vj = ctx.field(spec)
    I_f = _pairwise_sum(f_vw_j(ctx, Vj, Vj).v * dw)
    I_alpha = _pairwise_sum(alpha_pairing_j(ctx, Vj, Vj).v * dw)
    return StabilityReport(I_f, I_alpha, abs(I_f - I_alpha), I_f >= -tol, tuple(notes))


def _apply_diff(leaf: LeafPatch, values: np.ndarray) -> np.ndarray:
    """Parameter derivatives of grid values (K, m) → (K, m, k)."""
    shape = leaf.resolution
    grid = values.reshape(*shape, values.shape[-1])
    out = []
    for a in range(leaf.k):
        Dm = _diff_matrix(shape[a], leaf.lower[a], leaf.upper[a], leaf.periodic[a])
        out.append(np.moveaxis(np.tensordot(Dm, grid, axes=([1], [a])), 0, a).reshape(values.shape))
    return np.stack(out, axis=-1)


def _volume_change(chart: Chart, leaf: LeafPatch, P, D, w, disp, g0, dens0) -> float:
    """vol(φ + disp) − vol(φ), computed without subtracting the two volumes."""
    Pt = P + disp
    delta = _apply_diff(leaf, disp)
    g_t = Local(chart, Pt, order=0).g.v
    dg = g_t - g0
    Dt = D + delta
    E = (
        np.einsum("Zai,Zab,Zbj->Zij", D, dg, D)
        + np.einsum("Zai,Zab,Zbj->Zij", delta, g_t, D)
        + np.einsum("Zai,Zab,Zbj->Zij", Dt, g_t, delta)
    )
    G0 = _induced(g0, D)
    M = np.linalg.solve(G0, E)
    k = G0.shape[1]
    sign, logdet = np.linalg.slogdet(np.eye(k) + M)
    det_ratio_m1 = np.expm1(logdet)  # det(G_t)/det(G_0) − 1
    # sqrt(det G_t) − sqrt(det G_0) = dens0 · (sqrt(1 + r) − 1)
    ddens = dens0 * det_ratio_m1 / (np.sqrt(1.0 + det_ratio_m1) + 1.0)
    return _pairwise_sum(w * ddens)


def second_variation_direct(
    chart: Chart,
    fol: FoliationSpec,
    leaf: LeafPatch,
    V,
    t_step: float = 1e-3,
    step: float | None = None,
) -> SecondVariation:
    """d²/dt² vol(φ_t) at t = 0 by a central difference, φ_t(u) = exp_{φ(u)}(t V^⊥).

    Compared against I_f from :func:`stability_report`.
    """
    spec = _variation_spec(chart, V)
    U, w = leaf_grid(leaf)
    P, D = embed(leaf, U)
    dens0 = _density(chart, P, D)
    ctx = FrameContext(chart, fol, P, order=0)
    Vp = ctx.perp(ctx.field(spec).truncate(0)).v
    g0 = Local(chart, P, order=0).g.v
    h = t_step if step is None else step
    changes = []
    for t in (t_step, -t_step):
        disp, _ = geodesic_displacement(chart, P, Vp, t, step=h)
        changes.append(_volume_change(chart, leaf, P, D, w, disp, g0, dens0))
    d2 = (changes[0] + changes[1]) / t_step**2
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", HypothesisWarning)
        I_f = stability_report(chart, fol, leaf, spec).I_f
    return SecondVariation(d2, I_f, abs(d2 - I_f) / max(1.0, abs(I_f)), t_step)
