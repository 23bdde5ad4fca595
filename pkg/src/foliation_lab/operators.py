"""Normal-bundle operators of a foliation: α_V, ∇^⊥, R(V), Â, ∇^⊥², J, f_{V,W}, divergences.

Every function comes in two layers.  The ``*_j`` functions work on a
:class:`~foliation_lab.foliation.FrameContext` and jets, which is what the
verification harness uses to evaluate many quantities on one batch of
points.  The plain-named wrappers take specs and points and return arrays.

Arguments are silently projected: normal-field slots use V^⊥ and tangent
slots use X^⊤.  Pairings between maps D → D^⊥ (or D → D) use the frame
trace ⟨A, B⟩ = Σ_i ⟨A(e_i), B(e_i)⟩.
"""

from __future__ import annotations

import numpy as np

from . import jet as J
from .foliation import FoliationSpec, FrameContext
from .geometry import Chart, Local, VectorFieldSpec, _batch, _unbatch
from .jet import Jet


def _sum(terms):
    out = None
    for t in terms:
        out = t if out is None else out + t
    return out


# -- jet layer ---------------------------------------------------------------


def alpha_frame_j(ctx: FrameContext, V: Jet) -> list[Jet]:
    """α_V(e_i) = [V^⊥, e_i]^⊥ for each tangent frame vector."""
    Vp = ctx.perp(V)
    return [ctx.perp(ctx.loc.bracket(Vp, e)) for e in ctx.tangent]


def alpha_j(ctx: FrameContext, V: Jet, X: Jet) -> Jet:
    """α_V(X^⊤); tensorial in the tangent slot, so expanded in the frame."""
    loc = ctx.loc
    return _sum(loc.inner(X, e) * a for e, a in zip(ctx.tangent, alpha_frame_j(ctx, V)))


def alpha_pairing_j(ctx: FrameContext, V: Jet, W: Jet) -> Jet:
    """⟨α_V, α_W⟩."""
    loc = ctx.loc
    pairs = zip(alpha_frame_j(ctx, V.truncate(1)), alpha_frame_j(ctx, W.truncate(1)))
    return _sum(loc.inner(a, b) for a, b in pairs)


def alpha_transpose_j(ctx: FrameContext, V: Jet, W: Jet) -> Jet:
    """α_V^t(W) = Σ_i ⟨W, α_V(e_i)⟩ e_i."""
    loc = ctx.loc
    Wp = ctx.perp(W)
    return _sum(loc.inner(Wp, a) * e for e, a in zip(ctx.tangent, alpha_frame_j(ctx, V)))


def nabla_perp_j(ctx: FrameContext, V: Jet, X: Jet) -> Jet:
    """∇^⊥_X V = (∇_X V^⊥)^⊥."""
    return ctx.perp(ctx.loc.covd(X, ctx.perp(V)))


def shape_j(ctx: FrameContext, V: Jet, X: Jet) -> Jet:
    """A^V(X) for V projected to D^⊥."""
    return ctx.shape_operator(ctx.perp(V), X)


def curvature_trace_j(ctx: FrameContext, V: Jet) -> Jet:
    """R(V) = Σ_i (R(e_i, V^⊥) e_i)^⊥."""
    Vp = ctx.perp(V)
    return ctx.perp(_sum(ctx.loc.curvature(e, Vp, e) for e in ctx.tangent))


def shape_pairing_j(ctx: FrameContext, V: Jet, W: Jet) -> Jet:
    """⟨A^V, A^W⟩ = Σ_i ⟨A^V(e_i), A^W(e_i)⟩."""
    loc = ctx.loc
    return _sum(loc.inner(shape_j(ctx, V, e), shape_j(ctx, W, e)) for e in ctx.tangent)


def a_hat_j(ctx: FrameContext, V: Jet) -> Jet:
    """Â(V) = Σ_α ⟨A^V, A^{e_α}⟩ e_α (values only)."""
    loc = ctx.loc
    Vp = ctx.perp(V.truncate(1))
    shapes = [ctx.shape_operator(Vp, e.truncate(1)) for e in ctx.tangent]
    out = None
    for ea, others in zip(ctx.normal, ctx.normal_shapes):
        pairing = _sum(loc.inner(a, b) for a, b in zip(shapes, others))
        term = pairing * ea.truncate(0)
        out = term if out is None else out + term
    return out


def nabla_perp_squared_j(ctx: FrameContext, V: Jet) -> Jet:
    """Σ_i ∇^⊥_{e_i} ∇^⊥_{e_i} V − ∇^⊥_{(∇_{e_i} e_i)^⊤} V."""
    loc = ctx.loc
    Vp = ctx.perp(V)
    outer = _sum(ctx.perp(loc.covd(e, ctx.perp(loc.covd(e, Vp)))) for e in ctx.tangent)
    z = ctx.tang(_sum(loc.covd(e, e) for e in (t.truncate(1) for t in ctx.tangent)))
    return outer - ctx.perp(loc.covd(z, Vp))


def jacobi_j(ctx: FrameContext, V: Jet) -> Jet:
    """J(V) = −∇^⊥²V + R(V) − Â(V) (values only)."""
    Vp = ctx.perp(V)
    return -nabla_perp_squared_j(ctx, Vp) + curvature_trace_j(ctx, Vp.truncate(0)) - a_hat_j(ctx, Vp)


def f_vw_j(ctx: FrameContext, V: Jet, W: Jet) -> Jet:
    """f_{V,W} = ⟨∇^⊥V, ∇^⊥W⟩ + ⟨R(V), W⟩ − ⟨A^V, A^W⟩."""
    loc = ctx.loc
    Vp, Wp = ctx.perp(V.truncate(1)), ctx.perp(W.truncate(1))
    grad_term = _sum(loc.inner(nabla_perp_j(ctx, Vp, e), nabla_perp_j(ctx, Wp, e)) for e in ctx.tangent)
    curv = loc.inner(curvature_trace_j(ctx, Vp.truncate(0)), Wp.truncate(0))
    return grad_term + curv - shape_pairing_j(ctx, Vp, Wp)


def div_leaf_j(ctx: FrameContext, X: Jet) -> Jet:
    """div_L(X) = Σ_i ⟨∇_{e_i} X^⊤, e_i⟩."""
    loc = ctx.loc
    Xt = ctx.tang(X)
    return _sum(loc.inner(loc.covd(e, Xt), e) for e in ctx.tangent)


def div_full_j(loc: Local, X: Jet) -> Jet:
    """div_M(X) = ∂_a X^a + Γ^a_ab X^b (frame-free trace of ∇X)."""
    dX = J.grad(X)
    trace = Jet(np.einsum("Zaa->Z", dX.v), None if dX.d is None else np.einsum("ZaaY->ZY", dX.d))
    gam = loc.christoffel
    gam_trace = Jet(np.einsum("Zaab->Zb", gam.v), None if gam.d is None else np.einsum("ZaabY->ZbY", gam.d))
    return trace + J.contract("b,b->", gam_trace, X)


def lemma2_sides_j(ctx: FrameContext, V: Jet, W: Jet) -> tuple[Jet, Jet]:
    """(f_{V,W}, ⟨α_V, α_W⟩ − div_L((∇_V W)^⊤))."""
    Vp, Wp = ctx.perp(V), ctx.perp(W)
    lhs = f_vw_j(ctx, Vp, Wp)
    rhs = alpha_pairing_j(ctx, Vp, Wp) - div_leaf_j(ctx, ctx.loc.covd(Vp, Wp))
    return lhs, rhs


def lemma3_sides_j(ctx: FrameContext, V: Jet, W: Jet) -> tuple[Jet, Jet]:
    """(⟨J(V), W⟩, ⟨α_V, α_W⟩ + div_L(α_V^t(W)))."""
    Vp, Wp = ctx.perp(V), ctx.perp(W)
    lhs = ctx.loc.inner(jacobi_j(ctx, Vp), Wp)
    rhs = alpha_pairing_j(ctx, Vp, Wp) + div_leaf_j(ctx, alpha_transpose_j(ctx, Vp, Wp))
    return lhs, rhs


# -- public wrappers ---------------------------------------------------------


def _ctx(chart, fol, p, order=2):
    pts, single = _batch(p)
    return FrameContext(chart, fol, pts, order), single


def alpha(chart: Chart, fol: FoliationSpec, V: VectorFieldSpec, X: VectorFieldSpec, p) -> np.ndarray:
    ctx, single = _ctx(chart, fol, p)
    return _unbatch(alpha_j(ctx, ctx.field(V), ctx.field(X)).v, single)


def alpha_transpose(chart: Chart, fol: FoliationSpec, V: VectorFieldSpec, W: VectorFieldSpec, p) -> np.ndarray:
    ctx, single = _ctx(chart, fol, p)
    return _unbatch(alpha_transpose_j(ctx, ctx.field(V), ctx.field(W)).v, single)


def nabla_perp(chart: Chart, fol: FoliationSpec, V: VectorFieldSpec, X: VectorFieldSpec, p) -> np.ndarray:
    ctx, single = _ctx(chart, fol, p)
    return _unbatch(nabla_perp_j(ctx, ctx.field(V), ctx.tang(ctx.field(X))).v, single)


def curvature_trace(chart: Chart, fol: FoliationSpec, V: VectorFieldSpec, p) -> np.ndarray:
    ctx, single = _ctx(chart, fol, p)
    return _unbatch(curvature_trace_j(ctx, ctx.field(V)).v, single)


def a_hat(chart: Chart, fol: FoliationSpec, V: VectorFieldSpec, p) -> np.ndarray:
    ctx, single = _ctx(chart, fol, p)
    return _unbatch(a_hat_j(ctx, ctx.field(V)).v, single)


def nabla_perp_squared(chart: Chart, fol: FoliationSpec, V: VectorFieldSpec, p) -> np.ndarray:
    ctx, single = _ctx(chart, fol, p)
    return _unbatch(nabla_perp_squared_j(ctx, ctx.field(V)).v, single)


def jacobi(chart: Chart, fol: FoliationSpec, V: VectorFieldSpec, p) -> np.ndarray:
    ctx, single = _ctx(chart, fol, p)
    return _unbatch(jacobi_j(ctx, ctx.field(V)).v, single)


def f_vw(chart: Chart, fol: FoliationSpec, V: VectorFieldSpec, W: VectorFieldSpec, p):
    ctx, single = _ctx(chart, fol, p)
    out = f_vw_j(ctx, ctx.field(V), ctx.field(W)).v
    return float(out[0]) if single else out


def div_leaf(chart: Chart, fol: FoliationSpec, X: VectorFieldSpec, p):
    ctx, single = _ctx(chart, fol, p)
    out = div_leaf_j(ctx, ctx.field(X)).v
    return float(out[0]) if single else out


def div_full(chart: Chart, X: VectorFieldSpec, p):
    pts, single = _batch(p)
    loc = Local(chart, pts, order=1)
    out = div_full_j(loc, loc.field(X)).v
    return float(out[0]) if single else out
