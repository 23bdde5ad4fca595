"""Tangent distribution D, its orthogonal complement, and adapted frames.

Frames are built by Gram-Schmidt executed on jets, so frame fields come with
exact first and second derivatives.  Tangent vectors are taken in the
declaration order of the spanning fields; the normal frame is Gram-Schmidt
over the coordinate vectors ∂_1, ..., ∂_m projected onto D^⊥, skipping any
candidate whose residual norm is below ``PIVOT_TOL``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from . import jet as J
from .errors import MisuseError, PivotWarning, RankError
from .geometry import Chart, Local, VectorFieldSpec, _batch, _unbatch
from .jet import Jet

PIVOT_TOL = 1e-8
# accepted candidates this close to the pivot threshold make the frame ill-conditioned
PIVOT_WARN = 1e-5


@dataclass(frozen=True)
class FoliationSpec:
    spanning: tuple[VectorFieldSpec, ...]

    @classmethod
    def of(cls, *fields) -> "FoliationSpec":
        return cls(tuple(f if isinstance(f, VectorFieldSpec) else VectorFieldSpec.of(f) for f in fields))

    @property
    def n(self) -> int:
        return len(self.spanning)


@dataclass(frozen=True)
class AdaptedFrame:
    """Orthonormal frame values at a batch of points.

    ``tangent`` has shape (N, n, m) and ``normal`` (N, l, m); rows are
    coordinate components of e_1..e_n and e_{n+1}..e_m.
    """

    points: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray

    @property
    def full(self) -> np.ndarray:
        return np.concatenate([self.tangent, self.normal], axis=-2)


def gram_schmidt(loc: Local, vectors: Sequence[Jet], basis: Sequence[Jet] = (), what: str = "D") -> list[Jet]:
    """Orthonormalize ``vectors`` in order (no skipping), after removing ``basis`` components."""
    out = list(basis)
    start = len(out)
    for k, v in enumerate(vectors):
        r = v
        for e in out:
            r = r - loc.inner(r, e) * e
        if np.any(loc.norm(r.truncate(0)).v < PIVOT_TOL):
            raise RankError(f"spanning fields of {what} are dependent (field {k + 1})")
        out.append(r / loc.norm(r))
    return out[start:]


class FrameContext:
    """A :class:`Local` together with the adapted frame of a foliation."""

    def __init__(self, chart: Chart, fol: FoliationSpec, points, order: int = 2):
        self.chart = chart
        self.fol = fol
        self.loc = Local(chart, points, order)
        self.n = fol.n
        self.m = chart.dim
        self.l = self.m - self.n
        if not 0 < self.n < self.m:
            raise ValueError(f"leaf dimension {self.n} must lie strictly between 0 and {self.m}")

    @property
    def points(self) -> np.ndarray:
        return self.loc.points

    def field(self, spec: VectorFieldSpec) -> Jet:
        return self.loc.field(spec)

    @cached_property
    def spanning(self) -> list[Jet]:
        return [self.loc.field(f) for f in self.fol.spanning]

    @cached_property
    def tangent(self) -> list[Jet]:
        return gram_schmidt(self.loc, self.spanning)

    @cached_property
    def normal(self) -> list[Jet]:
        loc = self.loc
        npts = loc.n
        slots: list[Jet] = [loc.constant(np.zeros(self.m)) for _ in range(self.l)]
        count = np.zeros(npts, dtype=int)
        weakest = np.full(npts, np.inf)
        for k in range(self.m):
            cand = loc.constant(np.eye(self.m)[k])
            r = cand
            for _ in range(2):  # a second pass restores orthogonality lost to cancellation
                for e in self.tangent:
                    r = r - loc.inner(r, e) * e
                for e in slots:  # unfilled slots are zero and contribute nothing
                    r = r - loc.inner(r, e) * e
            n2 = loc.inner(r, r)
            size = np.sqrt(np.maximum(n2.v, 0.0))
            accept = (size >= PIVOT_TOL) & (count < self.l)
            if not np.any(accept):
                continue
            unit = r / J.sqrt(J.where(accept, n2, J.lift(1.0, npts, self.m, n2.order)))
            for s in range(self.l):
                slots[s] = J.where(accept & (count == s), unit, slots[s])
            weakest = np.where(accept, np.minimum(weakest, size), weakest)
            count = count + accept
        if np.any(count < self.l):
            bad = int(np.argmin(count))
            raise RankError(f"normal complement has rank {count[bad]} < {self.l} at {self.points[bad].tolist()}")
        if np.any(weakest < PIVOT_WARN):
            warnings.warn(
                f"normal frame pivot norm {weakest.min():.2e} is close to the skip threshold",
                PivotWarning,
                stacklevel=2,
            )
        return slots

    @cached_property
    def frame(self) -> list[Jet]:
        return self.tangent + self.normal

    @cached_property
    def tangent_flat(self) -> list[Jet]:
        return [self.loc.lower(e) for e in self.tangent]

    # -- projections ------------------------------------------------------
    def tang(self, v: Jet) -> Jet:
        out = None
        for e, ef in zip(self.tangent, self.tangent_flat):
            term = J.contract("a,a->", ef, v) * e
            out = term if out is None else out + term
        return out

    def perp(self, v: Jet) -> Jet:
        return v - self.tang(v)

    def normal_part(self, v: Jet) -> Jet:
        """v^⊥ expanded in the normal frame (same value as :meth:`perp`)."""
        out = None
        for e in self.normal:
            term = self.loc.inner(v, e) * e
            out = term if out is None else out + term
        return out

    # -- second fundamental form -----------------------------------------
    def shape_operator(self, V: Jet, X: Jet) -> Jet:
        """A^V(X) = −(∇_X V)^⊤."""
        return -self.tang(self.loc.covd(X, V))

    @cached_property
    def normal_shapes(self) -> list[list[Jet]]:
        """Values of A^{e_α}(e_i), indexed [α][i]."""
        t1 = [e.truncate(1) for e in self.tangent]
        return [[self.shape_operator(ea.truncate(1), e) for e in t1] for ea in self.normal]

    def mean_curvature(self) -> Jet:
        """H = Σ_α tr(A^{e_α}) e_α with tr A = Σ_i ⟨A(e_i), e_i⟩."""
        out = None
        for ea in self.normal:
            tr = None
            for ei in self.tangent:
                t = self.loc.inner(self.shape_operator(ea, ei), ei)
                tr = t if tr is None else tr + t
            term = tr * ea
            out = term if out is None else out + term
        return out

    def mean_curvature_perp(self) -> Jet:
        """Mean curvature of D^⊥ (roles swapped): Σ_i Σ_α ⟨∇_{e_α} e_α, e_i⟩ e_i."""
        acc = None
        for ea in self.normal:
            t = self.loc.covd(ea, ea)
            acc = t if acc is None else acc + t
        return self.tang(acc)


def frobenius_residual_jets(loc: Local, fields: Sequence[Jet]) -> np.ndarray:
    """Max over pairs of |[e_a, e_b] mod span|, after orthonormalizing ``fields``."""
    frame = gram_schmidt(loc, fields, what="the distribution")
    res = np.zeros(loc.n)
    for a in range(len(frame)):
        for b in range(a + 1, len(frame)):
            br = loc.bracket(frame[a], frame[b])
            r = br
            for e in frame:
                r = r - loc.inner(br, e) * e
            res = np.maximum(res, loc.norm(r.truncate(0)).v)
    return res


# -- public operations -----------------------------------------------------


def adapted_frame_at(chart: Chart, fol: FoliationSpec, p) -> AdaptedFrame:
    pts, single = _batch(p)
    ctx = FrameContext(chart, fol, pts, order=0)
    tangent = np.stack([e.v for e in ctx.tangent], axis=1)
    normal = np.stack([e.v for e in ctx.normal], axis=1)
    if single:
        return AdaptedFrame(ctx.points[0], tangent[0], normal[0])
    return AdaptedFrame(ctx.points, tangent, normal)


def project(chart: Chart, fol: FoliationSpec, v, p, which: str = "top") -> np.ndarray:
    """Tangential (``"top"``) or normal (``"bot"``) part of the vector ``v`` at ``p``."""
    pts, single = _batch(p)
    ctx = FrameContext(chart, fol, pts, order=0)
    vec = ctx.loc.constant(np.atleast_2d(np.asarray(v, dtype=float))).truncate(0)
    top = ctx.tang(vec).v
    if which == "top":
        return _unbatch(top, single)
    if which == "bot":
        return _unbatch(vec.v - top, single)
    raise ValueError("which must be 'top' or 'bot'")


def shape_operator(chart: Chart, fol: FoliationSpec, V: VectorFieldSpec, X: VectorFieldSpec, p, tol: float = 1e-8) -> np.ndarray:
    """A^V(X) = −(∇_X V)^⊤; V must be normal and X tangent at ``p``."""
    pts, single = _batch(p)
    ctx = FrameContext(chart, fol, pts)
    Vj, Xj = ctx.field(V), ctx.field(X)
    off = ctx.loc.norm(ctx.tang(Vj).truncate(0)).v
    if np.any(off >= tol):
        raise MisuseError(f"field V={V.name or V} is not normal to D (tangential part {off.max():.3g})")
    off = ctx.loc.norm(ctx.perp(Xj).truncate(0)).v
    if np.any(off >= tol):
        raise MisuseError(f"field X={X.name or X} is not tangent to D (normal part {off.max():.3g})")
    return _unbatch(ctx.shape_operator(Vj, Xj).v, single)


def mean_curvature(chart: Chart, fol: FoliationSpec, p) -> np.ndarray:
    pts, single = _batch(p)
    ctx = FrameContext(chart, fol, pts, order=1)
    return _unbatch(ctx.mean_curvature().v, single)


def frobenius_residual(chart: Chart, fields: Sequence[VectorFieldSpec], p) -> np.ndarray | float:
    """Involutivity defect of span(fields): zero iff the span is closed under brackets."""
    pts, single = _batch(p)
    loc = Local(chart, pts, order=1)
    res = frobenius_residual_jets(loc, [loc.field(f) for f in fields])
    return float(res[0]) if single else res
