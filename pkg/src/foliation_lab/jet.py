"""Batched second-order jets.

A :class:`Jet` holds a tensor-valued function at ``N`` points together with
its first and (optionally) second partial derivatives with respect to the
``m`` chart coordinates::

    v : (N, *shape)
    d : (N, *shape, m)          or None
    h : (N, *shape, m, m)       or None

The *order* is 2 when ``h`` is present, 1 when only ``d`` is, 0 otherwise.
Arithmetic follows the Leibniz/chain rules and truncates to the lowest order
among the operands.  :func:`grad` turns an order-``k`` jet into an
order-``k - 1`` jet with one extra trailing value axis, which is how the
geometry code obtains Christoffel derivatives and frame derivatives without
any finite differencing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Jet",
    "DualScalar",
    "variables",
    "lift",
    "grad",
    "contract",
    "stack",
    "inv",
    "where",
    "sqrt",
    "exp",
    "log",
    "sin",
    "cos",
    "tan",
    "sinh",
    "cosh",
    "tanh",
    "atan",
]


class Jet:
    __slots__ = ("v", "d", "h")
    __array_priority__ = 100  # make ndarray <op> Jet defer to Jet

    def __init__(self, v, d=None, h=None):
        if d is None and h is not None:
            raise ValueError("second derivatives without first derivatives")
        self.v = v
        self.d = d
        self.h = h

    # -- structure -----------------------------------------------------
    @property
    def order(self) -> int:
        if self.d is None:
            return 0
        return 1 if self.h is None else 2

    @property
    def shape(self) -> tuple[int, ...]:
        return self.v.shape[1:]

    @property
    def npoints(self) -> int:
        return self.v.shape[0]

    @property
    def nvars(self) -> int | None:
        return None if self.d is None else self.d.shape[-1]

    def truncate(self, order: int) -> "Jet":
        if order >= self.order:
            return self
        return Jet(self.v, self.d if order >= 1 else None, None)

    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        key = (slice(None),) + idx
        return Jet(
            self.v[key],
            None if self.d is None else self.d[key],
            None if self.h is None else self.h[key],
        )

    def __repr__(self) -> str:
        return f"Jet(order={self.order}, npoints={self.npoints}, shape={self.shape})"

    # -- arithmetic ----------------------------------------------------
    def __neg__(self) -> "Jet":
        return Jet(-self.v, _neg(self.d), _neg(self.h))

    def __add__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.v + _scalar(other, self), self.d, self.h)
        a, b = _align(self, other)
        order = min(a.order, b.order)
        return Jet(
            a.v + b.v,
            a.d + b.d if order >= 1 else None,
            a.h + b.h if order >= 2 else None,
        )

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            c = _scalar(other, self)
            return Jet(self.v * c, _scale(self.d, c, 1), _scale(self.h, c, 2))
        a, b = _align(self, other)
        order = min(a.order, b.order)
        v = a.v * b.v
        if order == 0:
            return Jet(v)
        av, bv = a.v[..., None], b.v[..., None]
        d = a.d * bv + av * b.d
        if order == 1:
            return Jet(v, d)
        cross = a.d[..., :, None] * b.d[..., None, :]
        h = a.h * bv[..., None] + av[..., None] * b.h + cross + np.swapaxes(cross, -1, -2)
        return Jet(v, d, h)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return self * (1.0 / _scalar(other, self))
        return self * reciprocal(other)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, exponent):
        if isinstance(exponent, Jet):
            return exp(exponent * log(self))
        return power(self, float(exponent))


@dataclass(frozen=True)
class DualScalar:
    """Value, gradient and Hessian of a scalar at a single point."""

    value: float
    grad: np.ndarray
    hess: np.ndarray
    coords: tuple[str, ...] = ()

    def partial(self, *names: str) -> float:
        idx = [self.coords.index(n) for n in names]
        if len(idx) == 0:
            return self.value
        if len(idx) == 1:
            return float(self.grad[idx[0]])
        if len(idx) == 2:
            return float(self.hess[idx[0], idx[1]])
        raise ValueError("only up to second partials are carried")


# -- helpers -------------------------------------------------------------


def _neg(x):
    return None if x is None else -x


def _scalar(c, like: Jet):
    c = np.asarray(c, dtype=float)
    if c.ndim == 0:
        return c
    # per-point scalar with shape (N,); broadcast over the value shape
    return c.reshape(c.shape + (1,) * len(like.shape))


def _scale(x, c, nderiv):
    if x is None:
        return None
    c = np.asarray(c)
    if c.ndim:
        c = c.reshape(c.shape + (1,) * nderiv)
    return x * c


def _expand(a: Jet, ndim: int) -> Jet:
    extra = ndim - len(a.shape)
    if extra <= 0:
        return a
    idx = (slice(None),) + (None,) * extra
    return Jet(
        a.v[idx],
        None if a.d is None else a.d[idx],
        None if a.h is None else a.h[idx],
    )


def _align(a: Jet, b: Jet) -> tuple[Jet, Jet]:
    nd = max(len(a.shape), len(b.shape))
    return _expand(a, nd), _expand(b, nd)


def variables(points: np.ndarray, order: int = 2) -> list[Jet]:
    """Coordinate functions as jets at ``points`` of shape (N, m)."""
    points = np.asarray(points, dtype=float)
    n, m = points.shape
    eye = np.eye(m)
    out = []
    for k in range(m):
        d = np.broadcast_to(eye[k], (n, m)) if order >= 1 else None
        h = np.zeros((n, m, m)) if order >= 2 else None
        out.append(Jet(points[:, k].copy(), d, h))
    return out


def lift(value, npoints: int, nvars: int, order: int = 2, shape: tuple[int, ...] = ()) -> Jet:
    """A constant jet (zero derivatives)."""
    v = np.broadcast_to(np.asarray(value, dtype=float), (npoints,) + shape).copy()
    d = np.zeros(v.shape + (nvars,)) if order >= 1 else None
    h = np.zeros(v.shape + (nvars, nvars)) if order >= 2 else None
    return Jet(v, d, h)


def grad(a: Jet) -> Jet:
    """Partial derivatives as a new trailing value axis; lowers the order by one."""
    if a.d is None:
        raise ValueError("cannot differentiate an order-0 jet")
    return Jet(a.d, a.h, None)


def stack(items: list[Jet], axis: int = 0) -> Jet:
    """Stack jets of equal shape along a new value axis."""
    order = min(j.order for j in items)
    ax = 1 + axis
    v = np.stack([j.v for j in items], axis=ax)
    d = np.stack([j.d for j in items], axis=ax) if order >= 1 else None
    h = np.stack([j.h for j in items], axis=ax) if order >= 2 else None
    return Jet(v, d, h)


def where(mask: np.ndarray, a: Jet, b: Jet) -> Jet:
    """Pointwise selection; ``mask`` has shape (N,)."""
    a, b = _align(a, b)
    order = min(a.order, b.order)

    def pick(x, y):
        m = mask.reshape(mask.shape + (1,) * (x.ndim - 1))
        return np.where(m, x, y)

    return Jet(
        pick(a.v, b.v),
        pick(a.d, b.d) if order >= 1 else None,
        pick(a.h, b.h) if order >= 2 else None,
    )


def contract(spec: str, a: Jet, b: Jet) -> Jet:
    """Two-operand ``einsum`` over the value axes with the product rule applied.

    ``spec`` uses lowercase letters only, e.g. ``"kab,a->kb"``.
    """
    ins, out = spec.split("->")
    sa, sb = ins.split(",")
    order = min(a.order, b.order)
    ein = np.einsum
    v = ein(f"Z{sa},Z{sb}->Z{out}", a.v, b.v)
    if order == 0:
        return Jet(v)
    d = ein(f"Z{sa}Y,Z{sb}->Z{out}Y", a.d, b.v) + ein(f"Z{sa},Z{sb}Y->Z{out}Y", a.v, b.d)
    if order == 1:
        return Jet(v, d)
    cross = ein(f"Z{sa}Y,Z{sb}X->Z{out}YX", a.d, b.d)
    h = (
        ein(f"Z{sa}YX,Z{sb}->Z{out}YX", a.h, b.v)
        + ein(f"Z{sa},Z{sb}YX->Z{out}YX", a.v, b.h)
        + cross
        + np.swapaxes(cross, -1, -2)
    )
    return Jet(v, d, h)


def inv(a: Jet) -> Jet:
    """Inverse of a matrix-valued jet of shape (k, k)."""
    ai = np.linalg.inv(a.v)
    if a.order == 0:
        return Jet(ai)

    def ein(spec, *ops):
        return np.einsum(spec, *ops, optimize=True)

    d = -ein("Zij,ZjkY,Zkl->ZilY", ai, a.d, ai)
    if a.order == 1:
        return Jet(ai, d)
    t = ein("Zij,ZjkY,Zkl,ZlnX,Zno->ZioYX", ai, a.d, ai, a.d, ai)
    h = t + np.swapaxes(t, -1, -2) - ein("Zij,ZjkYX,Zkl->ZilYX", ai, a.h, ai)
    return Jet(ai, d, h)


# -- elementwise functions -----------------------------------------------


def _unary(a: Jet, f0, f1, f2) -> Jet:
    if a.order == 0:
        return Jet(f0)
    d = f1[..., None] * a.d
    if a.order == 1:
        return Jet(f0, d)
    h = f1[..., None, None] * a.h + f2[..., None, None] * (a.d[..., :, None] * a.d[..., None, :])
    return Jet(f0, d, h)


def reciprocal(a: Jet) -> Jet:
    r = 1.0 / a.v
    return _unary(a, r, -r * r, 2.0 * r * r * r)


def power(a: Jet, c: float) -> Jet:
    if c == 0.0:
        return lift(1.0, a.npoints, a.nvars or 0, a.order, a.shape)
    x = a.v
    f0 = x**c
    f1 = c * x ** (c - 1.0)
    f2 = c * (c - 1.0) * x ** (c - 2.0) if c != 1.0 else np.zeros_like(x)
    return _unary(a, f0, f1, f2)


def sqrt(a: Jet) -> Jet:
    s = np.sqrt(a.v)
    if a.order == 0:  # norms of zero vectors are fine as values
        return Jet(s)
    return _unary(a, s, 0.5 / s, -0.25 / (s * a.v))


def exp(a: Jet) -> Jet:
    e = np.exp(a.v)
    return _unary(a, e, e, e)


def log(a: Jet) -> Jet:
    r = 1.0 / a.v
    return _unary(a, np.log(a.v), r, -r * r)


def sin(a: Jet) -> Jet:
    s, c = np.sin(a.v), np.cos(a.v)
    return _unary(a, s, c, -s)


def cos(a: Jet) -> Jet:
    s, c = np.sin(a.v), np.cos(a.v)
    return _unary(a, c, -s, -c)


def tan(a: Jet) -> Jet:
    t = np.tan(a.v)
    sec2 = 1.0 + t * t
    return _unary(a, t, sec2, 2.0 * t * sec2)


def sinh(a: Jet) -> Jet:
    s, c = np.sinh(a.v), np.cosh(a.v)
    return _unary(a, s, c, s)


def cosh(a: Jet) -> Jet:
    s, c = np.sinh(a.v), np.cosh(a.v)
    return _unary(a, c, s, c)


def tanh(a: Jet) -> Jet:
    t = np.tanh(a.v)
    s = 1.0 - t * t
    return _unary(a, t, s, -2.0 * t * s)


def atan(a: Jet) -> Jet:
    q = 1.0 / (1.0 + a.v * a.v)
    return _unary(a, np.arctan(a.v), q, -2.0 * a.v * q * q)
