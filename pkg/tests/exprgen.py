"""Random expressions and a finite-difference oracle for derivative tests."""

from __future__ import annotations

import numpy as np

from foliation_lab.errors import DomainError
from foliation_lab.expr import evaluate, evaluate_jet2, parse

VARS = ("x", "y", "z")
UNARY = ("sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh", "atan")


def random_source(rng: np.random.Generator, depth: int = 5) -> str:
    if depth == 0 or rng.random() < 0.2:
        if rng.random() < 0.65:
            return str(rng.choice(VARS))
        return repr(round(float(rng.uniform(-2, 2)), 3)) if rng.random() < 0.9 else "pi"
    r = rng.random()
    if r < 0.35:
        fn = str(rng.choice(UNARY))
        inner = random_source(rng, depth - 1)
        if fn in ("exp", "sinh", "cosh"):
            inner = f"0.5*sin({inner})"  # keep magnitudes tame
        return f"{fn}({inner})"
    if r < 0.45:
        return f"-({random_source(rng, depth - 1)})"
    op = str(rng.choice(["+", "-", "*", "/", "^"]))
    a, b = random_source(rng, depth - 1), random_source(rng, depth - 1)
    if op == "^":
        return f"({a})^{int(rng.integers(0, 4))}"
    return f"({a}){op}({b})"


def fd_derivatives(src: str, p: np.ndarray, h: float = 1e-3):
    """Gradient by a 4th-order stencil, Hessian by Richardson-extrapolated central differences."""
    e = parse(src)
    f = lambda q: evaluate(e, dict(zip(VARS, q)))
    m = len(p)
    eye = np.eye(m)
    grad = np.empty(m)
    for i in range(m):
        u = h * eye[i]
        grad[i] = (-f(p + 2 * u) + 8 * f(p + u) - 8 * f(p - u) + f(p - 2 * u)) / (12 * h)

    def mixed(hh):
        H = np.empty((m, m))
        f0 = f(p)
        for i in range(m):
            ui = hh * eye[i]
            H[i, i] = (f(p + ui) - 2 * f0 + f(p - ui)) / hh**2
            for j in range(i + 1, m):
                uj = hh * eye[j]
                H[i, j] = H[j, i] = (f(p + ui + uj) - f(p + ui - uj) - f(p - ui + uj) + f(p - ui - uj)) / (4 * hh**2)
        return H

    hess = (4 * mixed(h) - mixed(2 * h)) / 3
    return f(p), grad, hess


def oracle_reliable(src: str, p: np.ndarray, rtol: float = 1e-7) -> bool:
    """The finite-difference oracle agrees with itself when the step halves."""
    _, g1, h1 = fd_derivatives(src, p, 1e-3)
    _, g2, h2 = fd_derivatives(src, p, 5e-4)
    sg = max(1.0, np.max(np.abs(g1)))
    sh = max(1.0, np.max(np.abs(h1)))
    return np.max(np.abs(g1 - g2)) < rtol * sg and np.max(np.abs(h1 - h2)) < 1e2 * rtol * sh


def well_behaved(src: str, p: np.ndarray, radius: float = 1e-2, bound: float = 1e3) -> bool:
    """Skip points near singularities: the expression must be finite and moderate on a small box."""
    e = parse(src)
    rng = np.random.default_rng(0)
    for q in [p] + [p + radius * rng.uniform(-1, 1, 3) for _ in range(8)]:
        try:
            v = evaluate(e, dict(zip(VARS, q)))
        except (DomainError, OverflowError, ZeroDivisionError):
            return False
        if not np.isfinite(v) or abs(v) > bound:
            return False
    return True


def derivative_gap(src: str, p: np.ndarray) -> tuple[float, float]:
    """Relative gradient and Hessian gaps between the jet evaluator and the oracle."""
    d = evaluate_jet2(src, dict(zip(VARS, p)), VARS)
    _, g, H = fd_derivatives(src, p)
    scale_g = max(1.0, np.max(np.abs(g)))
    scale_h = max(1.0, np.max(np.abs(H)))
    return np.max(np.abs(d.grad - g)) / scale_g, np.max(np.abs(d.hess - H)) / scale_h
