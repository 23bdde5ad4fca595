import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from foliation_lab.errors import HypothesisWarning, MisuseError, RankError
from foliation_lab.expr import evaluate
from foliation_lab.foliation import FrameContext
from foliation_lab.geometry import VectorFieldSpec
from foliation_lab.leaf import (
    LeafPatch,
    VariationField,
    check_leaf,
    integrate_leaf,
    leaf_grid,
    leaf_volume,
    second_variation_direct,
    stability_report,
    tangency_residual,
)
from foliation_lab.operators import div_leaf_j
from foliation_lab.scenarios import builtin

TWO_PI = 2 * math.pi
S1, S3, S4, S5, S6 = (builtin(n) for n in ("S1", "S3", "S4", "S5", "S6"))
L1 = S1.leaf("L0")
ZERO = VectorFieldSpec.of("0", "0", "0")


def test_flat_torus_leaf_area():
    assert leaf_volume(S1.chart, L1) == pytest.approx(4 * math.pi**2, rel=1e-14)


def test_round_sphere_area():
    leaf = S6.leaf("R15").with_resolution(128)
    assert leaf_volume(S6.chart, leaf) == pytest.approx(4 * math.pi * 1.5**2, rel=1e-6)


def test_hopf_fiber_length():
    assert leaf_volume(S4.chart, S4.leaf("fiber")) == pytest.approx(TWO_PI, rel=1e-14)


def test_resolution_doubling_converges():
    leaf = LeafPatch.build(("u", "v"), ("u", "v", "0.3*sin(u)*cos(v)"), [(0, TWO_PI)] * 2, resolution=32)
    a = leaf_volume(S1.chart, leaf)
    b = leaf_volume(S1.chart, leaf.with_resolution(64))
    assert abs(a - b) < 1e-10


def test_integrate_constant_and_cos_squared():
    assert integrate_leaf(S1.chart, L1, "1") == pytest.approx(leaf_volume(S1.chart, L1), rel=1e-15)
    assert integrate_leaf(S1.chart, L1, "cos(x)^2") == pytest.approx(2 * math.pi**2, rel=1e-14)
    assert integrate_leaf(S1.chart, L1, lambda P: np.cos(P[:, 0]) ** 2) == pytest.approx(2 * math.pi**2, rel=1e-14)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=4, max_size=4))
def test_divergence_theorem_on_closed_leaf(c):
    W = VectorFieldSpec.of(f"{c[0]!r}*sin(x + 2*y) + {c[1]!r}*cos(y)", f"{c[2]!r}*cos(3*x) + {c[3]!r}*sin(x)*sin(y)", "0")
    for scn in (S1, S5):
        leaf = scn.leaf("L0")

        def div(P, scn=scn):
            ctx = FrameContext(scn.chart, scn.foliation, P, order=1)
            return div_leaf_j(ctx, ctx.field(W)).v

        assert abs(integrate_leaf(scn.chart, leaf, div)) < 1e-8


def test_stability_closed_form_on_flat_torus():
    rep = stability_report(S1.chart, S1.foliation, L1, S1.field("V1").variation())
    assert rep.I_f == pytest.approx(2 * math.pi**2, rel=1e-12)
    assert rep.I_alpha == pytest.approx(2 * math.pi**2, rel=1e-12)
    assert rep.stable and rep.warnings == ()


def test_stability_on_warped_leaf():
    rep = stability_report(S5.chart, S5.foliation, S5.leaf("L0"), S5.field("V1").variation())
    grad_sq = integrate_leaf(S5.chart, S5.leaf("L0"), "0.09*cos(x)^2*cos(y)^2 + 0.09*sin(x)^2*sin(y)^2")
    assert rep.I_alpha == pytest.approx(grad_sq, rel=1e-12)
    assert rep.residual < 1e-12


def test_zero_variation():
    rep = stability_report(S1.chart, S1.foliation, L1, ZERO)
    assert (rep.I_f, rep.I_alpha, rep.residual) == (0.0, 0.0, 0.0)
    assert second_variation_direct(S1.chart, S1.foliation, L1, ZERO).d2vol == 0.0


def test_hypothesis_warning_off_minimal():
    V = VectorFieldSpec.of("1", "0", "0")
    with pytest.warns(HypothesisWarning, match="not minimal"):
        rep = stability_report(S6.chart, S6.foliation, S6.leaf("R15").with_resolution(16), V)
    assert rep.warnings


def test_bump_vanishes_at_the_box_boundary():
    spec = VariationField(VectorFieldSpec.of("0", "0", "1"), ("x", "y")).spec(S3.chart)
    near = evaluate(spec.components[2], {"x": 1 - 1e-3, "y": 0.0, "z": 0.0})
    assert 0 <= near < 1e-12
    assert evaluate(spec.components[2], {"x": 0.0, "y": 0.0, "z": 0.0}) == 1.0


def test_bump_needs_bounded_axis():
    with pytest.raises(MisuseError):
        VariationField(VectorFieldSpec.of("0", "0", "1"), ("x",)).spec(S1.chart)


def test_bump_supported_stability_on_open_patch():
    for f in S3.tagged("variation"):
        rep = stability_report(S3.chart, S3.foliation, S3.leaf("L0"), f.variation())
        assert rep.I_f >= -1e-8
        assert rep.residual / max(1.0, rep.I_alpha) < 1e-5


def test_second_variation_flat_torus():
    sv = second_variation_direct(S1.chart, S1.foliation, L1, S1.field("V1").variation(), 1e-3)
    assert sv.rel_error < 1e-2
    assert sv.I_f == pytest.approx(2 * math.pi**2, rel=1e-12)


def test_second_variation_error_quarters():
    V = S1.field("V1").variation()
    e1 = abs(second_variation_direct(S1.chart, S1.foliation, L1, V, 1e-3).d2vol - 2 * math.pi**2)
    e2 = abs(second_variation_direct(S1.chart, S1.foliation, L1, V, 5e-4).d2vol - 2 * math.pi**2)
    assert 3.5 < e1 / e2 < 4.5


def test_grid_weights_sum_to_box_volume():
    _, w = leaf_grid(S3.leaf("L0"))
    assert w.sum() == pytest.approx(4.0, rel=1e-14)
    _, w = leaf_grid(S6.leaf("R15"))
    assert w.sum() == pytest.approx(math.pi * TWO_PI, rel=1e-14)


def test_leaf_validation():
    assert tangency_residual(S1.chart, S1.foliation, L1) == 0.0
    tilted = LeafPatch.build(("u", "v"), ("u", "v", "0.1*u"), [(0, TWO_PI)] * 2, resolution=8)
    with pytest.raises(MisuseError, match="not tangent"):
        check_leaf(S1.chart, S1.foliation, tilted)
    degenerate = LeafPatch.build(("u", "v"), ("u", "u", "0"), [(0, TWO_PI)] * 2, resolution=8)
    with pytest.raises(RankError):
        leaf_volume(S1.chart, degenerate)
    with pytest.raises(MisuseError):
        check_leaf(S1.chart, S1.foliation, S4.leaf("fiber"))
