import json
import math

import numpy as np
import pytest

from foliation_lab import checks as C
from foliation_lab.errors import MisuseError
from foliation_lab.foliation import FrameContext
from foliation_lab.geometry import VectorFieldSpec
from foliation_lab.operators import alpha_frame_j
from foliation_lab.scenarios import builtin

S1, S2, S4, S5b, S6 = (builtin(n) for n in ("S1", "S2", "S4", "S5b", "S6"))
SMALL = C.SamplingPlan(samples=60, pairs=3)
SINX_Z = VectorFieldSpec.of("0", "0", "sin(x)", name="sinx")


def test_halton_plan_is_deterministic_and_inside():
    a = C.SamplingPlan(samples=50, seed=3).points(S4.chart)
    b = C.SamplingPlan(samples=50, seed=3).points(S4.chart)
    assert np.array_equal(a, b)
    assert np.all(S4.chart.inside(a))
    assert not np.array_equal(a, C.SamplingPlan(samples=50, seed=4).points(S4.chart))


def test_box_override():
    box = ((0.3, math.pi / 2 - 0.3), (0.0, 1.0), (0.0, 1.0))
    P = C.SamplingPlan(samples=40, box=box).points(S4.chart)
    assert P[:, 0].min() > 0.3 and P[:, 0].max() < math.pi / 2 - 0.3
    assert P[:, 1].max() < 1.0


def test_random_fields_are_seeded():
    rng = lambda: np.random.default_rng(5)
    assert C.random_field(S1.chart, rng()) == C.random_field(S1.chart, rng())


def test_lemma_closed_forms_on_flat_torus():
    r2 = C.check_lemma2(S1, SINX_Z, SINX_Z, SMALL)
    r3 = C.check_lemma3(S1, SINX_Z, SINX_Z, SMALL)
    assert r2.passed and r2.max_residual < 1e-9
    assert r3.passed and r3.max_residual < 1e-9
    r = C.check_lemma3(S1, VectorFieldSpec.of("0", "0", "1"), C.random_field(S1.chart, np.random.default_rng(1)), SMALL)
    assert r.max_residual == 0.0


def test_lemma_on_warped_chart():
    V = builtin("S5").field("V1").spec
    assert C.check_lemma2(builtin("S5"), V, V, SMALL).max_residual < 1e-6


def test_lemma_is_informational_off_hypotheses():
    r = C.check_lemma2(S4, plan=SMALL)
    assert r.gated and r.informational
    assert r.status == C.VIOLATED
    assert r.to_dict()["note"] == C.VIOLATED
    assert not r.hypotheses.integrable_perp and r.hypotheses.minimal


def test_killing_examples():
    assert C.check_killing(S1, "X1", SMALL).max_residual == 0.0
    bad = C.check_killing(S1, VectorFieldSpec.of("sin(x)", "0", "0"), C.SamplingPlan())
    assert not bad.passed
    assert bad.max_residual == pytest.approx(2.0, abs=1e-3)
    np.testing.assert_allclose(bad.residuals, 2 * np.abs(np.cos(bad.points[:, 0])), atol=1e-14)
    assert C.check_killing(S4, VectorFieldSpec.of("0", "1", "0"), SMALL).max_residual < 1e-8


def test_preserving_counterexample_is_constant_two():
    r = C.check_foliation_preserving(S4, "K1", SMALL)
    assert not r.passed
    np.testing.assert_allclose(r.residuals, 2.0, atol=1e-12)


def test_preserving_matches_alpha_when_involutive():
    rng = np.random.default_rng(2)
    X = C.random_field(S5b.chart, rng)
    P = SMALL.points(S5b.chart)
    ctx = FrameContext(S5b.chart, S5b.foliation, P)
    pres = C.preserving_residuals(ctx, X)
    alpha = np.max([ctx.loc.norm(a.truncate(0)).v for a in alpha_frame_j(ctx, ctx.field(X))], axis=0)
    # the spanning fields are already orthonormal here, so both maxima agree pointwise
    np.testing.assert_allclose(pres, alpha, atol=1e-8)


def test_jacobi_field_checks():
    assert C.check_jacobi_field(S1, VectorFieldSpec.of("0", "0", "1"), SMALL).max_residual == 0.0
    assert C.check_jacobi_field(S1, "X1", SMALL).max_residual == 0.0
    assert C.check_jacobi_field(S5b, "Y", SMALL).max_residual < 1e-6


def test_prop3_on_both_scenarios():
    r2 = C.check_prop3_divergence(S2, plan=SMALL)
    assert r2.passed and r2.max_residual < 1e-8 and r2.note == ""
    r6 = C.check_prop3_divergence(S6, plan=SMALL)
    assert r6.passed
    assert r6.detail["max_correction_normal"] > 0.1


def test_prop3_zero_field():
    r = C.check_prop3_divergence(S2, VectorFieldSpec.of("0", "0"), plan=SMALL)
    assert r.max_residual == 0.0


def test_prop4_examples():
    r = C.check_prop4_transport(S1, "X2", plan=SMALL)
    assert r.passed and r.detail["max_normal_part"] < 1e-9 and r.detail["speed_drift"] < 1e-6
    assert C.check_prop4_transport(S1, "X1", p=(1.0, 2.0, 3.0), plan=SMALL).max_residual == 0.0
    with pytest.raises(MisuseError):
        C.check_prop4_transport(S1, "X2", p=(0.0, 0.0, math.pi / 2), plan=SMALL)
    off = C.check_prop4_transport(S1, "X2", p=(0.0, 0.0, math.pi / 2), plan=SMALL, require_zero=False)
    assert off.detail["max_source"] == 0.0
    assert off.detail["min_normal_part"] == pytest.approx(1.0, abs=1e-12)
    assert off.detail["max_normal_part"] == pytest.approx(1.0, abs=1e-12)


def test_prop4_needs_a_start_point():
    with pytest.raises(MisuseError):
        C.check_prop4_transport(S1, "X1", plan=SMALL)


def test_integral_identity():
    r = C.check_integral_identity(S1, "L0", fields=3, plan=SMALL)
    assert r.passed and r.samples == 3


def test_report_serialization_schema():
    r = C.check_minimal(S6, plan=SMALL)
    d = r.to_dict(timestamp=False)
    assert list(d) == [
        "check",
        "scenario",
        "hypotheses",
        "samples",
        "seed",
        "max_residual",
        "tolerance",
        "pass",
        "worst_points",
        "wall_ms",
        "note",
    ]
    assert d["wall_ms"] is None and d["pass"] is False
    assert len(d["worst_points"]) == C.WORST_POINTS
    assert d["worst_points"][0]["residual"] == d["max_residual"]
    json.dumps(d)


def test_pass_iff_residual_within_tolerance():
    r = C.check_minimal(S6, plan=SMALL, tol=2.5)
    assert r.passed == (r.max_residual <= r.tolerance)


def test_reports_are_reproducible():
    a = C.report_sequence([C.check_lemma3(S5b, plan=SMALL)], timestamp=False)
    b = C.report_sequence([C.check_lemma3(S5b, plan=SMALL)], timestamp=False)
    assert json.dumps(a) == json.dumps(b)


def test_preserving_killing_fields_on_cor_scenarios():
    for scn in (S1, S2, S5b):
        for f in scn.tagged("killing"):
            assert C.check_killing(scn, f.name, SMALL).passed
            assert C.check_foliation_preserving(scn, f.name, SMALL).max_residual < 1e-6
