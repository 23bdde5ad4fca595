"""The eleven acceptance criteria, each at its stated tolerance."""

import math
import time

import numpy as np

from foliation_lab import checks as C
from foliation_lab.foliation import FrameContext, frobenius_residual
from foliation_lab.geometry import VectorFieldSpec
from foliation_lab.leaf import second_variation_direct, stability_report
from foliation_lab.operators import alpha_pairing_j, div_leaf_j, f_vw_j, lemma3_sides_j
from foliation_lab.scenarios import builtin

from exprgen import derivative_gap, oracle_reliable, random_source, well_behaved
from grammar_golden import DATA, render_all

PLAN = C.SamplingPlan(samples=200, seed=42, pairs=10)
LEMMA_SCENARIOS = ("S1", "S3", "S5", "S5b")


def _worst(reports) -> str:
    return ", ".join(f"{k} {r.max_residual:.1e}" for k, r in reports.items())


def test_criterion_01_lemma2(acceptance):
    t0 = time.perf_counter()
    reports = {n: C.check_lemma2(builtin(n), plan=PLAN) for n in LEMMA_SCENARIOS}
    elapsed = time.perf_counter() - t0
    ok = all(r.passed and not r.informational for r in reports.values())
    ok &= max(r.max_residual for r in reports.values()) < 1e-6 and elapsed < 30
    assert acceptance.record(1, "check_lemma2 residual < 1e-6 in under 30 s", ok, f"{_worst(reports)}; {elapsed:.1f} s")


def test_criterion_02_lemma3(acceptance):
    reports = {n: C.check_lemma3(builtin(n), plan=PLAN) for n in LEMMA_SCENARIOS}
    s1 = builtin("S1")
    ctx = FrameContext(s1.chart, s1.foliation, PLAN.points(s1.chart))
    V = ctx.field(VectorFieldSpec.of("0", "0", "sin(x)"))
    lhs, rhs = lemma3_sides_j(ctx, V, V)
    target = np.sin(ctx.points[:, 0]) ** 2
    closed = max(np.max(np.abs(lhs.v - target)), np.max(np.abs(rhs.v - target)))
    ok = max(r.max_residual for r in reports.values()) < 1e-6 and closed < 1e-9
    ok &= all(not r.informational for r in reports.values())
    detail = f"{_worst(reports)}; S1 sides vs sin^2 x {closed:.1e}"
    assert acceptance.record(2, "check_lemma3 residual < 1e-6, closed form to 1e-9", ok, detail)


def test_criterion_03_warped_closed_forms(acceptance):
    s5 = builtin("S5")
    ctx = FrameContext(s5.chart, s5.foliation, PLAN.points(s5.chart))
    x, y = ctx.points[:, 0], ctx.points[:, 1]
    # f = 0.3 sin x cos y
    lap = -0.6 * np.sin(x) * np.cos(y)
    grad2 = (0.3 * np.cos(x) * np.cos(y)) ** 2 + (0.3 * np.sin(x) * np.sin(y)) ** 2
    V = ctx.field(VectorFieldSpec.of("0", "0", "exp(-(0.3*sin(x)*cos(y)))"))
    e1 = np.max(np.abs(f_vw_j(ctx, V, V).v - (lap + grad2)))
    e2 = np.max(np.abs(alpha_pairing_j(ctx, V, V).v - grad2))
    e3 = np.max(np.abs(div_leaf_j(ctx, ctx.loc.covd(V, V)).v + lap))
    ok = e1 < 1e-7 and e2 < 1e-8 and e3 < 1e-7
    detail = f"f_VV {e1:.1e}, |alpha_V|^2 {e2:.1e}, div_L {e3:.1e} at {len(x)} points"
    assert acceptance.record(3, "S5 closed-form curvature ledger", ok, detail)


def test_criterion_04_stability(acceptance):
    rows, ok = [], True
    for name in ("S1", "S3", "S5"):
        scn = builtin(name)
        for lp in scn.leaves:
            for f in scn.tagged("variation"):
                rep = stability_report(scn.chart, scn.foliation, lp.with_resolution(64), f.variation())
                gap = rep.residual / max(1.0, rep.I_alpha)
                ok &= rep.I_f >= -1e-8 and gap < 1e-6
                rows.append(f"{name}/{f.name} I_f={rep.I_f:.6g} gap {gap:.1e}")
                if name == "S1":
                    closed = abs(rep.I_f - 2 * math.pi**2) / (2 * math.pi**2)
                    ok &= closed < 1e-6
                    rows.append(f"S1 vs 2pi^2 {closed:.1e}")
    assert acceptance.record(4, "leaf stability, I_f = I_alpha >= 0", ok, "; ".join(rows))


def test_criterion_05_second_variation(acceptance):
    rows, ok = [], True
    for name in ("S1", "S5"):
        scn = builtin(name)
        lp, V = scn.leaf("L0"), scn.field("V1").variation()
        a = second_variation_direct(scn.chart, scn.foliation, lp, V, 1e-3)
        b = second_variation_direct(scn.chart, scn.foliation, lp, V, 5e-4)
        rel = abs(a.d2vol - a.I_f) / max(1.0, a.I_f)
        ratio = abs(a.d2vol - a.I_f) / abs(b.d2vol - b.I_f)
        ok &= rel < 0.01 and ratio >= 3.5
        rows.append(f"{name} rel {rel:.1e}, halving ratio {ratio:.2f}")
    assert acceptance.record(5, "direct second variation of volume matches I_f", ok, "; ".join(rows))


def test_criterion_06_hopf(acceptance):
    s4 = builtin("S4")
    box = ((0.3, math.pi / 2 - 0.3), (0.0, 2 * math.pi), (0.0, 2 * math.pi))
    plan = C.SamplingPlan(samples=100, seed=42, box=box)
    # D^⊥ of the Hopf fibers is spanned by ∂η and sin²η ∂a − cos²η ∂b
    perp = [VectorFieldSpec.of("1", "0", "0"), VectorFieldSpec.of("0", "sin(eta)^2", "-cos(eta)^2")]
    fro = np.min(frobenius_residual(s4.chart, perp, plan.points(s4.chart)))
    k1 = C.check_killing(s4, "K1", plan)
    p1 = C.check_foliation_preserving(s4, "K1", plan)
    k0 = C.check_killing(s4, "K0", plan)
    p0 = C.check_foliation_preserving(s4, "K0", plan)
    off_two = float(np.max(np.abs(p1.residuals - 2.0)))
    ok = fro >= 0.5 and k1.passed and k1.max_residual < 1e-6 and not p1.passed and off_two < 1e-6
    ok &= k0.passed and p0.passed
    detail = (
        f"min Frobenius {fro:.3f}, K1 Killing {k1.max_residual:.1e}, "
        f"K1 preserving within {off_two:.1e} of 2, K0 {k0.status}/{p0.status}"
    )
    assert acceptance.record(6, "Hopf counterexample", ok, detail)


def test_criterion_07_preserving_fields_are_jacobi(acceptance):
    rows, ok = [], True
    for name in ("S1", "S5b"):
        scn = builtin(name)
        for f in scn.tagged("preserving"):
            r = C.check_jacobi_field(scn, f.name, PLAN)
            ok &= r.max_residual < 1e-6
            rows.append(f"{name}/{f.name} |J| {r.max_residual:.1e}")
        for lp in scn.leaves:
            r = C.check_integral_identity(scn, lp, fields=5, plan=PLAN)
            ok &= r.max_residual < 1e-6
            rows.append(f"{name}/{lp.name} integral gap {r.max_residual:.1e}")
    assert acceptance.record(7, "preserving fields are Jacobi; integral identity", ok, "; ".join(rows))


def test_criterion_08_divergence_split(acceptance):
    s2 = C.check_prop3_divergence(builtin("S2"), plan=PLAN)
    s6 = C.check_prop3_divergence(builtin("S6"), plan=PLAN)
    corr = s6.detail["max_correction_normal"]
    ok = s2.max_residual < 1e-6 and s6.max_residual < 1e-6 and corr > 0.1
    detail = f"S2 {s2.max_residual:.1e}; S6 {s6.max_residual:.1e} with correction up to {corr:.3g}"
    assert acceptance.record(8, "divergence decomposition", ok, detail)


def test_criterion_09_transport(acceptance):
    r = C.check_prop4_transport(builtin("S1"), "X2", plan=PLAN, length=10.0)
    size, drift = r.detail["max_normal_part"], r.detail["speed_drift"]
    ok = size < 1e-8 and drift < 1e-6
    assert acceptance.record(9, "vanishing normal part is transported", ok, f"max |X^⊥| {size:.1e}, speed drift {drift:.1e}")


def test_criterion_10_negative_controls(acceptance):
    s6 = builtin("S6")
    m = C.check_minimal(s6, plan=PLAN)
    off = float(np.max(np.abs(m.residuals - 2.0 / m.points[:, 0])))
    k = C.check_killing(builtin("S1"), VectorFieldSpec.of("sin(x)", "0", "0"), PLAN)
    ok = not m.passed and off < 1e-8 and not k.passed and abs(k.max_residual - 2.0) < 1e-3
    detail = f"S6 |H| within {off:.1e} of 2/r; sin(x)∂x Killing residual {k.max_residual:.6f}"
    assert acceptance.record(10, "negative controls fail as predicted", ok, detail)


def test_criterion_11_expression_derivatives(acceptance):
    rng = np.random.default_rng(2024)
    kept = tried = 0
    worst = 0.0
    while kept < 500:
        src = random_source(rng)
        for p in rng.uniform(-1.5, 1.5, size=(5, 3)):
            if kept == 500 or not well_behaved(src, p):
                continue
            tried += 1
            if not oracle_reliable(src, p):
                continue
            kept += 1
            worst = max(worst, *derivative_gap(src, p))
    golden = render_all() == (DATA / "grammar_golden.txt").read_text()
    ok = worst < 1e-5 and golden
    detail = f"{kept} cases ({tried} tried), worst relative gap {worst:.1e}; golden file {'identical' if golden else 'differs'}"
    assert acceptance.record(11, "expression derivatives and grammar golden", ok, detail)
