"""Self-test matrix: every scenario passes what it claims and fails its counterexamples."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import checks as C
from .errors import HypothesisWarning
from .expr import evaluate_jets
from .geometry import Local
from .leaf import stability_report
from .scenarios import BUILTIN_NAMES, Scenario, builtin

STABILITY_TOL = 1e-8
INDEX_FORM_TOL = 1e-6
INDEX_FORM_TOL_BUMP = 1e-5


@dataclass(frozen=True)
class SelfTestItem:
    scenario: str
    check: str
    expect_pass: bool
    ok: bool
    summary: str

    def line(self) -> str:
        want = "pass" if self.expect_pass else "fail"
        return f"[{'ok' if self.ok else 'MISMATCH':>8}] {self.scenario:<4} {self.check:<22} expect {want}: {self.summary}"


def _claim_report(scn: Scenario, claim: str, plan: C.SamplingPlan) -> list[tuple[str, bool, str]]:
    """(label, passed, summary) rows for one claimed check."""
    if claim in ("lemma2", "lemma3", "minimal", "integrable_perp", "prop3"):
        fn = {
            "lemma2": C.check_lemma2,
            "lemma3": C.check_lemma3,
            "minimal": C.check_minimal,
            "integrable_perp": C.check_integrable,
            "prop3": C.check_prop3_divergence,
        }[claim]
        r = fn(scn, plan=plan)
        return [(claim, r.passed, f"max residual {r.max_residual:.3e} (tol {r.tolerance:.0e})")]
    rows = []
    if claim == "stability":
        for lp in scn.leaves:
            for f in scn.tagged("variation"):
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", HypothesisWarning)
                    rep = stability_report(scn.chart, scn.foliation, lp, f.variation())
                tol = INDEX_FORM_TOL_BUMP if f.bump else INDEX_FORM_TOL
                rel = rep.residual / max(1.0, abs(rep.I_alpha))
                ok = rep.I_f >= -STABILITY_TOL and rel < tol
                rows.append((f"stability:{lp.name}:{f.name}", ok, f"I_f {rep.I_f:.6g}, I_alpha {rep.I_alpha:.6g}, rel gap {rel:.2e}"))
        return rows
    if claim == "integral":
        for lp in scn.leaves:
            r = C.check_integral_identity(scn, lp, plan=plan)
            rows.append((r.check, r.passed, f"max relative gap {r.max_residual:.3e}"))
        return rows
    raise KeyError(claim)


def _expected_profile(scn: Scenario, key: str, expr, plan: C.SamplingPlan) -> tuple[bool, str]:
    kind, _, name = key.partition(":")
    if kind == "minimal":
        r = C.check_minimal(scn, plan=plan)
    elif kind == "preserving":
        r = C.check_foliation_preserving(scn, name, plan=plan)
    elif kind == "killing":
        r = C.check_killing(scn, name, plan=plan)
    elif kind == "jacobi":
        r = C.check_jacobi_field(scn, name, plan=plan)
    else:
        raise KeyError(f"no residual profile for {key!r}")
    loc = Local(scn.chart, r.points, order=0)
    want = np.broadcast_to(evaluate_jets(expr, loc.env, loc.n, loc.m, 0).v, r.residuals.shape)
    gap = float(np.max(np.abs(r.residuals - want)))
    tol = 1e-8 if kind == "minimal" else 1e-6
    return gap < tol, f"residual matches {expr} within {gap:.2e}"


def run_scenario(scn: Scenario, plan: C.SamplingPlan = C.SamplingPlan()) -> list[SelfTestItem]:
    items: list[SelfTestItem] = []

    def add(label, expect, passed, summary):
        items.append(SelfTestItem(scn.name, label, expect, passed == expect, summary))

    for claim in scn.claims:
        for label, passed, summary in _claim_report(scn, claim, plan):
            add(label, True, passed, summary)
    for claim in scn.counterexamples:
        for label, passed, summary in _claim_report(scn, claim, plan):
            add(label, False, passed, summary)
    hyp = C.hypotheses(scn, plan)
    for f in scn.fields:
        if "killing" in f.tags:
            r = C.check_killing(scn, f.name, plan=plan)
            add(r.check, True, r.passed, f"max residual {r.max_residual:.3e}")
        if "preserving" in f.tags or "counterexample" in f.tags:
            r = C.check_foliation_preserving(scn, f.name, plan=plan)
            add(r.check, "preserving" in f.tags, r.passed, f"max residual {r.max_residual:.3e}")
        if "preserving" in f.tags and hyp.lemma:
            r = C.check_jacobi_field(scn, f.name, plan=plan)
            add(r.check, True, r.passed, f"max |J(X^⊥)| {r.max_residual:.3e}")
        if f.anchor is not None:
            r = C.check_prop4_transport(scn, f.name, plan=plan)
            add(r.check, True, r.passed, f"max residual {r.max_residual:.3e}")
    for key, expr in scn.expect:
        ok, summary = _expected_profile(scn, key, expr, plan)
        items.append(SelfTestItem(scn.name, f"expect:{key}", True, ok, summary))
    return items


def run(names=BUILTIN_NAMES, plan: C.SamplingPlan = C.SamplingPlan()) -> list[SelfTestItem]:
    out = []
    for name in names:
        out.extend(run_scenario(builtin(name), plan))
    return out
