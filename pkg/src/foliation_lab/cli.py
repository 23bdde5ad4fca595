"""Command-line front end.

    foliation-lab list
    foliation-lab describe S1
    foliation-lab check S1 --all --json out.json
    foliation-lab check S4 --preserving K1
    foliation-lab stability S1 --leaf L0 --field V1
    foliation-lab variation S5 --leaf L0 --field V1 --t-step 5e-4
    foliation-lab selftest

Exit status is 0 when every requested check passes, 1 when one fails and 2
for usage errors.  Checks run outside their hypotheses are informational
and only count as failures with ``--strict``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

from . import checks as C
from .errors import FoliationLabError, HypothesisWarning, MisuseError, ScenarioError
from .leaf import second_variation_direct, stability_report
from .scenarios import BUILTIN_NAMES, Scenario, builtin, resolve

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    requests: tuple[tuple[str, str | None], ...] = ()
    samples: int = 200
    seed: int = 42
    pairs: int = 10
    tol: float | None = None
    grid: int = 64
    t_step: float = 1e-3
    output: str | None = None
    fmt: str = "text"
    strict: bool = False
    timestamp: bool = True
    leaf: str | None = None
    field: str | None = None

    @property
    def plan(self) -> C.SamplingPlan:
        return C.SamplingPlan(samples=self.samples, seed=self.seed, pairs=self.pairs)


class _Request(argparse.Action):
    """Collect check selectors in command-line order."""

    def __call__(self, parser, namespace, values, option_string=None):
        reqs = list(getattr(namespace, "requests", None) or [])
        reqs.append((self.const, values if isinstance(values, str) else None))
        namespace.requests = reqs


def _threads() -> int:
    raw = os.environ.get("FOLIATION_LAB_THREADS")
    if raw is None:
        return min(4, os.cpu_count() or 1)
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="foliation-lab", description="Numerical checks for Riemannian foliations.")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="list built-in scenarios")
    d = sub.add_parser("describe", help="show a scenario")
    d.add_argument("scenario")

    def common(sp):
        sp.add_argument("--samples", type=int, default=200)
        sp.add_argument("--seed", type=int, default=42)
        sp.add_argument("--pairs", type=int, default=10, help="random field pairs for lemma checks")
        sp.add_argument("--tol", type=float, default=None, help="override every check tolerance")
        sp.add_argument("--json", dest="output", metavar="PATH", help="also write JSON to PATH")
        sp.add_argument("--format", dest="fmt", choices=("text", "json"), default="text")
        sp.add_argument("--no-timestamp", dest="timestamp", action="store_false")

    c = sub.add_parser("check", help="run identity checks on a scenario")
    c.add_argument("scenario", help="builtin name or path to a .scn file")
    for flag in ("lemma2", "lemma3", "prop3", "minimal", "integrable-perp"):
        c.add_argument(f"--{flag}", action=_Request, nargs=0, const=flag.replace("-", "_"))
    for flag in ("killing", "preserving", "jacobi", "prop4"):
        c.add_argument(f"--{flag}", action=_Request, const=flag, metavar="FIELD")
    c.add_argument("--all", action=_Request, nargs=0, const="all", help="every check the scenario claims")
    c.add_argument("--strict", action="store_true", help="hypothesis-violated checks count as failures")
    common(c)

    for name, helptext in (("stability", "index-form integrals over a leaf"), ("variation", "direct second variation of leaf volume")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("scenario")
        s.add_argument("--leaf", required=True)
        s.add_argument("--field", required=True)
        s.add_argument("--grid", type=int, default=64)
        if name == "variation":
            s.add_argument("--t-step", type=float, default=1e-3)
        common(s)

    st = sub.add_parser("selftest", help="run the built-in scenario self-test matrix")
    st.add_argument("scenarios", nargs="*", help="subset of builtin names")
    st.add_argument("--samples", type=int, default=200)
    st.add_argument("--seed", type=int, default=42)
    return p


def _expand_all(scn: Scenario, plan: C.SamplingPlan) -> list[tuple[str, str | None]]:
    out: list[tuple[str, str | None]] = []
    for claim in scn.claims:
        if claim in ("lemma2", "lemma3", "prop3", "minimal", "integrable_perp"):
            out.append((claim, None))
    lemma_ok = C.hypotheses(scn, plan).lemma
    for f in scn.fields:
        if "counterexample" in f.tags:
            if "killing" in f.tags:
                out.append(("killing", f.name))
            continue
        if "killing" in f.tags:
            out.append(("killing", f.name))
        if "preserving" in f.tags:
            out.append(("preserving", f.name))
            if lemma_ok:
                out.append(("jacobi", f.name))
        if f.anchor is not None:
            out.append(("prop4", f.name))
    return out


def _run_one(scn: Scenario, kind: str, arg: str | None, cfg: RunConfig) -> C.CheckReport:
    plan = cfg.plan
    if kind in ("killing", "preserving", "jacobi", "prop4"):
        scn.field(arg)  # raise KeyError early for unknown names
    fn = {
        "lemma2": lambda: C.check_lemma2(scn, plan=plan, tol=cfg.tol),
        "lemma3": lambda: C.check_lemma3(scn, plan=plan, tol=cfg.tol),
        "prop3": lambda: C.check_prop3_divergence(scn, plan=plan, tol=cfg.tol),
        "minimal": lambda: C.check_minimal(scn, plan=plan, tol=cfg.tol),
        "integrable_perp": lambda: C.check_integrable(scn, plan=plan, tol=cfg.tol),
        "killing": lambda: C.check_killing(scn, arg, plan=plan, tol=cfg.tol),
        "preserving": lambda: C.check_foliation_preserving(scn, arg, plan=plan, tol=cfg.tol),
        "jacobi": lambda: C.check_jacobi_field(scn, arg, plan=plan, tol=cfg.tol),
        "prop4": lambda: C.check_prop4_transport(scn, arg, plan=plan, tol=cfg.tol),
    }[kind]
    return fn()


def _emit(payload, text: str, cfg: RunConfig, out) -> None:
    blob = json.dumps(payload, indent=2, sort_keys=False)
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8") as fh:
            fh.write(blob + "\n")
    print(blob if cfg.fmt == "json" else text, file=out)


def run_check(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    scn = resolve(cfg.scenario)
    requests: list[tuple[str, str | None]] = []
    for kind, arg in cfg.requests:
        requests.extend(_expand_all(scn, cfg.plan) if kind == "all" else [(kind, arg)])
    if not requests:
        raise MisuseError("no checks selected (try --all)")
    seen, unique = set(), []
    for r in requests:
        if r not in seen:
            seen.add(r)
            unique.append(r)
    for kind, arg in unique:
        if arg is not None:
            scn.field(arg)
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        reports = list(pool.map(lambda r: _run_one(scn, r[0], r[1], cfg), unique))
    failed = [r for r in reports if not r.passed and (not r.informational or cfg.strict)]
    info = [r for r in reports if r.informational and r not in failed]
    lines = [r.to_text() for r in reports]
    npass = len(reports) - len(failed) - len(info)
    lines.append(f"{len(reports)} checks: {npass} passed, {len(failed)} failed, {len(info)} informational")
    _emit(C.report_sequence(reports, cfg.timestamp), "\n".join(lines), cfg, out)
    return EXIT_FAIL if failed else EXIT_OK


def run_stability(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    scn = resolve(cfg.scenario)
    leaf = scn.leaf(cfg.leaf).with_resolution(cfg.grid)
    f = scn.field(cfg.field)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", HypothesisWarning)
        rep = stability_report(scn.chart, scn.foliation, leaf, f.variation())
    rel = rep.residual / max(1.0, abs(rep.I_alpha))
    payload = {"scenario": scn.name, "leaf": leaf.name, "field": f.name, "grid": cfg.grid, **asdict(rep), "relative_residual": rel}
    payload["warnings"] = list(rep.warnings)
    text = (
        f"stability {scn.name} leaf={leaf.name} field={f.name} grid={cfg.grid}\n"
        f"  I_f     = {rep.I_f:.12g}\n  I_alpha = {rep.I_alpha:.12g}\n"
        f"  |I_f - I_alpha| = {rep.residual:.3e} (relative {rel:.3e})\n"
        f"  stable: {'yes' if rep.stable else 'no'}"
    )
    if rep.warnings:
        text += "\n  " + "\n  ".join(f"warning: {w}" for w in rep.warnings)
    _emit(payload, text, cfg, out)
    return EXIT_OK if rep.stable else EXIT_FAIL


def run_variation(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    scn = resolve(cfg.scenario)
    leaf = scn.leaf(cfg.leaf).with_resolution(cfg.grid)
    f = scn.field(cfg.field)
    sv = second_variation_direct(scn.chart, scn.foliation, leaf, f.variation(), cfg.t_step)
    payload = {"scenario": scn.name, "leaf": leaf.name, "field": f.name, "grid": cfg.grid, **asdict(sv)}
    text = (
        f"variation {scn.name} leaf={leaf.name} field={f.name} grid={cfg.grid} t_step={cfg.t_step:g}\n"
        f"  d2vol = {sv.d2vol:.12g}\n  I_f   = {sv.I_f:.12g}\n  relative error = {sv.rel_error:.3e}"
    )
    _emit(payload, text, cfg, out)
    return EXIT_OK if sv.rel_error < 0.01 else EXIT_FAIL


def run_selftest(names, samples: int, seed: int, out=None) -> int:
    out = out or sys.stdout
    from . import selftest

    names = tuple(names) or BUILTIN_NAMES
    for n in names:
        builtin(n)
    items = selftest.run(names, C.SamplingPlan(samples=samples, seed=seed))
    for it in items:
        print(it.line(), file=out)
    bad = [it for it in items if not it.ok]
    print(f"{len(items)} expectations, {len(bad)} mismatches", file=out)
    return EXIT_FAIL if bad else EXIT_OK


def describe(scn: Scenario) -> str:
    ch = scn.chart
    lines = [f"{scn.name} ({scn.title})", ""]
    if scn.doc:
        lines += [scn.doc, ""]
    axes = []
    for c, p, lo, hi in zip(ch.coords, ch.periods, ch.lower, ch.upper):
        axes.append(f"{c} periodic {p:.6g}" if p is not None else f"{c} in ({lo:.6g}, {hi:.6g})")
    lines.append("coordinates: " + "; ".join(axes))
    metric = [f"g_{ch.coords[i]}{ch.coords[j]} = {ch.metric_entry(i, j)}" for i in range(ch.dim) for j in range(i, ch.dim) if ch.metric_entry(i, j).constant != 0.0]
    lines.append("metric: " + ", ".join(metric))
    lines.append("D spanned by: " + ", ".join(str(f) for f in scn.foliation.spanning))
    if scn.foliation2 is not None:
        lines.append("second foliation: " + ", ".join(str(f) for f in scn.foliation2.spanning))
    for f in scn.fields:
        extra = f" tags={','.join(f.tags)}" if f.tags else ""
        if f.anchor is not None:
            extra += f" anchor={f.anchor}"
        if f.bump:
            extra += f" bump={','.join(f.bump)}"
        lines.append(f"field {f.name} = {f.spec}{extra}")
    for lp in scn.leaves:
        lines.append(f"leaf {lp.name}: ({', '.join(lp.params)}) -> ({', '.join(str(e) for e in lp.embed)})")
    lines.append("claims: " + (", ".join(scn.claims) or "none"))
    if scn.counterexamples:
        lines.append("counterexamples: " + ", ".join(scn.counterexamples))
    lines.append("leaves compact: " + ("yes" if scn.leaves_compact else "no"))
    return "\n".join(lines)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if ns.command == "list":
            for name in BUILTIN_NAMES:
                s = builtin(name)
                print(f"{name:<4} {s.title:<22} {s.chart.dim}D, leaves of dimension {s.foliation.n}")
            return EXIT_OK
        if ns.command == "describe":
            print(describe(resolve(ns.scenario)))
            return EXIT_OK
        if ns.command == "selftest":
            return run_selftest(ns.scenarios, ns.samples, ns.seed)
        cfg = RunConfig(
            scenario=ns.scenario,
            requests=tuple(getattr(ns, "requests", None) or ()),
            samples=ns.samples,
            seed=ns.seed,
            pairs=ns.pairs,
            tol=ns.tol,
            grid=getattr(ns, "grid", 64),
            t_step=getattr(ns, "t_step", 1e-3),
            output=ns.output,
            fmt=ns.fmt,
            strict=getattr(ns, "strict", False),
            timestamp=ns.timestamp,
            leaf=getattr(ns, "leaf", None),
            field=getattr(ns, "field", None),
        )
        if ns.command == "check":
            return run_check(cfg)
        if ns.command == "stability":
            return run_stability(cfg)
        return run_variation(cfg)
    except (KeyError, ScenarioError, MisuseError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
        print(f"foliation-lab: error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except FoliationLabError as exc:
        print(f"foliation-lab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
