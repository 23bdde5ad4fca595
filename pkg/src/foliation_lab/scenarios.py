"""Built-in test geometries and the scenario file format.

A scenario bundles a chart, a foliation, named vector fields, leaf patches
and the list of checks the scenario is expected to pass (``claims``) or to
fail (``counterexamples``).  ``expect`` pins exact residual profiles, e.g.
``minimal = 2/r`` for leaves that are round spheres.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ExprError, FoliationLabError, MetricError, RankError, ScenarioError
from .expr import Expression, as_expression, parse, parse_list
from .foliation import FoliationSpec, FrameContext, frobenius_residual_jets
from .geometry import Chart, Local, VectorFieldSpec, metric_at
from .leaf import LeafPatch, VariationField, check_leaf

FIELD_TAGS = ("killing", "preserving", "counterexample", "variation")
CLAIMS = ("lemma2", "lemma3", "minimal", "integrable_perp", "prop3", "stability", "integral")
VALIDATION_POINTS = 64


@dataclass(frozen=True)
class NamedField:
    name: str
    spec: VectorFieldSpec
    tags: tuple[str, ...] = ()
    anchor: tuple[float, ...] | None = None
    bump: tuple[str, ...] = ()

    def variation(self) -> VariationField:
        return VariationField(self.spec, self.bump)


@dataclass(frozen=True)
class Scenario:
    name: str
    title: str
    chart: Chart
    foliation: FoliationSpec
    fields: tuple[NamedField, ...] = ()
    leaves: tuple[LeafPatch, ...] = ()
    foliation2: FoliationSpec | None = None
    leaves_compact: bool = True
    claims: tuple[str, ...] = ()
    counterexamples: tuple[str, ...] = ()
    expect: tuple[tuple[str, Expression], ...] = ()
    doc: str = field(default="", compare=False)

    def field(self, name: str) -> NamedField:
        for f in self.fields:
            if f.name == name:
                return f
        raise KeyError(f"scenario {self.name} has no field {name!r} (fields: {', '.join(f.name for f in self.fields)})")

    def leaf(self, name: str) -> LeafPatch:
        for lp in self.leaves:
            if lp.name == name:
                return lp
        raise KeyError(f"scenario {self.name} has no leaf {name!r} (leaves: {', '.join(lp.name for lp in self.leaves)})")

    def tagged(self, tag: str) -> list[NamedField]:
        return [f for f in self.fields if tag in f.tags]


# -- built-ins -----------------------------------------------------------------

TWO_PI = 2 * math.pi


def _vf(*comps, name=""):
    return VectorFieldSpec.of(*comps, name=name)


def _fol(*fields):
    return FoliationSpec.of(*[_vf(*f) for f in fields])


def _torus_leaf(embed, name="L0", res=64):
    return LeafPatch.build(("u", "v"), embed, [(0.0, TWO_PI), (0.0, TWO_PI)], resolution=res, name=name)


def _flat3(**kw):
    return Chart.build(("x", "y", "z"), {(0, 0): "1", (1, 1): "1", (2, 2): "1"}, **kw)


def _warped(f, name):
    return Chart.build(
        ("x", "y", "z"),
        {(0, 0): "1", (1, 1): "1", (2, 2): f"exp(2*({f}))"},
        periods=(TWO_PI,) * 3,
        name=name,
    )


_LEMMAS = ("lemma2", "lemma3", "minimal", "integrable_perp")


def _s1() -> Scenario:
    return Scenario(
        name="S1",
        title="flat_torus3",
        chart=_flat3(periods=(TWO_PI,) * 3, name="flat_torus3"),
        foliation=_fol(("1", "0", "0"), ("0", "1", "0")),
        fields=(
            NamedField("V1", _vf("0", "0", "sin(x)", name="V1"), ("variation",)),
            NamedField("X1", _vf("1", "0", "0", name="X1"), ("killing", "preserving")),
            NamedField("X2", _vf("0", "0", "sin(z)", name="X2"), ("preserving",), anchor=(0.0, 0.0, 0.0)),
        ),
        leaves=(_torus_leaf(("u", "v", "0")),),
        claims=_LEMMAS + ("stability", "integral"),
        doc="Flat 3-torus foliated by the planes z = const. Pointwise identities, "
        "stability of the leaves, the Jacobi-field property of preserving fields "
        "and transport of a vanishing normal part along leaf geodesics.",
    )


def _s2() -> Scenario:
    return Scenario(
        name="S2",
        title="torus_pair",
        chart=Chart.build(("x", "y"), {(0, 0): "1", (1, 1): "1"}, periods=(TWO_PI, TWO_PI), name="torus_pair"),
        foliation=_fol(("1", "0")),
        foliation2=_fol(("0", "1")),
        fields=(NamedField("K", _vf("1", "1", name="K"), ("killing", "preserving")),),
        leaves=(LeafPatch.build(("u",), ("u", "0"), [(0.0, TWO_PI)], name="L0"),),
        claims=_LEMMAS + ("prop3", "integral"),
        doc="Flat 2-torus with the two orthogonal complementary foliations by "
        "horizontal and vertical circles. Divergence split across the pair and a "
        "Killing field preserving both.",
    )


def _s3() -> Scenario:
    box = dict(lower=(-1.0, -1.0, -1.0), upper=(1.0, 1.0, 1.0))
    return Scenario(
        name="S3",
        title="plane_stack",
        chart=_flat3(name="plane_stack", **box),
        foliation=_fol(("1", "0", "0"), ("0", "1", "0")),
        fields=(
            NamedField("B1", _vf("0", "0", "cos(2*x) + x*y", name="B1"), ("variation",), bump=("x", "y")),
            NamedField("B2", _vf("0", "0", "1 + sin(3*y)*x", name="B2"), ("variation",), bump=("x", "y")),
        ),
        leaves=(
            LeafPatch.build(("u", "v"), ("u", "v", "0.25"), [(-1.0, 1.0), (-1.0, 1.0)], periodic=(False, False), name="L0"),
        ),
        leaves_compact=False,
        claims=_LEMMAS + ("stability",),
        doc="Flat open box stacked by planes z = const; leaves are not compact, so "
        "stability is tested with variation fields cut off by a smooth bump.",
    )


K1_COMPONENTS = (
    "cos(a + b)",
    "tan(eta)*sin(a + b)",
    "-cos(eta)/sin(eta)*sin(a + b)",
)


def _s4(delta: float = 0.1) -> Scenario:
    chart = Chart.build(
        ("eta", "a", "b"),
        {(0, 0): "1", (1, 1): "cos(eta)^2", (2, 2): "sin(eta)^2"},
        periods=(None, TWO_PI, TWO_PI),
        lower=(delta, None, None),
        upper=(math.pi / 2 - delta, None, None),
        name="hopf",
    )
    eta0 = math.pi / 4
    return Scenario(
        name="S4",
        title="hopf",
        chart=chart,
        foliation=_fol(("0", "1", "1")),
        fields=(
            NamedField("K0", _vf("0", "1", "0", name="K0"), ("killing", "preserving")),
            NamedField("K1", _vf(*K1_COMPONENTS, name="K1"), ("killing", "counterexample")),
        ),
        leaves=(LeafPatch.build(("s",), (repr(eta0), "s", "s"), [(0.0, TWO_PI)], name="fiber"),),
        claims=("minimal",),
        counterexamples=("integrable_perp",),
        expect=(("preserving:K1", as_expression("2")),),
        doc="Unit 3-sphere in Hopf coordinates (cos eta e^{ia}, sin eta e^{ib}), "
        "foliated by the Hopf circles. The fibers are geodesics, so the foliation "
        "is minimal, but the orthogonal distribution is not integrable. A "
        "transverse Killing field (K1, left multiplication by a unit quaternion) "
        "does not map fibers to fibers.",
    )


def _s5(name: str, title: str, f: str, extra=()) -> Scenario:
    return Scenario(
        name=name,
        title=title,
        chart=_warped(f, title),
        foliation=_fol(("1", "0", "0"), ("0", "1", "0")),
        fields=(NamedField("V1", _vf("0", "0", f"exp(-({f}))", name="V1"), ("variation",)),) + tuple(extra),
        leaves=(_torus_leaf(("u", "v", "0")),),
        claims=_LEMMAS + ("stability", "integral"),
        doc=f"3-torus with metric dx^2 + dy^2 + e^(2f) dz^2, f = {f}. The planes "
        "z = const are totally geodesic and the normal lines form an integrable "
        "distribution, while curvature couples into the normal operators.",
    )


def _s6() -> Scenario:
    chart = Chart.build(
        ("r", "th", "ph"),
        {(0, 0): "1", (1, 1): "r^2", (2, 2): "r^2*sin(th)^2"},
        periods=(None, None, TWO_PI),
        lower=(1.0, 0.1, None),
        upper=(2.0, math.pi - 0.1, None),
        name="sphere_leaves",
    )
    return Scenario(
        name="S6",
        title="sphere_leaves",
        chart=chart,
        foliation=_fol(("0", "1", "0"), ("0", "0", "1")),
        fields=(NamedField("N", _vf("1", "0", "0", name="N")),),
        leaves=(
            LeafPatch.build(
                ("s", "t"), ("1.5", "s", "t"), [(0.0, math.pi), (0.0, TWO_PI)], periodic=(False, True), name="R15"
            ),
        ),
        claims=("integrable_perp", "prop3"),
        counterexamples=("minimal",),
        expect=(("minimal", as_expression("2/r")),),
        doc="Flat space between the spheres r = 1 and r = 2 in spherical coordinates, "
        "foliated by concentric spheres. Leaves are umbilic with |H| = 2/r, so "
        "this is the negative control for minimality and exercises the mean "
        "curvature correction in the divergence split.",
    )


def _builders():
    return {
        "S1": _s1,
        "S2": _s2,
        "S3": _s3,
        "S4": _s4,
        "S5": lambda: _s5("S5", "warped_transversal", "0.3*sin(x)*cos(y)"),
        "S5b": lambda: _s5(
            "S5b",
            "warped_transversal_y",
            "0.3*sin(x)",
            extra=(
                NamedField("Y", _vf("0", "1", "0", name="Y"), ("killing", "preserving")),
                NamedField("Z", _vf("0", "0", "1", name="Z"), ("killing", "preserving")),
            ),
        ),
        "S6": _s6,
    }


BUILTIN_NAMES = tuple(_builders())
_CACHE: dict[str, Scenario] = {}


def builtin(name: str) -> Scenario:
    builders = _builders()
    key = name
    if key not in builders:
        by_title = {b().title: k for k, b in builders.items()}
        key = by_title.get(name)
        if key is None:
            raise KeyError(f"unknown scenario {name!r}; choose from {', '.join(builders)}")
    if key not in _CACHE:
        _CACHE[key] = builders[key]()
    return _CACHE[key]


def resolve(name_or_path: str) -> Scenario:
    """Builtin name/title, or a path to a scenario file."""
    p = Path(name_or_path)
    if p.suffix == ".scn" or p.exists():
        return load_scenario(p)
    return builtin(name_or_path)


def shipped_file(name: str) -> Path:
    return Path(str(resources.files("foliation_lab") / "data" / f"{name}.scn"))


# -- file format -----------------------------------------------------------------

_SECTION = re.compile(r"^\[\s*([A-Za-z0-9_]+)(?:\s+([A-Za-z_][A-Za-z0-9_]*))?\s*\]$")


@dataclass
class _Section:
    kind: str
    name: str | None
    line: int
    entries: list[tuple[str, str, int]] = field(default_factory=list)

    def get(self, key):
        hits = [(v, ln) for k, v, ln in self.entries if k == key]
        return hits[-1] if hits else (None, self.line)

    def all(self, key):
        return [(v, ln) for k, v, ln in self.entries if k == key]


def _split_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _bool(text, path, line) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1"):
        return True
    if t in ("false", "no", "0"):
        return False
    raise ScenarioError(f"expected true/false, got {text!r}", path, line)


def _const(text, path, line) -> float:
    try:
        e = parse(text.strip())
        if e.symbols:
            raise ScenarioError(f"expected a constant, got {text!r}", path, line)
        return float(e.constant)
    except ExprError as exc:
        raise ScenarioError(f"bad constant: {exc}", path, line) from exc


def _exprs(text, path, line) -> list[Expression]:
    try:
        return parse_list(text.strip())
    except ExprError as exc:
        raise ScenarioError(f"bad expression list: {exc}", path, line) from exc


def _expr(text, path, line) -> Expression:
    try:
        return parse(text.strip())
    except ExprError as exc:
        raise ScenarioError(f"bad expression: {exc}", path, line) from exc


def _sections(text: str, path: str) -> list[_Section]:
    out: list[_Section] = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION.match(line)
        if m:
            out.append(_Section(m.group(1).lower(), m.group(2), ln))
            continue
        if line.startswith("["):
            raise ScenarioError(f"malformed section header {line!r}", path, ln)
        if "=" not in line:
            raise ScenarioError(f"expected 'key = value', got {line!r}", path, ln)
        if not out:
            raise ScenarioError("entry before the first section", path, ln)
        key, value = line.split("=", 1)
        out[-1].entries.append((key.strip(), value.strip(), ln))
    return out


def _axes(sec: _Section, names: list[str], path: str, what: str):
    """periodic / period / lower / upper for a coordinate or parameter box."""
    k = len(names)
    v, ln = sec.get("periodic")
    periodic = [False] * k
    if v is not None:
        flags = _split_list(v)
        if len(flags) == 1:
            flags = flags * k
        if len(flags) != k:
            raise ScenarioError(f"periodic needs 1 or {k} flags", path, ln)
        periodic = [_bool(f, path, ln) for f in flags]
    bounds = {}
    for key in ("lower", "upper"):
        v, ln = sec.get(key)
        vals: list[float | None] = [None] * k
        if v is not None:
            items = _split_list(v)
            if len(items) == 1:
                items = items * k
            if len(items) != k:
                raise ScenarioError(f"{key} needs 1 or {k} values ('-' for default)", path, ln)
            vals = [None if t == "-" else _const(t, path, ln) for t in items]
        bounds[key] = vals
    v, ln = sec.get("period")
    periods: list[float | None] = [None] * k
    if v is None:
        # a periodic axis with both bounds given takes its period from them
        for i in range(k):
            lo, hi = bounds["lower"][i], bounds["upper"][i]
            if periodic[i]:
                if lo is None or hi is None:
                    raise ScenarioError(f"periodic {what} need a period", path, sec.line)
                periods[i] = hi - lo
    elif any(periodic):
        vals = [_const(t, path, ln) for t in _split_list(v)]
        wanted = sum(periodic)
        if len(vals) == 1 and wanted > 1:
            vals = vals * wanted
        if len(vals) != wanted:
            raise ScenarioError(f"period needs one value per periodic {what[:-1]} ({wanted})", path, ln)
        it = iter(vals)
        periods = [next(it) if p else None for p in periodic]
    return periodic, periods, bounds["lower"], bounds["upper"]


def _metric(sec: _Section, coords: list[str], path: str):
    m = len(coords)
    index = {c: i for i, c in enumerate(coords)}
    entries: dict[tuple[int, int], tuple[Expression, int]] = {}
    for key, value, ln in sec.entries:
        parts = key.split("_")
        if len(parts) != 3 or parts[0] != "g":
            raise ScenarioError(f"metric keys look like g_<i>_<j>, got {key!r}", path, ln)

        def idx(t):
            if t in index:
                return index[t]
            if t.isdigit() and 1 <= int(t) <= m:
                return int(t) - 1
            raise ScenarioError(f"unknown coordinate {t!r} in {key}", path, ln)

        i, j = idx(parts[1]), idx(parts[2])
        e = _expr(value, path, ln)
        _check_symbols(e, coords, path, ln)
        a, b = min(i, j), max(i, j)
        if (a, b) in entries and entries[(a, b)][0] != e:
            raise ScenarioError(
                f"metric is not symmetric: g_{coords[a]}_{coords[b]} = {entries[(a, b)][0]} "
                f"(line {entries[(a, b)][1]}) but g_{coords[i]}_{coords[j]} = {e}",
                path,
                ln,
            )
        entries[(a, b)] = (e, ln)
    for i in range(m):
        if (i, i) not in entries:
            raise ScenarioError(f"missing diagonal metric entry g_{coords[i]}_{coords[i]}", path, sec.line)
    return {k: e for k, (e, _) in entries.items()}


def _unbound(e: Expression, names, path, ln):
    missing = sorted(e.symbols - set(names))
    raise ScenarioError(f"unknown symbol {missing[0]!r} (available: {', '.join(names)})", path, ln)


def _check_symbols(e: Expression, names, path, ln):
    if e.symbols - set(names):
        _unbound(e, names, path, ln)


def _foliation(sec: _Section, coords, path) -> tuple[FoliationSpec, list[int]]:
    fields, lines = [], []
    for v, ln in sec.all("span"):
        comps = _exprs(v, path, ln)
        if len(comps) != len(coords):
            raise ScenarioError(f"spanning field has {len(comps)} components, chart has {len(coords)}", path, ln)
        for c in comps:
            _check_symbols(c, coords, path, ln)
        fields.append(VectorFieldSpec(tuple(comps)))
        lines.append(ln)
    if not fields:
        raise ScenarioError(f"[{sec.kind}] needs at least one 'span = (...)' line", path, sec.line)
    return FoliationSpec(tuple(fields)), lines


def loads_scenario(text: str, path: str = "<string>", validate: bool = True) -> Scenario:
    secs = _sections(text, path)
    by_kind: dict[str, list[_Section]] = {}
    for s in secs:
        if s.kind not in ("scenario", "manifold", "metric", "foliation", "foliation2", "field", "leaf", "expect"):
            raise ScenarioError(f"unknown section [{s.kind}]", path, s.line)
        by_kind.setdefault(s.kind, []).append(s)
    for kind in ("manifold", "metric", "foliation"):
        if kind not in by_kind:
            raise ScenarioError(f"missing [{kind}] section", path)
    for kind in ("scenario", "manifold", "metric", "foliation", "foliation2", "expect"):
        if len(by_kind.get(kind, [])) > 1:
            raise ScenarioError(f"duplicate [{kind}] section", path, by_kind[kind][1].line)

    head = by_kind.get("scenario", [_Section("scenario", None, 0)])[0]
    name = head.get("name")[0] or Path(path).stem
    title = head.get("title")[0] or name
    doc = head.get("doc")[0] or ""
    v, ln = head.get("compact")
    compact = True if v is None else _bool(v, path, ln)
    claims = tuple(_split_list(head.get("claims")[0] or ""))
    counter = tuple(_split_list(head.get("counterexamples")[0] or ""))
    for c in claims + counter:
        if c not in CLAIMS:
            raise ScenarioError(f"unknown check {c!r} in claims (known: {', '.join(CLAIMS)})", path, head.line)

    man = by_kind["manifold"][0]
    v, ln = man.get("coords")
    if v is None:
        raise ScenarioError("[manifold] needs coords", path, man.line)
    coords = _split_list(v)
    for c in coords:
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", c):
            raise ScenarioError(f"bad coordinate name {c!r}", path, ln)
    v, ln = man.get("dim")
    if v is not None and int(v) != len(coords):
        raise ScenarioError(f"dim = {v} but {len(coords)} coords listed", path, ln)
    periodic, periods, lower, upper = _axes(man, coords, path, "coordinates")
    metric = _metric(by_kind["metric"][0], coords, path)
    try:
        chart = Chart.build(coords, metric, periods=periods, lower=lower, upper=upper, name=title)
    except (ValueError, ExprError) as exc:
        raise ScenarioError(str(exc), path, man.line) from exc

    fol_sec = by_kind["foliation"][0]
    fol, fol_lines = _foliation(fol_sec, coords, path)
    fol2 = None
    if "foliation2" in by_kind:
        fol2, _ = _foliation(by_kind["foliation2"][0], coords, path)

    fields = []
    for sec in by_kind.get("field", []):
        if sec.name is None:
            raise ScenarioError("[field] needs a name, e.g. [field V1]", path, sec.line)
        v, ln = sec.get("components")
        if v is None:
            raise ScenarioError(f"field {sec.name} needs components", path, sec.line)
        comps = _exprs(v, path, ln)
        if len(comps) != len(coords):
            raise ScenarioError(f"field {sec.name} has {len(comps)} components, chart has {len(coords)}", path, ln)
        for c in comps:
            _check_symbols(c, coords, path, ln)
        v, ln = sec.get("tags")
        tags = tuple(t for t in re.split(r"[,|]", v or "") if t.strip())
        tags = tuple(t.strip() for t in tags)
        for t in tags:
            if t not in FIELD_TAGS:
                raise ScenarioError(f"unknown tag {t!r} (known: {', '.join(FIELD_TAGS)})", path, ln)
        v, ln = sec.get("anchor")
        anchor = None
        if v is not None:
            anchor = tuple(_const(str(e), path, ln) for e in _exprs(v, path, ln))
            if len(anchor) != len(coords):
                raise ScenarioError("anchor needs one coordinate per chart axis", path, ln)
        v, ln = sec.get("bump")
        bump = tuple(_split_list(v or ""))
        for b in bump:
            if b not in coords:
                raise ScenarioError(f"bump axis {b!r} is not a coordinate", path, ln)
        fields.append(NamedField(sec.name, VectorFieldSpec(tuple(comps), sec.name), tags, anchor, bump))

    leaves = []
    for sec in by_kind.get("leaf", []):
        if sec.name is None:
            raise ScenarioError("[leaf] needs a name, e.g. [leaf L0]", path, sec.line)
        v, ln = sec.get("params")
        if v is None:
            raise ScenarioError(f"leaf {sec.name} needs params", path, sec.line)
        params = _split_list(v)
        lp_periodic, lp_periods, lp_lower, lp_upper = _axes(sec, params, path, "parameters")
        bounds = []
        for k, pname in enumerate(params):
            lo = lp_lower[k] if lp_lower[k] is not None else (0.0 if lp_periodic[k] else None)
            hi = lp_upper[k]
            if hi is None and lp_periodic[k]:
                hi = lo + lp_periods[k]
            if lo is None or hi is None:
                raise ScenarioError(f"non-periodic parameter {pname} needs lower and upper", path, sec.line)
            bounds.append((lo, hi))
        v, ln = sec.get("embed")
        if v is None:
            raise ScenarioError(f"leaf {sec.name} needs embed", path, sec.line)
        emb = _exprs(v, path, ln)
        for e in emb:
            _check_symbols(e, params, path, ln)
        v, ln = sec.get("resolution")
        try:
            res = tuple(int(t) for t in _split_list(v)) if v is not None else (64,)
        except ValueError as exc:
            raise ScenarioError(f"resolution must be integers, got {v!r}", path, ln) from exc
        if len(res) == 1:
            res = res * len(params)
        try:
            leaves.append(LeafPatch.build(params, emb, bounds, lp_periodic, res, sec.name))
        except ValueError as exc:
            raise ScenarioError(str(exc), path, sec.line) from exc

    expect = []
    for key, value, ln in by_kind.get("expect", [_Section("expect", None, 0)])[0].entries:
        e = _expr(value, path, ln)
        _check_symbols(e, coords, path, ln)
        expect.append((key, e))

    scn = Scenario(
        name=name,
        title=title,
        chart=chart,
        foliation=fol,
        fields=tuple(fields),
        leaves=tuple(leaves),
        foliation2=fol2,
        leaves_compact=compact,
        claims=claims,
        counterexamples=counter,
        expect=tuple(expect),
        doc=doc,
    )
    if validate:
        validate_scenario(scn, path, {"metric": by_kind["metric"][0].line, "foliation": fol_sec.line})
    return scn


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc.strerror}", str(path)) from exc
    return loads_scenario(text, str(path))


def validate_scenario(scn: Scenario, path: str = "<scenario>", lines: dict | None = None) -> None:
    """Metric positive definite, D of full rank and involutive, leaves tangent."""
    from .checks import SamplingPlan

    lines = lines or {}
    chart = scn.chart
    try:
        P = SamplingPlan(samples=VALIDATION_POINTS, seed=0).points(chart)
    except FoliationLabError:
        box = tuple((lo, hi) if math.isfinite(lo) and math.isfinite(hi) else (-1.0, 1.0) for lo, hi in zip(chart.lower, chart.upper))
        P = SamplingPlan(samples=VALIDATION_POINTS, seed=0, box=box).points(chart)
    try:
        metric_at(chart, P)
    except (MetricError, ExprError) as exc:
        raise ScenarioError(str(exc), path, lines.get("metric")) from exc
    for label, fol in (("foliation", scn.foliation), ("foliation2", scn.foliation2)):
        if fol is None:
            continue
        if not 0 < fol.n < chart.dim:
            raise ScenarioError(f"[{label}] must span between 1 and {chart.dim - 1} directions", path, lines.get(label))
        loc = Local(chart, P, order=1)
        try:
            res = frobenius_residual_jets(loc, [loc.field(f) for f in fol.spanning])
        except RankError as exc:
            raise ScenarioError(str(exc), path, lines.get(label)) from exc
        worst = int(np.argmax(res))
        if res[worst] >= 1e-8:
            raise ScenarioError(
                f"distribution is not involutive: Frobenius residual {res[worst]:.6g} "
                f"at witness point ({', '.join(f'{x:.6g}' for x in P[worst])})",
                path,
                lines.get(label),
            )
    try:
        FrameContext(chart, scn.foliation, P, order=0).normal
    except RankError as exc:
        raise ScenarioError(str(exc), path, lines.get("foliation")) from exc
    for lp in scn.leaves:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                check_leaf(chart, scn.foliation, lp.with_resolution(tuple(min(r, 16) for r in lp.resolution)))
        except FoliationLabError as exc:
            raise ScenarioError(f"leaf {lp.name}: {exc}", path) from exc


def _num(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def dumps_scenario(scn: Scenario) -> str:
    """Serialize to the scenario file format (loads back to an equal scenario)."""
    ch = scn.chart
    out = ["[scenario]", f"name = {scn.name}", f"title = {scn.title}"]
    if scn.doc:
        out.append(f"doc = {' '.join(scn.doc.split())}")
    out.append(f"compact = {'true' if scn.leaves_compact else 'false'}")
    if scn.claims:
        out.append(f"claims = {', '.join(scn.claims)}")
    if scn.counterexamples:
        out.append(f"counterexamples = {', '.join(scn.counterexamples)}")
    out += ["", "[manifold]", f"dim = {ch.dim}", f"coords = {', '.join(ch.coords)}"]
    if any(ch.periodic):
        out.append(f"periodic = {', '.join('true' if p else 'false' for p in ch.periodic)}")
        out.append(f"period = {', '.join(_num(p) for p in ch.periods if p is not None)}")
    out.append(f"lower = {', '.join('-' if not math.isfinite(v) else _num(v) for v in ch.lower)}")
    out.append(f"upper = {', '.join('-' if (p is not None or not math.isfinite(v)) else _num(v) for v, p in zip(ch.upper, ch.periods))}")
    out += ["", "[metric]"]
    for i in range(ch.dim):
        for j in range(i, ch.dim):
            e = ch.metric_entry(i, j)
            if i == j or e.constant != 0.0:
                out.append(f"g_{ch.coords[i]}_{ch.coords[j]} = {e}")

    def vec(spec):
        return "(" + ", ".join(str(c) for c in spec.components) + ")"

    for label, fol in (("foliation", scn.foliation), ("foliation2", scn.foliation2)):
        if fol is not None:
            out += ["", f"[{label}]"] + [f"span = {vec(f)}" for f in fol.spanning]
    for f in scn.fields:
        out += ["", f"[field {f.name}]", f"components = {vec(f.spec)}"]
        if f.tags:
            out.append(f"tags = {', '.join(f.tags)}")
        if f.anchor is not None:
            out.append(f"anchor = ({', '.join(_num(x) for x in f.anchor)})")
        if f.bump:
            out.append(f"bump = {', '.join(f.bump)}")
    for lp in scn.leaves:
        out += ["", f"[leaf {lp.name}]", f"params = {', '.join(lp.params)}"]
        out.append(f"periodic = {', '.join('true' if p else 'false' for p in lp.periodic)}")
        if any(lp.periodic):
            out.append(
                "period = " + ", ".join(_num(hi - lo) for lo, hi, p in zip(lp.lower, lp.upper, lp.periodic) if p)
            )
        out.append(f"lower = {', '.join(_num(v) for v in lp.lower)}")
        out.append(f"upper = {', '.join(_num(v) for v in lp.upper)}")
        out.append(f"embed = ({', '.join(str(e) for e in lp.embed)})")
        res = lp.resolution if len(set(lp.resolution)) > 1 else lp.resolution[:1]
        out.append(f"resolution = {', '.join(map(str, res))}")
    if scn.expect:
        out += ["", "[expect]"] + [f"{k} = {e}" for k, e in scn.expect]
    return "\n".join(out) + "\n"


def dump_scenario(scn: Scenario, path) -> None:
    Path(path).write_text(dumps_scenario(scn), encoding="utf-8")
