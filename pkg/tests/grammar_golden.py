"""Render grammar cases for the golden-file test.  Run as a script to regenerate."""

from pathlib import Path

from foliation_lab.errors import ExprError
from foliation_lab.expr import BinOp, Call, Neg, Num, Pi, Sym, evaluate, parse, to_source

DATA = Path(__file__).parent / "data"
BINDINGS = {"x": 0.7, "y": 1.3, "z": 0.4, "a": 1.1, "b": 0.9, "c": 1.2, "eta": 0.6, "x_1": 0.3, "y2": 0.2}


def sexpr(node) -> str:
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Sym):
        return node.name
    if isinstance(node, Pi):
        return "pi"
    if isinstance(node, Neg):
        return f"(neg {sexpr(node.operand)})"
    if isinstance(node, BinOp):
        return f"({node.op} {sexpr(node.left)} {sexpr(node.right)})"
    if isinstance(node, Call):
        return f"({node.func} {sexpr(node.arg)})"
    raise TypeError(node)


def render(src: str) -> str:
    try:
        e = parse(src)
    except ExprError as exc:
        head = str(exc).splitlines()[0]
        return f"{src!r}\n  error {type(exc).__name__}: {head}"
    value = evaluate(e, {k: v for k, v in BINDINGS.items() if k in e.symbols})
    return f"{src!r}\n  ast   {sexpr(e.root)}\n  print {to_source(e.root)}\n  value {value:.12g}"


def render_all() -> str:
    cases = (DATA / "grammar_cases.txt").read_text().split("\n")
    return "\n".join(render(c) for c in cases if c.strip() or c) + "\n"


if __name__ == "__main__":
    (DATA / "grammar_golden.txt").write_text(render_all())
