"""Pretty-printer whose output reparses to a structurally equal program."""

from __future__ import annotations

from fractions import Fraction

from . import ast


def _real(v: Fraction) -> str:
    num, den = v.numerator, v.denominator
    neg = num < 0
    num = abs(num)
    # Literals from the lexer always have a power-of-ten denominator.
    digits = 0
    while den % 10 != 0 and den != 1:
        if den % 2 == 0:
            num *= 5
            den *= 5
        elif den % 5 == 0:
            num *= 2
            den *= 2
        else:
            raise ValueError(f"real {v} has no finite decimal form")
    while den != 1:
        den //= 10
        digits += 1
    text = str(num).rjust(digits + 1, "0")
    body = f"{text[:len(text) - digits]}.{text[len(text) - digits:] or '0'}"
    return f"(- {body})" if neg else body


def expr_str(e: ast.Expr) -> str:
    if isinstance(e, ast.Const):
        if e.type == ast.BOOL:
            return "true" if e.value else "false"
        if e.type == ast.REAL:
            return _real(Fraction(e.value))
        return str(e.value) if e.value >= 0 else f"(- {-e.value})"
    if isinstance(e, ast.Ident):
        return e.name
    if isinstance(e, ast.Unary):
        return f"({e.op} {expr_str(e.arg)})"
    if isinstance(e, ast.Binary):
        return f"({expr_str(e.left)} {e.op} {expr_str(e.right)})"
    if isinstance(e, ast.Ite):
        return f"(if {expr_str(e.cond)} then {expr_str(e.then)} else {expr_str(e.else_)})"
    if isinstance(e, ast.Call):
        return f"{e.node}({', '.join(expr_str(a) for a in e.args)})"
    raise TypeError(e)


def _decls(ds) -> str:
    return "; ".join(f"{n} : {t}" for n, t in ds)


def node_str(node: ast.Node) -> str:
    lines = [f"node {node.name}({_decls(node.inputs)}) returns ({_decls(node.outputs)});"]
    if node.locals:
        lines.append("var")
        lines.extend(f"  {n} : {t};" for n, t in node.locals)
    lines.append("let")
    lines.extend(f"  {eq.target} = {expr_str(eq.rhs)};" for eq in node.equations)
    for p in node.properties:
        lines.append(f"  --%PROPERTY {p};")
    if node.ivc is not None:
        lines.append(f"  --%IVC {', '.join(node.ivc)};")
    if node.is_main:
        lines.append("  --%MAIN;")
    lines.append("tel;")
    return "\n".join(lines)


def program_str(program: ast.Program) -> str:
    return "\n\n".join(node_str(n) for n in program.nodes) + "\n"
