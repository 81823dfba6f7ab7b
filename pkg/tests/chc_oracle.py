"""Independent safety oracle: encode (I, T, P) as Horn clauses for z3's Spacer.

Shares nothing with the k-induction engine beyond the formula terms; the
translation to z3 goes through the Python API, not the SMT-LIB printer.
"""

import z3

from ivckind import formula as fm

_SORTS = {fm.BOOL: z3.BoolSort, fm.INT: z3.IntSort, fm.REAL: z3.RealSort}


def _const(c):
    if c.sort == fm.BOOL:
        return z3.BoolVal(bool(c.value))
    if c.sort == fm.INT:
        return z3.IntVal(int(c.value))
    return z3.RealVal(str(c.value))


def to_z3(t, env):
    if isinstance(t, fm.Const):
        return _const(t)
    if isinstance(t, fm.Var):
        return env[(t.name, t.step)]
    a = [to_z3(x, env) for x in t.args]
    op = t.op
    if op == "and":
        return z3.And(*a)
    if op == "or":
        return z3.Or(*a)
    if op == "not":
        return z3.Not(a[0])
    if op == "=>":
        return z3.Implies(a[0], a[1])
    if op == "xor":
        return z3.Xor(a[0], a[1])
    if op == "=":
        return a[0] == a[1]
    if op == "distinct":
        return z3.Distinct(*a)
    if op == "ite":
        return z3.If(a[0], a[1], a[2])
    if op == "neg":
        return -a[0]
    if op == "+":
        return z3.Sum(*a)
    if op == "-":
        out = a[0]
        for x in a[1:]:
            out = out - x
        return out
    if op == "*":
        out = a[0]
        for x in a[1:]:
            out = out * x
        return out
    if op == "/":
        return a[0] / a[1]
    if op == "div":
        return a[0] / a[1]  # z3 Int division is SMT-LIB (Euclidean) div
    if op == "mod":
        return a[0] % a[1]
    return {"<": lambda: a[0] < a[1], "<=": lambda: a[0] <= a[1],
            ">": lambda: a[0] > a[1], ">=": lambda: a[0] >= a[1]}[op]()


def is_safe(ts, prop=None, timeout_ms=30000):
    """True if P is invariant, False if it is violated, None if Spacer gives up."""
    names = [n for n, _ in ts.state_vars]
    sorts = [_SORTS[s]() for _, s in ts.state_vars]
    inv = z3.Function("Inv", *sorts, z3.BoolSort())
    env = {}
    for (n, _), srt in zip(ts.state_vars, sorts):
        env[(n, 0)] = z3.Const(f"{n}@0", srt)
        env[(n, 1)] = z3.Const(f"{n}@1", srt)
    s0 = [env[(n, 0)] for n in names]
    s1 = [env[(n, 1)] for n in names]
    fp = z3.Fixedpoint()
    fp.set(engine="spacer")
    fp.set("timeout", timeout_ms)
    fp.register_relation(inv)
    allv = s0 + s1
    fp.declare_var(*allv)
    fp.rule(inv(*s0), to_z3(ts.init_pred, env))
    fp.rule(inv(*s1), [inv(*s0), to_z3(ts.transition(), env)])
    bad = z3.And(inv(*s0), z3.Not(to_z3(ts.property(prop), env)))
    res = fp.query(bad)
    if res == z3.unsat:
        return True
    if res == z3.sat:
        return False
    return None
