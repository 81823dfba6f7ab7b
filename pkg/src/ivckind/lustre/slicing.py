from __future__ import annotations

from typing import Iterable, Union

from . import ast
from .errors import UnresolvedIdentifierError


def slice_backward(program: ast.Program, root: Union[str, Iterable[str]]) -> set[str]:
    """Equation targets the root(s) transitively depend on, ``pre`` included.

    Node calls in an un-normalized program count as reading their argument
    variables; slice the normalized program to see through callees.
    """
    node = program.main_node
    roots = [root] if isinstance(root, str) else list(root)
    rhs = {eq.target: eq.rhs for eq in node.equations}
    for r in roots:
        if r not in rhs:
            raise UnresolvedIdentifierError(f"{r!r} is not a defined variable of node {node.name!r}")
    seen: set[str] = set()
    work = list(roots)
    while work:
        v = work.pop()
        if v in seen:
            continue
        seen.add(v)
        work.extend(w for w in ast.idents(rhs[v]) if w in rhs and w not in seen)
    return seen
