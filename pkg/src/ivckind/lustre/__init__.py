"""Lustre-subset frontend: parsing, checking, flattening, slicing."""

from __future__ import annotations

from . import ast
from .checker import TypeChecker
from .errors import (
    AnnotationError,
    CycleError,
    DuplicateDefinitionError,
    LexError,
    LustreError,
    LustreTypeError,
    MissingDefinitionError,
    NodeRecursionError,
    NotNormalizedError,
    ParseError,
    UnresolvedIdentifierError,
)
from .interp import run
from .normalize import is_normalized, normalize
from .parser import parse_raw
from .printer import program_str
from .slicing import slice_backward


def parse(source: str) -> ast.Program:
    """Parse and check a program; raises a :class:`LustreError` subclass."""
    program = parse_raw(source)
    TypeChecker(program).check()
    return program


def parse_file(path) -> ast.Program:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def resolve_ivc_annotations(program: ast.Program) -> frozenset[str]:
    """Variables of the main node that take part in IVC analysis."""
    node = program.main_node
    if node.ivc is not None:
        defined = set(node.defined())
        for v in node.ivc:
            if v not in defined:
                raise AnnotationError(f"--%IVC names unknown variable {v!r}", node.pos)
    return node.ivc_candidates


__all__ = [
    "ast", "parse", "parse_file", "parse_raw", "normalize", "is_normalized",
    "slice_backward", "resolve_ivc_annotations", "program_str", "run",
    "LustreError", "LexError", "ParseError", "LustreTypeError",
    "DuplicateDefinitionError", "MissingDefinitionError",
    "UnresolvedIdentifierError", "CycleError", "NodeRecursionError",
    "AnnotationError", "NotNormalizedError",
]
