"""Diagnostics raised by the Lustre frontend.

Every diagnostic carries a ``category`` string so callers (and the CLI) can
tell a lexing problem from a typing problem without matching on messages.
"""

from __future__ import annotations

from typing import Optional


class LustreError(Exception):
    category = "error"

    def __init__(self, message: str, pos: Optional[tuple[int, int]] = None):
        self.message = message
        self.pos = pos
        super().__init__(str(self))

    @property
    def line(self) -> Optional[int]:
        return self.pos[0] if self.pos else None

    @property
    def column(self) -> Optional[int]:
        return self.pos[1] if self.pos else None

    def __str__(self) -> str:
        where = f"{self.pos[0]}:{self.pos[1]}: " if self.pos else ""
        return f"{where}{self.category}: {self.message}"


class LexError(LustreError):
    category = "lex error"


class ParseError(LustreError):
    category = "parse error"


class LustreTypeError(LustreError):
    category = "type error"


class DuplicateDefinitionError(LustreError):
    category = "duplicate definition"


class MissingDefinitionError(LustreError):
    category = "missing definition"


class UnresolvedIdentifierError(LustreError):
    category = "unresolved identifier"


class CycleError(LustreError):
    category = "instantaneous cycle"


class NodeRecursionError(LustreError):
    category = "recursive node"


class AnnotationError(LustreError):
    category = "annotation error"


class NotNormalizedError(LustreError):
    category = "not normalized"
