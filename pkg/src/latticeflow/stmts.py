"""Statement records carried by CFG vertices.

Textual payload grammar (one payload per vertex line):

    def <var> <defid>
    use <var>
    assign <var> = <int>
    assign <var> = <var> <op> <var>     op in {+, -, *}
    access <blockid>
    nop

``nop`` parses to the empty statement sequence; every other payload parses
to a single statement record. Client analyses interpret the records they
care about and treat the rest as identity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

BINARY_OPS = ("+", "-", "*")


@dataclass(frozen=True)
class DefStmt:
    var: str
    def_id: str


@dataclass(frozen=True)
class UseStmt:
    var: str


@dataclass(frozen=True)
class AssignConst:
    var: str
    value: int


@dataclass(frozen=True)
class AssignBinOp:
    var: str
    left: str
    op: str
    right: str


@dataclass(frozen=True)
class AccessStmt:
    block: int


Stmt = Union[DefStmt, UseStmt, AssignConst, AssignBinOp, AccessStmt]

# Ordered per-vertex statement sequence; () is a no-op vertex.
Stmts = tuple[Stmt, ...]


def parse_stmt_payload(tokens: list[str]) -> Stmts:
    """Parse one payload token list into a statement sequence.

    Raises ValueError on malformed payloads; callers attach line numbers.
    """
    if not tokens:
        raise ValueError("empty statement payload")
    head = tokens[0]
    if head == "nop":
        if len(tokens) != 1:
            raise ValueError("nop takes no arguments")
        return ()
    if head == "def":
        if len(tokens) != 3:
            raise ValueError("expected: def <var> <defid>")
        return (DefStmt(var=tokens[1], def_id=tokens[2]),)
    if head == "use":
        if len(tokens) != 2:
            raise ValueError("expected: use <var>")
        return (UseStmt(var=tokens[1]),)
    if head == "assign":
        if len(tokens) == 4 and tokens[2] == "=":
            try:
                value = int(tokens[3])
            except ValueError:
                raise ValueError(f"not an integer constant: {tokens[3]!r}") from None
            return (AssignConst(var=tokens[1], value=value),)
        if len(tokens) == 6 and tokens[2] == "=":
            op = tokens[4]
            if op not in BINARY_OPS:
                raise ValueError(f"unknown operator {op!r}; expected one of {BINARY_OPS}")
            return (AssignBinOp(var=tokens[1], left=tokens[3], op=op, right=tokens[5]),)
        raise ValueError("expected: assign <var> = <int> | assign <var> = <var> <op> <var>")
    if head == "access":
        if len(tokens) != 2:
            raise ValueError("expected: access <blockid>")
        try:
            block = int(tokens[1])
        except ValueError:
            raise ValueError(f"not an integer block id: {tokens[1]!r}") from None
        if block < 0:
            raise ValueError("block id must be non-negative")
        return (AccessStmt(block=block),)
    raise ValueError(f"unknown statement kind {head!r}")


def render_stmts(stmts: Stmts) -> str:
    """Render a statement sequence back to its payload text.

    Only sequences expressible in the file grammar (zero or one statement)
    can be rendered.
    """
    if not stmts:
        return "nop"
    if len(stmts) > 1:
        raise ValueError("the text format carries at most one statement per vertex")
    s = stmts[0]
    if isinstance(s, DefStmt):
        return f"def {s.var} {s.def_id}"
    if isinstance(s, UseStmt):
        return f"use {s.var}"
    if isinstance(s, AssignConst):
        return f"assign {s.var} = {s.value}"
    if isinstance(s, AssignBinOp):
        return f"assign {s.var} = {s.left} {s.op} {s.right}"
    if isinstance(s, AccessStmt):
        return f"access {s.block}"
    raise ValueError(f"unknown statement record {s!r}")
