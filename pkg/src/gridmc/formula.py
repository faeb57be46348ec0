"""Excel-style formula language: tokenizer, recursive-descent parser, AST, renderer.

Grammar (whitespace-insensitive, function names case-insensitive):

    formula := "=" expr | number
    expr    := cmp
    cmp     := add (("=" | "<>" | "<" | "<=" | ">" | ">=") add)?
    add     := mul (("+" | "-") mul)*
    mul     := pow (("*" | "/") pow)*
    pow     := unary ("^" unary)*
    unary   := "-" unary | atom
    atom    := number | cellref | call | "(" expr ")"
    call    := name "(" args ")"
    args    := (expr | range) ("," (expr | range))*
    range   := cellref ":" cellref

Ranges are only legal as function arguments.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .cells import CellRef, parse_cell


class FormulaError(ValueError):
    """Parse failure with a character position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


# ---------------------------------------------------------------------------
# AST nodes

@dataclass(frozen=True)
class Lit:
    value: float


@dataclass(frozen=True)
class Ref:
    cell: CellRef


@dataclass(frozen=True)
class RangeRef:
    start: CellRef
    end: CellRef

    def cells(self):
        """All cells of the rectangle in row-major order."""
        r0, r1 = sorted((self.start.row, self.end.row))
        c0, c1 = sorted((self.start.col, self.end.col))
        return [CellRef(c, r) for r in range(r0, r1 + 1) for c in range(c0, c1 + 1)]

    @property
    def n_cols(self) -> int:
        return abs(self.start.col - self.end.col) + 1

    @property
    def n_rows(self) -> int:
        return abs(self.start.row - self.end.row) + 1


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class Bin:
    op: str  # one of + - * / ^ = <> < <= > >=
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str  # canonical upper-case
    args: tuple  # of Node | RangeRef


Node = Lit | Ref | Neg | Bin | Call

# name -> (min arity, max arity or None for variadic)
FUNCTIONS = {
    "IF": (3, 3),
    "SUM": (1, None),
    "AVERAGE": (1, None),
    "MIN": (1, None),
    "MAX": (1, None),
    "ABS": (1, 1),
    "SQRT": (1, 1),
    "LN": (1, 1),
    "EXP": (1, 1),
    "NPV": (2, None),
    "IRR": (1, 2),
    "LOOKUP": (3, 3),
}


# ---------------------------------------------------------------------------
# Tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<number>[0-9]+(?:\.[0-9]*)?(?:[eE][+-]?[0-9]+)?|\.[0-9]+(?:[eE][+-]?[0-9]+)?)
    | (?P<ident>[A-Za-z]{1,8}[0-9]*)
    | (?P<op><>|<=|>=|[=<>+\-*/^(),:]|−)
    | (?P<ws>\s+)
    """,
    re.VERBOSE,
)


def _tokenize(text: str, offset: int = 0):
    tokens = []  # (kind, value, position in the original formula text)
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise FormulaError(f"unexpected character {text[pos]!r}", pos + offset)
        kind = m.lastgroup
        if kind != "ws":
            value = m.group()
            if kind == "op" and value == "−":
                value = "-"
            tokens.append((kind, value, pos + offset))
        pos = m.end()
    tokens.append(("eof", "", len(text) + offset))
    return tokens


_CELLREF_RE = re.compile(r"^[A-Za-z]{1,2}[1-9][0-9]*$")


class _Parser:
    def __init__(self, text: str, tokens):
        self.text = text
        self.tokens = tokens
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.peek()
        if val != value:
            raise FormulaError(f"expected {value!r}", pos)
        return self.next()

    def fail(self, expected: str):
        kind, val, pos = self.peek()
        raise FormulaError(f"expected {expected}", pos)

    # grammar rules -----------------------------------------------------

    def parse_expr(self) -> Node:
        left = self.parse_add()
        kind, val, _ = self.peek()
        if val in ("=", "<>", "<", "<=", ">", ">="):
            self.next()
            right = self.parse_add()
            return Bin(val, left, right)
        return left

    def parse_add(self) -> Node:
        node = self.parse_mul()
        while self.peek()[1] in ("+", "-"):
            op = self.next()[1]
            node = Bin(op, node, self.parse_mul())
        return node

    def parse_mul(self) -> Node:
        node = self.parse_pow()
        while self.peek()[1] in ("*", "/"):
            op = self.next()[1]
            node = Bin(op, node, self.parse_pow())
        return node

    def parse_pow(self) -> Node:
        node = self.parse_unary()
        while self.peek()[1] == "^":
            self.next()
            node = Bin("^", node, self.parse_unary())
        return node

    def parse_unary(self) -> Node:
        if self.peek()[1] == "-":
            self.next()
            return Neg(self.parse_unary())
        return self.parse_atom()

    def parse_atom(self) -> Node:
        kind, val, pos = self.peek()
        if kind == "number":
            self.next()
            return Lit(float(val))
        if kind == "ident":
            return self.parse_ident()
        if val == "(":
            self.next()
            node = self.parse_expr()
            self.expect(")")
            return node
        self.fail("expression")

    def parse_ident(self) -> Node:
        kind, val, pos = self.next()
        if _CELLREF_RE.match(val):
            return Ref(parse_cell(val))
        name = val.upper()
        if self.peek()[1] != "(":
            raise FormulaError(f"expected '(' after function name {name}", self.peek()[2])
        if name not in FUNCTIONS:
            raise FormulaError(f"unknown function {name}", pos)
        self.next()
        args = [self.parse_arg()]
        while self.peek()[1] == ",":
            self.next()
            args.append(self.parse_arg())
        self.expect(")")
        lo, hi = FUNCTIONS[name]
        if len(args) < lo or (hi is not None and len(args) > hi):
            raise FormulaError(
                f"{name} takes {lo}{'' if hi == lo else ('+' if hi is None else f'..{hi}')}"
                f" arguments, got {len(args)}",
                pos,
            )
        return Call(name, tuple(args))

    def parse_arg(self):
        # A range is only valid here: cellref ":" cellref.
        kind, val, pos = self.peek()
        if kind == "ident" and _CELLREF_RE.match(val) and self.tokens[self.i + 1][1] == ":":
            self.next()
            self.next()  # ":"
            kind2, val2, pos2 = self.next()
            if kind2 != "ident" or not _CELLREF_RE.match(val2):
                raise FormulaError("expected cell address after ':'", pos2)
            return RangeRef(parse_cell(val), parse_cell(val2))
        return self.parse_expr()


def parse_formula(text: str) -> Node:
    """Parse a formula ("=...") or a bare numeric literal into an AST."""
    stripped = text.strip()
    if stripped.startswith("="):
        body = stripped[1:]
        offset = text.index("=") + 1
        tokens = _tokenize(body, offset)
        p = _Parser(body, tokens)
        node = p.parse_expr()
        kind, val, pos = p.peek()
        if kind != "eof":
            raise FormulaError(f"unexpected token {val!r}", pos)
        return node
    try:
        return Lit(float(stripped))
    except ValueError:
        raise FormulaError("expected '=' formula or numeric literal", 0) from None


# ---------------------------------------------------------------------------
# Rendering (canonical text; reparses to an equal AST)

_PRECEDENCE = {"=": 1, "<>": 1, "<": 1, "<=": 1, ">": 1, ">=": 1,
               "+": 2, "-": 2, "*": 3, "/": 3, "^": 4}


def _render(node, parent_prec: int, right_side: bool) -> str:
    if isinstance(node, Lit):
        v = node.value
        text = repr(int(v)) if v == int(v) and abs(v) < 1e15 else repr(v)
        return text
    if isinstance(node, Ref):
        return str(node.cell)
    if isinstance(node, RangeRef):
        return f"{node.start}:{node.end}"
    if isinstance(node, Neg):
        inner = _render(node.operand, 5, False)
        text = f"-{inner}"
        return f"({text})" if parent_prec >= 4 else text
    if isinstance(node, Bin):
        prec = _PRECEDENCE[node.op]
        # comparisons are non-associative: parenthesize equal-precedence
        # children on both sides
        left = _render(node.left, prec, prec == 1)
        right = _render(node.right, prec, True)
        text = f"{left}{node.op}{right}"
        if prec < parent_prec or (prec == parent_prec and right_side):
            return f"({text})"
        return text
    if isinstance(node, Call):
        args = ",".join(_render(a, 0, False) for a in node.args)
        return f"{node.name}({args})"
    raise TypeError(f"not an AST node: {node!r}")


def render_formula(node: Node) -> str:
    """Render an AST back to formula text; parse(render(x)) == x."""
    return "=" + _render(node, 0, False)


def referenced_cells(node) -> set:
    """Every cell a formula reads, with ranges expanded."""
    out = set()
    stack = [node]
    while stack:
        n = stack.pop()
        if isinstance(n, Ref):
            out.add(n.cell)
        elif isinstance(n, RangeRef):
            out.update(n.cells())
        elif isinstance(n, Neg):
            stack.append(n.operand)
        elif isinstance(n, Bin):
            stack.append(n.left)
            stack.append(n.right)
        elif isinstance(n, Call):
            stack.extend(n.args)
    return out
