"""Parsing for the plain-text expression, system, and operator grammars.

Expressions:  u[-1]^2 * v[0] + (1/3)*u[0]^3 - a*v[1]   with declared
parameter names as bare identifiers, ^ for integer powers, [k] for shifts.
Division is restricted to rationals and single-monomial divisors, keeping
everything an exact Laurent polynomial.

System files: one evolution equation per component plus optional
directives, e.g.

    # the leading example
    params: a, b
    u' = a*v[-1] - v[0]
    v' = v[0]*(b*u[0] - u[1])

Operator entries reuse the expression grammar extended with the symbols
I, D, D^k and S, where S denotes the inverse forward difference (D-I)^-1,
composed left to right with *.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .expr import LatticePoly
from .operators import DiffOperator, OpEntry
from .params import ParamCoeff
from .system import DdeSystem

_RESERVED = {"I", "D", "S"}

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<int>\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>\^|\[|\]|\(|\)|\+|-|\*|/|'|=|,|:))"
)


class ParseError(ValueError):
    """Syntax or semantic error with source position."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col
        self.message = message


@dataclass(frozen=True)
class Token:
    kind: str  # "int" | "name" | literal op | "end"
    text: str
    line: int
    col: int


def _tokenize(text: str, line_no: int) -> list[Token]:
    out: list[Token] = []
    pos = 0
    while pos < len(text):
        if text[pos : pos + 1].isspace():
            pos += 1
            continue
        if text[pos] == "#":
            break
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", line_no, pos + 1)
        col = m.start("int" if m.group("int") else "name" if m.group("name") else "op") + 1
        if m.group("int"):
            out.append(Token("int", m.group("int"), line_no, col))
        elif m.group("name"):
            out.append(Token("name", m.group("name"), line_no, col))
        else:
            out.append(Token(m.group("op"), m.group("op"), line_no, col))
        pos = m.end()
    out.append(Token("end", "", line_no, len(text) + 1))
    return out


class _ExprParser:
    """Recursive descent over one tokenized line.

    Values are OpEntry when operators are enabled, LatticePoly otherwise;
    operator atoms (I, D, S) are rejected in plain expression mode.
    """

    def __init__(
        self,
        tokens: list[Token],
        names: Sequence[str],
        params: Sequence[str],
        operators: bool = False,
    ):
        self.tokens = tokens
        self.i = 0
        self.names = {n: k for k, n in enumerate(names)}
        self.params = set(params)
        self.operators = operators

    # -- token plumbing ---------------------------------------------------

    @property
    def cur(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.cur
        self.i += 1
        return t

    def expect(self, kind: str) -> Token:
        if self.cur.kind != kind:
            raise ParseError(
                f"expected {kind!r}, found {self.cur.text or 'end of line'!r}",
                self.cur.line,
                self.cur.col,
            )
        return self.advance()

    def fail(self, message: str):
        raise ParseError(message, self.cur.line, self.cur.col)

    # -- grammar -------------------------------------------------------------

    def parse_poly(self) -> LatticePoly:
        value = self.sum_()
        self.expect("end")
        assert isinstance(value, LatticePoly)
        return value

    def parse_entry(self) -> OpEntry:
        value = self.sum_()
        self.expect("end")
        return value if isinstance(value, OpEntry) else OpEntry.local(value)

    def sum_(self):
        value = self.term()
        while self.cur.kind in ("+", "-"):
            op = self.advance().kind
            rhs = self.term()
            value, rhs = self._align(value, rhs)
            value = value + rhs if op == "+" else value - rhs
        return value

    def term(self):
        value = self.signed_factor()
        while self.cur.kind in ("*", "/"):
            op = self.advance().kind
            tok = self.cur
            rhs = self.signed_factor()
            if op == "*":
                value = self._mul(value, rhs)
            else:
                value = self._div(value, rhs, tok)
        return value

    def signed_factor(self):
        sign = 1
        while self.cur.kind in ("+", "-"):
            if self.advance().kind == "-":
                sign = -sign
        value = self.power()
        if sign < 0:
            value = value.scale(-1) if isinstance(value, OpEntry) else -value
        return value

    def power(self):
        base = self.atom()
        if self.cur.kind != "^":
            return base
        tok = self.advance()
        k = self._int_exponent()
        if isinstance(base, OpEntry):
            if base == OpEntry.shift(1):
                return OpEntry.shift(k)
            if k < 0:
                raise ParseError("negative operator powers only for D", tok.line, tok.col)
            out = OpEntry.identity()
            for _ in range(k):
                out = out.compose(base)
            return out
        if k < 0 and len(base) != 1:
            raise ParseError(
                "negative powers need a single-term divisor", tok.line, tok.col
            )
        return base**k

    def _int_exponent(self) -> int:
        sign = 1
        if self.cur.kind == "(":
            self.advance()
            if self.cur.kind == "-":
                self.advance()
                sign = -1
            k = int(self.expect("int").text)
            self.expect(")")
            return sign * k
        if self.cur.kind == "-":
            self.advance()
            sign = -1
        return sign * int(self.expect("int").text)

    def atom(self):
        tok = self.cur
        if tok.kind == "int":
            self.advance()
            return LatticePoly.const(int(tok.text))
        if tok.kind == "(":
            self.advance()
            value = self.sum_()
            self.expect(")")
            return value
        if tok.kind == "name":
            self.advance()
            name = tok.text
            if name in _RESERVED:
                if not self.operators:
                    raise ParseError(
                        f"{name} is an operator symbol, not a variable",
                        tok.line,
                        tok.col,
                    )
                if name == "I":
                    return OpEntry.identity()
                if name == "D":
                    return OpEntry.shift(1)
                return OpEntry.inverse_difference()
            if self.cur.kind == "[":
                self.advance()
                sign = 1
                if self.cur.kind == "-":
                    self.advance()
                    sign = -1
                k = sign * int(self.expect("int").text)
                self.expect("]")
                if name not in self.names:
                    raise ParseError(
                        f"unknown component {name!r}", tok.line, tok.col
                    )
                return LatticePoly.var(self.names[name], k)
            if name in self.params:
                return LatticePoly.const(ParamCoeff.param(name))
            if name in self.names:
                raise ParseError(
                    f"component {name!r} needs a shift, e.g. {name}[0]",
                    tok.line,
                    tok.col,
                )
            raise ParseError(f"unknown symbol {name!r}", tok.line, tok.col)
        self.fail(f"unexpected {tok.text or 'end of line'!r}")

    # -- mixed poly/operator arithmetic ----------------------------------------

    def _align(self, a, b):
        if isinstance(a, OpEntry) and isinstance(b, LatticePoly):
            return a, OpEntry.local(b)
        if isinstance(a, LatticePoly) and isinstance(b, OpEntry):
            return OpEntry.local(a), b
        return a, b

    def _mul(self, a, b):
        if isinstance(a, LatticePoly) and isinstance(b, LatticePoly):
            return a * b
        a2 = a if isinstance(a, OpEntry) else OpEntry.local(a)
        b2 = b if isinstance(b, OpEntry) else OpEntry.local(b)
        return a2.compose(b2)

    def _div(self, a, b, tok: Token):
        if not isinstance(b, LatticePoly):
            raise ParseError("cannot divide by an operator", tok.line, tok.col)
        if len(b) != 1:
            raise ParseError(
                "division only by rationals or single monomials", tok.line, tok.col
            )
        inv = b**-1
        if isinstance(a, OpEntry):
            return a.compose(OpEntry.local(inv))
        return a * inv


def parse_expression(
    text: str,
    names: Sequence[str],
    params: Sequence[str] = (),
    line_no: int = 1,
) -> LatticePoly:
    """Parse one polynomial expression against known component names."""
    return _ExprParser(_tokenize(text, line_no), names, params).parse_poly()


def parse_operator_entry(
    text: str,
    names: Sequence[str],
    params: Sequence[str] = (),
    line_no: int = 1,
) -> OpEntry:
    return _ExprParser(
        _tokenize(text, line_no), names, params, operators=True
    ).parse_entry()


_EQ_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*'\s*=")
_DIRECTIVE_RE = re.compile(r"^\s*(params|weight)\s*:")


def parse_system(text: str) -> DdeSystem:
    """Parse a system file into an evolution system.

    Components are indexed lexicographically by name; every referenced
    variable must appear on some left-hand side; right-hand sides must be
    polynomial (no negative powers).
    """
    lines = text.splitlines()
    params: list[str] = []
    equations: list[tuple[str, str, int, int]] = []  # name, rhs, line, col
    weight_lines: list[tuple[str, str, int]] = []

    for ln, raw in enumerate(lines, start=1):
        stripped = raw.split("#", 1)[0].rstrip()
        if not stripped.strip():
            continue
        d = _DIRECTIVE_RE.match(stripped)
        if d:
            body = stripped.split(":", 1)[1]
            if d.group(1) == "params":
                for piece in body.split(","):
                    name = piece.strip()
                    if not name:
                        continue
                    if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
                        raise ParseError(f"bad parameter name {name!r}", ln, 1)
                    if name in _RESERVED:
                        raise ParseError(f"{name!r} is reserved", ln, 1)
                    if name in params:
                        raise ParseError(f"duplicate parameter {name!r}", ln, 1)
                    params.append(name)
            else:
                if "=" not in body:
                    raise ParseError("weight directive needs name = value", ln, 1)
                lhs, rhs = body.split("=", 1)
                weight_lines.append((lhs.strip(), rhs.strip(), ln))
            continue
        m = _EQ_RE.match(stripped)
        if not m:
            raise ParseError(
                "expected an equation like u' = ... or a directive", ln, 1
            )
        name = m.group(1)
        if name in _RESERVED:
            raise ParseError(f"{name!r} is reserved", ln, 1)
        rhs_text = stripped[m.end() :]
        if any(name == other[0] for other in equations):
            raise ParseError(f"duplicate equation for {name!r}", ln, 1)
        equations.append((name, rhs_text, ln, m.end() + 1))

    if not equations:
        raise ParseError("no equations found", max(len(lines), 1), 1)
    names = tuple(sorted(e[0] for e in equations))
    overlap = set(names) & set(params)
    if overlap:
        raise ParseError(
            f"{sorted(overlap)[0]!r} declared both as component and parameter", 1, 1
        )

    rhs: list[LatticePoly | None] = [None] * len(names)
    index = {n: i for i, n in enumerate(names)}
    for name, rhs_text, ln, _col in equations:
        p = parse_expression(rhs_text, names, params, line_no=ln)
        if p.has_negative_exponent():
            raise ParseError(
                "non-polynomial right-hand side (division by a variable)", ln, 1
            )
        rhs[index[name]] = p

    pins: dict[int, Fraction] = {}
    for wname, wval, ln in weight_lines:
        if wname not in index:
            raise ParseError(f"weight for unknown component {wname!r}", ln, 1)
        try:
            if "/" in wval:
                num, den = wval.split("/")
                pins[index[wname]] = Fraction(int(num), int(den))
            else:
                pins[index[wname]] = Fraction(int(wval))
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"bad weight value {wval!r}", ln, 1) from None

    return DdeSystem(names, tuple(rhs), tuple(params), pins)  # type: ignore[arg-type]


def render_system(sys: DdeSystem) -> str:
    from .expr import render_poly

    lines = []
    if sys.params:
        lines.append("params: " + ", ".join(sys.params))
    for name, f in zip(sys.names, sys.rhs):
        lines.append(f"{name}' = {render_poly(f, sys.names)}")
    for i, val in sorted(sys.weight_pins.items()):
        lines.append(f"weight: {sys.names[i]} = {val}")
    return "\n".join(lines)


_ASSIGN_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*)$")
_MATRIX_RE = re.compile(r"^\s*R\s*\[\s*(\d+)\s*\]\s*\[\s*(\d+)\s*\]\s*=\s*(.*)$")


def parse_assignments(text: str) -> list[tuple[str, str, int]]:
    """key = expression lines with comments stripped; returns (key, rhs, line)."""
    out = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].rstrip()
        if not stripped.strip():
            continue
        m = _ASSIGN_RE.match(stripped)
        if not m:
            raise ParseError("expected key = expression", ln, 1)
        out.append((m.group(1), m.group(2), ln))
    return out


def parse_operator_matrix(
    text: str, names: Sequence[str], params: Sequence[str] = ()
) -> DiffOperator:
    """Parse R[i][j] = <entry> lines (1-based indices) into an operator."""
    n = len(names)
    entries = [[OpEntry.zero() for _ in range(n)] for _ in range(n)]
    seen = set()
    for ln, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].rstrip()
        if not stripped.strip():
            continue
        m = _MATRIX_RE.match(stripped)
        if not m:
            raise ParseError("expected R[i][j] = <operator entry>", ln, 1)
        i, j = int(m.group(1)) - 1, int(m.group(2)) - 1
        if not (0 <= i < n and 0 <= j < n):
            raise ParseError(f"entry index out of range for {n} components", ln, 1)
        if (i, j) in seen:
            raise ParseError(f"duplicate entry R[{i + 1}][{j + 1}]", ln, 1)
        seen.add((i, j))
        entries[i][j] = parse_operator_entry(m.group(3), names, params, line_no=ln)
    return DiffOperator(entries)
