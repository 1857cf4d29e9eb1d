"""Haskell source helpers: type grammar, signature extraction, literals.

The supported type grammar is deliberately small — base types plus lists,
2/3-tuples and Maybe — because every type in it admits decidable literal
synthesis and parsing. Anything else (type variables, constraints, records,
function-typed arguments) is rejected at signature extraction.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from typing import Iterator

from .errors import (
    DepthExhausted,
    LiteralParseError,
    NoSignature,
    UnsupportedType,
)

BASE_TYPES = ("Int", "Integer", "Bool", "Char", "Double", "String")
COMPOSITE_TYPES = ("List", "Tuple", "Maybe")

LITERAL_ALPHABET = "abcdefghijklmnopqrstuvwxyz0123456789"

INT_RANGE = (-100, 100)
DOUBLE_RANGE = (-100.0, 100.0)
MAX_LIST_LEN = 5


@dataclass(frozen=True)
class TypeExpr:
    """A node in the supported type grammar."""

    con: str
    args: tuple["TypeExpr", ...] = ()

    def __post_init__(self) -> None:
        if self.con in BASE_TYPES:
            if self.args:
                raise ValueError(f"{self.con} takes no arguments")
        elif self.con in ("List", "Maybe"):
            if len(self.args) != 1:
                raise ValueError(f"{self.con} takes exactly one argument")
        elif self.con == "Tuple":
            if len(self.args) not in (2, 3):
                raise ValueError("Tuple takes 2 or 3 arguments")
        else:
            raise ValueError(f"unknown type constructor {self.con!r}")

    @property
    def is_base(self) -> bool:
        return self.con in BASE_TYPES

    def __str__(self) -> str:
        return render_type(self)


INT = TypeExpr("Int")
INTEGER = TypeExpr("Integer")
BOOL = TypeExpr("Bool")
CHAR = TypeExpr("Char")
DOUBLE = TypeExpr("Double")
STRING = TypeExpr("String")


def list_of(t: TypeExpr) -> TypeExpr:
    return TypeExpr("List", (t,))


def maybe_of(t: TypeExpr) -> TypeExpr:
    return TypeExpr("Maybe", (t,))


def tuple_of(*ts: TypeExpr) -> TypeExpr:
    return TypeExpr("Tuple", tuple(ts))


def render_type(t: TypeExpr) -> str:
    """Render a TypeExpr in Haskell type syntax."""
    if t.is_base:
        return t.con
    if t.con == "List":
        return f"[{render_type(t.args[0])}]"
    if t.con == "Tuple":
        return "(" + ", ".join(render_type(a) for a in t.args) + ")"
    inner = t.args[0]
    rendered = render_type(inner)
    if inner.con == "Maybe":
        rendered = f"({rendered})"
    return f"Maybe {rendered}"


@dataclass(frozen=True)
class SignatureInfo:
    """Name and arrow-decomposed type of a top-level function."""

    function_name: str
    arg_types: tuple[TypeExpr, ...]
    result_type: TypeExpr

    @property
    def arity(self) -> int:
        return len(self.arg_types)

    def render(self) -> str:
        parts = [render_type(t) for t in self.arg_types]
        parts.append(render_type(self.result_type))
        return f"{self.function_name} :: " + " -> ".join(parts)


# --- type parsing ---

_TYPE_TOKEN = re.compile(r"\s*(->|=>|[\[\](),]|[A-Za-z][A-Za-z0-9_']*|\S)")


def _tokenize_type(text: str) -> list[str]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TYPE_TOKEN.match(text, pos)
        if not m:
            break
        tokens.append(m.group(1))
        pos = m.end()
    return tokens


class _TypeParser:
    def __init__(self, tokens: list[str], source: str):
        self.tokens = tokens
        self.source = source
        self.pos = 0

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise UnsupportedType(f"unexpected end of type: {self.source!r}")
        self.pos += 1
        return tok

    def expect(self, tok: str) -> None:
        got = self.take()
        if got != tok:
            raise UnsupportedType(f"expected {tok!r}, got {got!r} in {self.source!r}")

    def parse_segments(self) -> list[TypeExpr]:
        """Parse `t1 -> t2 -> ... -> tn` into its top-level segments."""
        segments = [self.parse_type()]
        while self.peek() == "->":
            self.take()
            segments.append(self.parse_type())
        if self.peek() is not None:
            raise UnsupportedType(f"trailing tokens in type: {self.source!r}")
        return segments

    def parse_type(self) -> TypeExpr:
        tok = self.peek()
        if tok == "Maybe":
            self.take()
            return maybe_of(self.parse_atom())
        return self.parse_atom()

    def parse_atom(self) -> TypeExpr:
        tok = self.take()
        if tok == "=>":
            raise UnsupportedType(f"typeclass constraints unsupported: {self.source!r}")
        if tok == "[":
            inner = self.parse_type()
            self.expect("]")
            return list_of(inner)
        if tok == "(":
            if self.peek() == ")":
                raise UnsupportedType(f"unit type unsupported: {self.source!r}")
            elems = [self.parse_type()]
            while self.peek() == ",":
                self.take()
                elems.append(self.parse_type())
            if self.peek() == "->":
                raise UnsupportedType(f"function-typed component unsupported: {self.source!r}")
            self.expect(")")
            if len(elems) == 1:
                return elems[0]
            if len(elems) > 3:
                raise UnsupportedType(f"tuples wider than 3 unsupported: {self.source!r}")
            return tuple_of(*elems)
        if tok in BASE_TYPES:
            return TypeExpr(tok)
        if tok and tok[0].islower():
            raise UnsupportedType(f"type variable {tok!r} unsupported: {self.source!r}")
        raise UnsupportedType(f"type {tok!r} outside supported grammar: {self.source!r}")


def parse_type_expr(text: str) -> TypeExpr:
    """Parse a single type (no top-level arrows) from Haskell syntax."""
    parser = _TypeParser(_tokenize_type(text), text)
    result = parser.parse_type()
    if parser.peek() is not None:
        raise UnsupportedType(f"trailing tokens in type: {text!r}")
    return result


def parse_arrow_type(text: str) -> tuple[tuple[TypeExpr, ...], TypeExpr]:
    """Decompose `a -> b -> r` into ((a, b), r)."""
    if "=>" in text:
        raise UnsupportedType(f"typeclass constraints unsupported: {text!r}")
    segments = _TypeParser(_tokenize_type(text), text).parse_segments()
    return tuple(segments[:-1]), segments[-1]


# --- signature extraction ---

_SIG_LINE = re.compile(r"^([a-z_][A-Za-z0-9_']*)\s*::\s*(.+)$")
_BARE_EQUALS = re.compile(r"(?<![=<>/!~])=(?!=)")


def strip_comments(code: str) -> str:
    """Remove line and block comments; string literals are respected."""
    out: list[str] = []
    i = 0
    n = len(code)
    in_string = False
    block_depth = 0
    while i < n:
        ch = code[i]
        nxt = code[i + 1] if i + 1 < n else ""
        if block_depth:
            if ch == "{" and nxt == "-":
                block_depth += 1
                i += 2
            elif ch == "-" and nxt == "}":
                block_depth -= 1
                i += 2
            else:
                i += 1
            continue
        if in_string:
            out.append(ch)
            if ch == "\\" and nxt:
                out.append(nxt)
                i += 2
                continue
            if ch == '"':
                in_string = False
            i += 1
            continue
        if ch == '"':
            in_string = True
            out.append(ch)
            i += 1
            continue
        if ch == "{" and nxt == "-":
            block_depth = 1
            i += 2
            continue
        if ch == "-" and nxt == "-":
            while i < n and code[i] != "\n":
                i += 1
            continue
        out.append(ch)
        i += 1
    return "".join(out)


def _logical_lines(code: str) -> list[str]:
    """Join indented continuation lines onto their top-level line."""
    lines: list[str] = []
    for raw in code.splitlines():
        if not raw.strip():
            continue
        if raw[0].isspace() and lines:
            lines[-1] = lines[-1] + " " + raw.strip()
        else:
            lines.append(raw.rstrip())
    return lines


def extract_signature(code: str) -> SignatureInfo:
    """Find the first top-level signature whose name also has an equation.

    Raises NoSignature when nothing parsable is found, UnsupportedType when
    the chosen signature falls outside the supported grammar.
    """
    lines = _logical_lines(strip_comments(code))
    defined: set[str] = set()
    for line in lines:
        m = re.match(r"^([a-z_][A-Za-z0-9_']*)(?![A-Za-z0-9_'])", line)
        if m and "::" not in line.split("=")[0] and _BARE_EQUALS.search(line):
            defined.add(m.group(1))
    for line in lines:
        m = _SIG_LINE.match(line)
        if not m:
            continue
        name, type_text = m.group(1), m.group(2)
        if name not in defined:
            continue
        arg_types, result_type = parse_arrow_type(type_text.strip())
        return SignatureInfo(name, arg_types, result_type)
    raise NoSignature("no top-level signature with a matching defining equation")


# --- literal synthesis ---


def synthesize_literal(t: TypeExpr, seed: int, depth_budget: int = 3) -> str:
    """Produce a Haskell literal of type `t`, deterministic in (t, seed, depth)."""
    rng = random.Random(f"lit|{seed}|{render_type(t)}|{depth_budget}")
    return _synth(t, rng, depth_budget)


def _synth(t: TypeExpr, rng: random.Random, depth: int) -> str:
    if t.con in ("Int", "Integer"):
        return str(rng.randint(*INT_RANGE))
    if t.con == "Double":
        return f"{rng.uniform(*DOUBLE_RANGE):.2f}"
    if t.con == "Bool":
        return rng.choice(["False", "True"])
    if t.con == "Char":
        return f"'{rng.choice(LITERAL_ALPHABET)}'"
    if t.con == "String":
        length = rng.randint(0, 5)
        return '"' + "".join(rng.choice(LITERAL_ALPHABET) for _ in range(length)) + '"'
    if t.con == "List":
        if depth <= 0:
            return "[]"
        max_len = min(MAX_LIST_LEN, depth + 1)
        length = 0
        while length < max_len and rng.random() < 0.6:
            length += 1
        elems = [_synth(t.args[0], rng, depth - 1) for _ in range(length)]
        return "[" + ", ".join(elems) + "]"
    if t.con == "Maybe":
        if depth <= 0 or rng.random() < 0.3:
            return "Nothing"
        inner = _synth(t.args[0], rng, depth - 1)
        return f"Just {_paren_if_needed(inner)}"
    if t.con == "Tuple":
        if depth <= 0:
            raise DepthExhausted(f"no {render_type(t)} literal at depth 0")
        elems = [_synth(a, rng, depth - 1) for a in t.args]
        return "(" + ", ".join(elems) + ")"
    raise UnsupportedType(f"cannot synthesize {t.con}")


def _paren_if_needed(literal: str) -> str:
    if literal.startswith("-"):
        return f"({literal})"
    if " " in literal and literal[0] not in "[(\"'":
        return f"({literal})"
    return literal


# --- literal parsing (typed) ---

_LIT_TOKEN = re.compile(
    r"""\s*(?:
        (?P<float>-?\d+\.\d+(?:[eE][-+]?\d+)?)
      | (?P<int>-?\d+)
      | (?P<char>'(?:\\.|[^'\\])')
      | (?P<string>"(?:\\.|[^"\\])*")
      | (?P<ident>[A-Za-z][A-Za-z0-9_']*)
      | (?P<sym>[\[\](),])
    )""",
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    start: int
    end: int


def _tokenize_literal(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _LIT_TOKEN.match(text, pos)
        if not m:
            raise LiteralParseError(f"bad literal syntax at {text[pos:pos+10]!r}")
        kind = m.lastgroup or "sym"
        tokens.append(_Token(kind, m.group(m.lastgroup), m.start(m.lastgroup), m.end(m.lastgroup)))
        pos = m.end()
    return tokens


_STRING_ESCAPES = {"n": "\n", "t": "\t", "\\": "\\", '"': '"', "'": "'", "0": "\0"}


def _unescape(body: str) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body):
            out.append(_STRING_ESCAPES.get(body[i + 1], body[i + 1]))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


class _LiteralParser:
    def __init__(self, tokens: list[_Token], source: str):
        self.tokens = tokens
        self.source = source
        self.pos = 0

    def peek(self) -> _Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> _Token:
        tok = self.peek()
        if tok is None:
            raise LiteralParseError(f"unexpected end of literal: {self.source!r}")
        self.pos += 1
        return tok

    def expect_sym(self, sym: str) -> None:
        tok = self.take()
        if tok.kind != "sym" or tok.text != sym:
            raise LiteralParseError(f"expected {sym!r}, got {tok.text!r} in {self.source!r}")

    def parse(self, t: TypeExpr):
        tok = self.peek()
        if tok is None:
            raise LiteralParseError(f"unexpected end of literal: {self.source!r}")
        # grouping parens are legal around any literal; tuples keep theirs
        if tok.text == "(" and tok.kind == "sym" and t.con != "Tuple":
            self.take()
            value = self.parse(t)
            self.expect_sym(")")
            return value
        if t.con in ("Int", "Integer"):
            tok = self.take()
            if tok.kind != "int":
                raise LiteralParseError(f"expected integer, got {tok.text!r}")
            return int(tok.text)
        if t.con == "Double":
            tok = self.take()
            if tok.kind not in ("float", "int"):
                raise LiteralParseError(f"expected double, got {tok.text!r}")
            return float(tok.text)
        if t.con == "Bool":
            tok = self.take()
            if tok.kind == "ident" and tok.text in ("True", "False"):
                return tok.text == "True"
            raise LiteralParseError(f"expected Bool, got {tok.text!r}")
        if t.con == "Char":
            tok = self.take()
            if tok.kind != "char":
                raise LiteralParseError(f"expected Char, got {tok.text!r}")
            return _unescape(tok.text[1:-1])
        if t.con == "String":
            tok = self.take()
            if tok.kind != "string":
                raise LiteralParseError(f"expected String, got {tok.text!r}")
            return _unescape(tok.text[1:-1])
        if t.con == "List":
            self.expect_sym("[")
            items = []
            nxt = self.peek()
            if nxt is not None and nxt.text == "]":
                self.take()
                return items
            while True:
                items.append(self.parse(t.args[0]))
                tok = self.take()
                if tok.text == "]":
                    return items
                if tok.text != ",":
                    raise LiteralParseError(f"expected ',' or ']', got {tok.text!r}")
        if t.con == "Tuple":
            self.expect_sym("(")
            items = [self.parse(t.args[0])]
            for elem_t in t.args[1:]:
                self.expect_sym(",")
                items.append(self.parse(elem_t))
            self.expect_sym(")")
            return tuple(items)
        if t.con == "Maybe":
            tok = self.take()
            if tok.kind == "ident" and tok.text == "Nothing":
                return None
            if tok.kind == "ident" and tok.text == "Just":
                return ("Just", self.parse(t.args[0]))
            raise LiteralParseError(f"expected Maybe, got {tok.text!r}")
        raise UnsupportedType(f"cannot parse {t.con}")


def parse_literal(text: str, t: TypeExpr):
    """Parse `text` as a literal of type `t`; returns the Python value."""
    parser = _LiteralParser(_tokenize_literal(text), text)
    value = parser.parse(t)
    if parser.peek() is not None:
        raise LiteralParseError(f"trailing tokens in literal: {text!r}")
    return value


def parse_input_literals(text: str, arg_types: tuple[TypeExpr, ...]) -> list[str]:
    """Split an application-style input into one literal text per argument.

    For arity 1 the whole text is the literal; otherwise literals are parsed
    type-directed in sequence so e.g. `Just 3` never splits in two.
    """
    text = text.strip()
    if len(arg_types) == 1:
        parse_literal(text, arg_types[0])
        return [text]
    tokens = _tokenize_literal(text)
    parser = _LiteralParser(tokens, text)
    slices = []
    for t in arg_types:
        start_tok = parser.peek()
        if start_tok is None:
            raise LiteralParseError(f"too few literals for arity {len(arg_types)}: {text!r}")
        parser.parse(t)
        end_tok = parser.tokens[parser.pos - 1]
        slices.append(text[start_tok.start : end_tok.end])
    if parser.peek() is not None:
        raise LiteralParseError(f"trailing tokens in input: {text!r}")
    return slices


# --- Haskell `show` rendering for simulated execution ---


def hask_show(value, t: TypeExpr) -> str:
    """Format a Python value as GHC's `show` would for type `t`."""
    if t.con in ("Int", "Integer"):
        return str(value)
    if t.con == "Double":
        return _show_double(float(value))
    if t.con == "Bool":
        return "True" if value else "False"
    if t.con == "Char":
        return "'" + _escape_char(value) + "'"
    if t.con == "String":
        return '"' + "".join(_escape_char(c, in_string=True) for c in value) + '"'
    if t.con == "List":
        return "[" + ",".join(hask_show(v, t.args[0]) for v in value) + "]"
    if t.con == "Tuple":
        return "(" + ",".join(hask_show(v, a) for v, a in zip(value, t.args)) + ")"
    if t.con == "Maybe":
        if value is None:
            return "Nothing"
        inner = hask_show(value[1], t.args[0])
        if inner.startswith("-") or (" " in inner and inner[0] not in "[(\"'"):
            inner = f"({inner})"
        return f"Just {inner}"
    raise UnsupportedType(f"cannot show {t.con}")


def _show_double(v: float) -> str:
    if v != v or v in (float("inf"), float("-inf")):
        return {float("inf"): "Infinity", float("-inf"): "-Infinity"}.get(v, "NaN")
    text = repr(v)
    if "e" in text or "E" in text:
        return text
    if "." not in text:
        text += ".0"
    return text


_CHAR_ESCAPES = {"\n": "\\n", "\t": "\\t", "\\": "\\\\"}


def _escape_char(c: str, in_string: bool = False) -> str:
    if c in _CHAR_ESCAPES:
        return _CHAR_ESCAPES[c]
    if in_string and c == '"':
        return '\\"'
    if not in_string and c == "'":
        return "\\'"
    return c


def normalize_code(code: str) -> str:
    """Whitespace-normalized source, for dedup and identity checks."""
    return " ".join(code.split())


def iter_type_exprs(max_depth: int = 2) -> Iterator[TypeExpr]:
    """Enumerate grammar members up to a nesting depth (test support)."""
    bases = [TypeExpr(b) for b in BASE_TYPES]
    if max_depth == 0:
        yield from bases
        return
    inner = list(iter_type_exprs(max_depth - 1))
    yield from bases
    for t in inner:
        yield list_of(t)
        yield maybe_of(t)
    for a in bases:
        for b in bases:
            yield tuple_of(a, b)
