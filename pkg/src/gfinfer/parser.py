"""Text format: tokenizer, recursive-descent parser and pretty-printer."""

from __future__ import annotations

import bisect
import re
from dataclasses import dataclass
from fractions import Fraction

from . import ast as A
from .errors import FrontEndError

KEYWORDS = {"skip", "observe", "if", "else", "fail", "in", "not", "and", "or"}
RESERVED_PREFIX = "__"

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<number>\d+(?:\.\d+)?)
  | (?P<ident>[^\W\d]\w*)
  | (?P<op>:=|\+=|\+~|!=|<=|>=|[~;{}(),*+=<>/])
""", re.VERBOSE | re.UNICODE)


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int
    line: int
    column: int

    def __str__(self):
        return f"{self.line}:{self.column}"


class ParseError(FrontEndError):
    def __init__(self, message, span: SourceSpan, expected=()):
        super().__init__(f"{span}: {message}")
        self.message = message
        self.span = span
        self.expected = list(expected)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    span: SourceSpan


def _line_starts(text):
    return [0] + [m.end() for m in re.finditer("\n", text)]


def _span(starts, start, end):
    line = bisect.bisect_right(starts, start)
    return SourceSpan(start, end, line, start - starts[line - 1] + 1)


def tokenize(text: str) -> list[Token]:
    tokens = []
    starts = _line_starts(text)
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", _span(starts, pos, pos + 1))
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            word = m.group()
            if kind == "ident" and word in KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, word, _span(starts, m.start(), m.end())))
        pos = m.end()
    tokens.append(Token("eof", "", _span(starts, len(text), len(text))))
    return tokens


class Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.pos = 0
        self.vars: dict[str, A.VarId] = {}

    # token helpers
    @property
    def tok(self):
        return self.tokens[self.pos]

    def error(self, message, expected=(), tok=None):
        tok = tok or self.tok
        return ParseError(message, tok.span, expected)

    def at(self, text):
        return self.tok.text == text and self.tok.kind in ("op", "kw")

    def expect(self, text):
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}", [text])
        tok = self.tok
        self.pos += 1
        return tok

    def variable(self, tok):
        name = tok.text
        if name.startswith(RESERVED_PREFIX):
            raise ParseError(f"identifiers starting with {RESERVED_PREFIX!r} are reserved", tok.span)
        v = self.vars.get(name)
        if v is None:
            v = A.VarId(len(self.vars), name)
            self.vars[name] = v
        return v

    def ident(self):
        if self.tok.kind != "ident":
            raise self.error(f"expected a variable name, found {self.tok.text or 'end of input'!r}",
                             ["identifier"])
        tok = self.tok
        self.pos += 1
        return self.variable(tok)

    def rational(self):
        tok = self.tok
        if tok.kind != "number":
            raise self.error(f"expected a number, found {tok.text or 'end of input'!r}", ["number"])
        self.pos += 1
        value = Fraction(tok.text)
        if self.at("/"):
            self.pos += 1
            den_tok = self.tok
            if den_tok.kind != "number":
                raise self.error("expected a denominator", ["number"])
            self.pos += 1
            den = Fraction(den_tok.text)
            if den == 0:
                raise ParseError("division by zero in literal", den_tok.span)
            value = value / den
        return value

    def nat(self):
        tok = self.tok
        if tok.kind != "number" or "." in tok.text:
            raise self.error(f"expected a natural number, found {tok.text or 'end of input'!r}",
                             ["natural number"])
        self.pos += 1
        return int(tok.text)

    # grammar
    def program(self):
        stmts = self.block_body(top=True)
        body = A.Seq(tuple(stmts))
        variables = tuple(sorted(self.vars.values(), key=lambda v: v.index))
        return A.Program(variables, body, A.last_written(body))

    def block_body(self, top=False):
        stmts = []
        while not (self.tok.kind == "eof" or (not top and self.at("}"))):
            stmts.append(self.statement())
        return stmts

    def block(self):
        self.expect("{")
        stmts = self.block_body()
        self.expect("}")
        return A.Seq(tuple(stmts))

    def statement(self):
        tok = self.tok
        if self.at("skip"):
            self.pos += 1
            self.expect(";")
            return A.Skip()
        if self.at("fail"):
            self.pos += 1
            self.expect(";")
            return A.Fail()
        if self.at("observe"):
            self.pos += 1
            cond = self.cond()
            self.expect(";")
            if isinstance(cond, A.SampleCond):
                return A.ObserveFrom(cond.value, cond.dist)
            return A.Observe(cond)
        if self.at("if"):
            self.pos += 1
            cond = self.cond()
            then = self.block()
            orelse = A.Seq()
            if self.at("else"):
                self.pos += 1
                orelse = self.block()
            return A.If(cond, then, orelse)
        if tok.kind == "ident":
            target = self.ident()
            op = self.tok
            if self.at(":=") or self.at("+="):
                self.pos += 1
                coeffs, const = self.affine()
                self.expect(";")
                cls = A.Affine if op.text == ":=" else A.AddAssign
                return cls(target, coeffs, const)
            if self.at("~") or self.at("+~"):
                self.pos += 1
                dist = self.dist()
                self.expect(";")
                cls = A.Sample if op.text == "~" else A.AddSample
                return cls(target, dist)
            raise self.error(f"expected ':=', '+=', '~' or '+~', found {op.text or 'end of input'!r}",
                             [":=", "+=", "~", "+~"])
        raise self.error(f"expected a statement, found {tok.text or 'end of input'!r}",
                         ["skip", "fail", "observe", "if", "identifier"])

    def affine(self):
        terms = []
        const = Fraction(0)
        while True:
            if self.tok.kind == "ident":
                terms.append((self.ident(), Fraction(1)))
            else:
                c = self.rational()
                if self.at("*"):
                    self.pos += 1
                    terms.append((self.ident(), c))
                else:
                    const += c
            if not self.at("+"):
                break
            self.pos += 1
        coeffs, const = A.make_affine(terms, const)
        return coeffs, const

    def cond(self):
        left = self.cond_and()
        while self.at("or"):
            self.pos += 1
            left = A.Or(left, self.cond_and())
        return left

    def cond_and(self):
        left = self.cond_not()
        while self.at("and"):
            self.pos += 1
            left = A.And(left, self.cond_not())
        return left

    def cond_not(self):
        if self.at("not"):
            self.pos += 1
            return A.Not(self.cond_not())
        return self.cond_atom()

    def cond_atom(self):
        if self.at("("):
            self.pos += 1
            c = self.cond()
            self.expect(")")
            return c
        if self.tok.kind == "number":
            value = self.nat()
            self.expect("~")
            return A.SampleCond(value, self.dist())
        v = self.ident()
        if self.at("in"):
            self.pos += 1
            self.expect("{")
            values = [self.nat()]
            while self.at(","):
                self.pos += 1
                values.append(self.nat())
            self.expect("}")
            if len(set(values)) != len(values):
                raise self.error("duplicate element in set literal")
            return A.InSet(v, frozenset(values))
        for op in ("=", "!=", "<=", ">=", "<", ">"):
            if self.at(op):
                self.pos += 1
                return A.Cmp(v, op, self.nat())
        raise self.error(f"expected 'in' or a comparison, found {self.tok.text or 'end of input'!r}",
                         ["in", "=", "!=", "<", "<=", ">", ">="])

    def dist(self):
        tok = self.tok
        if tok.kind != "ident" or tok.text not in A.DIST_KINDS:
            raise self.error(f"unknown distribution {tok.text or 'end of input'!r}", list(A.DIST_KINDS))
        self.pos += 1
        name = tok.text
        self.expect("(")
        args = []
        if not self.at(")"):
            args.append(self.dist_arg())
            while self.at(","):
                self.pos += 1
                args.append(self.dist_arg())
        end = self.expect(")")
        span = SourceSpan(tok.span.start, end.span.end, tok.span.line, tok.span.column)
        dist = self.build_dist(name, args, span)
        problem = A.check_dist(dist)
        if problem:
            raise ParseError(f"{name}: {problem}", span)
        return dist

    def dist_arg(self):
        if self.tok.kind == "ident":
            return (Fraction(1), self.ident())
        c = self.rational()
        if self.at("*"):
            self.pos += 1
            return (c, self.ident())
        return c

    def build_dist(self, name, args, span):
        var_args = [a for a in args if isinstance(a, tuple)]
        if not var_args:
            return A.Dist(name, tuple(args))
        if name not in A.COMPOUND_KINDS:
            raise ParseError(f"{name} does not accept a variable parameter", span)
        first = args[0]
        rest = args[1:]
        if not isinstance(first, tuple) or any(isinstance(a, tuple) for a in rest):
            raise ParseError(f"only the first argument of {name} may be a variable", span)
        scale, v = first
        if name == "Poisson":
            if rest:
                raise ParseError("Poisson takes one argument", span)
            return A.Compound("Poisson", v, scale)
        if scale != 1:
            raise ParseError(f"{name} does not accept a scaled variable", span)
        if name == "Bernoulli":
            if rest:
                raise ParseError("Bernoulli takes one argument", span)
            return A.Compound("Bernoulli", v, Fraction(1))
        if len(rest) != 1:
            raise ParseError(f"{name}(X, p) takes two arguments", span)
        return A.Compound(name, v, rest[0])


def parse(text: str) -> A.Program:
    """Parse program text; raises :class:`ParseError` with a source span."""
    return Parser(text).program()


def parse_file(path) -> A.Program:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


# -- rendering ----------------------------------------------------------------

def render_number(q) -> str:
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    d = q.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d == 1:
        digits = max(twos, fives)
        scaled = q * 10 ** digits
        s = str(scaled.numerator).rjust(digits + 1, "0")
        return f"{s[:-digits]}.{s[-digits:]}"
    return f"{q.numerator}/{q.denominator}"


def render_affine(coeffs, const) -> str:
    parts = []
    for v, c in coeffs:
        parts.append(v.name if c == 1 else f"{render_number(c)}*{v.name}")
    if const != 0 or not parts:
        parts.append(render_number(const))
    return " + ".join(parts)


def render_dist(d) -> str:
    if isinstance(d, A.Compound):
        if d.kind == "Poisson":
            arg = d.var.name if d.param == 1 else f"{render_number(d.param)}*{d.var.name}"
            return f"Poisson({arg})"
        if d.kind == "Bernoulli":
            return f"Bernoulli({d.var.name})"
        return f"{d.kind}({d.var.name}, {render_number(d.param)})"
    return f"{d.kind}({', '.join(render_number(p) for p in d.params)})"


_PREC = {A.Or: 1, A.And: 2, A.Not: 3}


def render_cond(c, parent=0) -> str:
    if isinstance(c, A.InSet):
        return f"{c.var.name} in {{{', '.join(str(v) for v in sorted(c.values))}}}" if c.values \
            else f"{c.var.name} < 0"
    if isinstance(c, A.Complement):
        return render_cond(A.Not(c.event), parent)
    if isinstance(c, A.Cmp):
        return f"{c.var.name} {c.op} {c.value}"
    if isinstance(c, A.SampleCond):
        return f"{c.value} ~ {render_dist(c.dist)}"
    prec = _PREC[type(c)]
    if isinstance(c, A.Not):
        text = f"not {render_cond(c.cond, prec)}"
    else:
        word = "or" if isinstance(c, A.Or) else "and"
        # left-associative: right operand needs parentheses at equal precedence
        text = f"{render_cond(c.left, prec)} {word} {render_cond(c.right, prec + 1)}"
    return f"({text})" if prec < parent else text


def _render_stmts(stmt, indent, out):
    pad = "    " * indent
    if isinstance(stmt, A.Seq):
        for s in stmt.stmts:
            _render_stmts(s, indent, out)
        return
    if isinstance(stmt, A.Skip):
        out.append(f"{pad}skip;")
    elif isinstance(stmt, A.Fail):
        out.append(f"{pad}fail;")
    elif isinstance(stmt, A.Affine):
        out.append(f"{pad}{stmt.target.name} := {render_affine(stmt.coeffs, stmt.const)};")
    elif isinstance(stmt, A.AddAssign):
        out.append(f"{pad}{stmt.target.name} += {render_affine(stmt.coeffs, stmt.const)};")
    elif isinstance(stmt, A.Sample):
        out.append(f"{pad}{stmt.target.name} ~ {render_dist(stmt.dist)};")
    elif isinstance(stmt, A.AddSample):
        out.append(f"{pad}{stmt.target.name} +~ {render_dist(stmt.dist)};")
    elif isinstance(stmt, A.Observe):
        out.append(f"{pad}observe {render_cond(stmt.cond)};")
    elif isinstance(stmt, A.ObserveEvent):
        out.append(f"{pad}observe {render_cond(stmt.event)};")
    elif isinstance(stmt, A.ObserveFrom):
        out.append(f"{pad}observe {stmt.value} ~ {render_dist(stmt.dist)};")
    elif isinstance(stmt, (A.If, A.IfEvent)):
        cond = stmt.cond if isinstance(stmt, A.If) else stmt.event
        out.append(f"{pad}if {render_cond(cond)} {{")
        _render_block(stmt.then, indent + 1, out)
        orelse = stmt.orelse
        if isinstance(orelse, A.Seq) and not orelse.stmts:
            out.append(f"{pad}}}")
        else:
            out.append(f"{pad}}} else {{")
            _render_block(orelse, indent + 1, out)
            out.append(f"{pad}}}")
    else:
        raise TypeError(f"cannot render {stmt!r}")


def _render_block(stmt, indent, out):
    _render_stmts(stmt if isinstance(stmt, A.Seq) else A.Seq((stmt,)), indent, out)


def render(program) -> str:
    """Canonical text, one statement per line; empty program renders as ''."""
    body = program.body if isinstance(program, A.Program) else program
    out: list[str] = []
    _render_stmts(body, 0, out)
    return "\n".join(out) + ("\n" if out else "")
