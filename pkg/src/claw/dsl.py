"""Text format for systems and generators, plus plain / LaTeX / JSON printers.

Grammar::

    document  := item*
    item      := system | generator
    system    := 'system' NAME '{' sysstmt* '}'
    sysstmt   := 'indep' NAME ';' | 'states' NAME+ ';' | 'params' NAME* ';'
               | 'eq' NAME "'" '=' expr ';'
    generator := 'generator' NAME 'for' NAME '{' genstmt* '}'
    genstmt   := 'xi' '=' expr ';' | 'eta' NAME '=' expr ';'

    expr      := term (('+' | '-') term)*
    term      := '-' term | product
    product   := power (('*' | '/') power)*
    power     := atom ('^' exponent)?
    exponent  := '-' exponent | power          (must fold to an integer)
    atom      := NUMBER | NAME "'"? | 'exp' '(' expr ')' | '(' expr ')'

``#`` starts a comment.  Adjoint variables are not declared; they are named
``v1 .. vm`` after the order of the ``states`` declaration.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import singledispatch

import sympy as sp

from . import symexpr as sx
from .errors import ArityError, DslError, ParseError, UndeclaredName
from .ibragimov import AdjointSystem, ConservedQuantity, ExtendedGenerator, FormalLagrangian
from .numeric import DriftReport
from .symmetry import Generator, LambdaMatrix, OdeSystem, SymmetryReport

KEYWORDS = frozenset({"system", "indep", "states", "params", "eq", "generator", "for", "xi", "eta", "exp"})
MAX_DEPTH = 200
MAX_EXPONENT = 256
MAX_CONSTANT_BITS = 1 << 14

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<number>[0-9]+(?:\.[0-9]+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[{};='()+\-*/^])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


@dataclass(frozen=True)
class Span:
    line: int
    column: int


@dataclass(frozen=True)
class SystemEntry:
    system: OdeSystem
    span: Span


@dataclass(frozen=True)
class GeneratorEntry:
    generator: Generator
    system_name: str
    span: Span


@dataclass
class SourceDocument:
    text: str
    systems: dict = field(default_factory=dict)
    generators: dict = field(default_factory=dict)

    def system(self, name: str | None = None) -> OdeSystem:
        if name is None:
            if len(self.systems) != 1:
                raise KeyError("document declares several systems; pick one by name")
            return next(iter(self.systems.values())).system
        return self.systems[name].system

    def generators_for(self, system_name: str) -> dict:
        return {
            name: entry.generator
            for name, entry in self.generators.items()
            if entry.system_name == system_name
        }


class _Scope:
    """Maps identifiers to expression symbols; ``None`` system = free naming."""

    def __init__(self, indep="t", states=(), params=(), free=False):
        self.indep = indep
        self.states = {n: k for k, n in enumerate(states, start=1)}
        self.params = set(params)
        self.free = free
        self.allow_adjoint = True
        self.allow_prime = True

    def resolve(self, tok: Token, primed: bool):
        name = tok.text
        if self.free:
            if name == "t":
                sym = sx.T
            else:
                sym = sp.Symbol(name)
                kind = sx.role(sym).kind
                if kind in (sx.Kind.STATE_DERIV, sx.Kind.ADJOINT_DERIV):
                    raise UndeclaredName(f"write derivatives with a prime, not {name!r}", tok.line, tok.column)
            kind = sx.role(sym).kind
        elif name == self.indep:
            sym, kind = sx.T, sx.Kind.INDEP
        elif name in self.states:
            sym, kind = sx.u(self.states[name]), sx.Kind.STATE
        elif name in self.params:
            sym, kind = sp.Symbol(name), sx.Kind.PARAMETER
        elif re.fullmatch(r"v[1-9][0-9]*", name) and int(name[1:]) <= len(self.states):
            sym, kind = sp.Symbol(name), sx.Kind.ADJOINT
        else:
            raise UndeclaredName(f"undeclared identifier {name!r}", tok.line, tok.column)
        if kind is sx.Kind.ADJOINT and not self.allow_adjoint:
            raise DslError(f"adjoint variable {name!r} is not allowed here", tok.line, tok.column)
        if primed:
            if not self.allow_prime:
                raise DslError("derivatives are not allowed here", tok.line, tok.column)
            if kind is sx.Kind.STATE:
                return sx.u_t(sx.role(sym).index)
            if kind is sx.Kind.ADJOINT:
                return sx.v_t(sx.role(sym).index)
            raise DslError(f"only state and adjoint variables take a prime, not {name!r}", tok.line, tok.column)
        return sym


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.pos = 0
        self.depth = 0

    # token helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, text) -> bool:
        return self.tok.kind in ("op", "name") and self.tok.text == text

    def expect(self, text) -> Token:
        if not self.at(text):
            self.fail(f"unexpected {self.describe(self.tok)}", {repr(text)})
        return self.advance()

    def expect_name(self, what="identifier") -> Token:
        tok = self.tok
        if tok.kind != "name" or tok.text in KEYWORDS:
            self.fail(f"unexpected {self.describe(tok)}", {what})
        return self.advance()

    @staticmethod
    def describe(tok: Token) -> str:
        return "end of input" if tok.kind == "eof" else repr(tok.text)

    def fail(self, message, expected=(), tok=None):
        tok = tok or self.tok
        raise ParseError(message, tok.line, tok.column, expected)

    # expressions
    def expr(self, scope: _Scope):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            self.fail("expression nested too deeply")
        try:
            terms = [self.term(scope)]
            while self.at("+") or self.at("-"):
                sign = self.advance().text
                t = self.term(scope)
                terms.append(t if sign == "+" else -t)
            return sp.Add(*terms)
        finally:
            self.depth -= 1

    def term(self, scope):
        if self.at("-"):
            self.advance()
            self.depth += 1
            if self.depth > MAX_DEPTH:
                self.fail("expression nested too deeply")
            try:
                return -self.term(scope)
            finally:
                self.depth -= 1
        return self.product(scope)

    def product(self, scope):
        value = self.power(scope)
        while self.at("*") or self.at("/"):
            op = self.advance()
            rhs = self.power(scope)
            if op.text == "*":
                value = value * rhs
            else:
                if rhs == 0:
                    self.fail("division by the constant 0", tok=op)
                value = value / rhs
        return value

    def power(self, scope):
        base = self.atom(scope)
        if self.at("^"):
            caret = self.advance()
            start = self.tok
            n = self.exponent(scope)
            if not (n.is_Integer):
                self.fail("exponent must be an integer constant", tok=start)
            if abs(int(n)) > MAX_EXPONENT:
                self.fail(f"exponent magnitude above {MAX_EXPONENT}", tok=start)
            if base == 0 and n < 0:
                self.fail("negative power of 0", tok=caret)
            if base.is_Rational and max(base.p.bit_length(), base.q.bit_length()) * abs(int(n)) > MAX_CONSTANT_BITS:
                self.fail("constant too large", tok=caret)
            return sp.Pow(base, n)
        return base

    def exponent(self, scope):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            self.fail("expression nested too deeply")
        try:
            if self.at("-"):
                self.advance()
                return -self.exponent(scope)
            return self.power(scope)
        finally:
            self.depth -= 1

    def atom(self, scope):
        tok = self.tok
        if tok.kind == "number":
            self.advance()
            return sp.Rational(Fraction(tok.text))
        if tok.kind == "name" and tok.text == "exp":
            self.advance()
            self.expect("(")
            start = self.tok
            arg = self.expr(scope)
            self.expect(")")
            allowed = {sx.Kind.INDEP, sx.Kind.PARAMETER}
            if any(sx.role(s).kind not in allowed for s in arg.free_symbols) or not arg.is_polynomial():
                self.fail("exp() takes a polynomial in the independent variable and parameters", tok=start)
            return sp.exp(arg)
        if tok.kind == "name" and tok.text not in KEYWORDS:
            self.advance()
            primed = False
            if self.at("'"):
                self.advance()
                primed = True
            return scope.resolve(tok, primed)
        if self.at("("):
            self.advance()
            value = self.expr(scope)
            self.expect(")")
            return value
        self.fail(f"unexpected {self.describe(tok)}", {"number", "identifier", "'('", "'-'", "'exp'"})

    # documents
    def document(self) -> SourceDocument:
        doc = SourceDocument(self.text)
        while self.tok.kind != "eof":
            if self.at("system"):
                self.system(doc)
            elif self.at("generator"):
                self.generator(doc)
            else:
                self.fail(f"unexpected {self.describe(self.tok)}", {"'system'", "'generator'"})
        return doc

    def _check_new_name(self, tok, taken, what):
        if tok.text in taken:
            raise DslError(f"{what} {tok.text!r} is already declared", tok.line, tok.column)

    def system(self, doc: SourceDocument):
        head = self.expect("system")
        name_tok = self.expect_name("system name")
        if name_tok.text in doc.systems:
            raise DslError(f"system {name_tok.text!r} is already declared", name_tok.line, name_tok.column)
        self.expect("{")
        indep = "t"
        indep_seen = False
        states: list[str] = []
        params: list[str] = []
        equations: dict[str, object] = {}
        while not self.at("}"):
            if self.at("indep"):
                kw = self.advance()
                if indep_seen or states or params:
                    raise DslError("'indep' must come first and only once", kw.line, kw.column)
                tok = self.expect_name("variable name")
                if re.fullmatch(r"[uv][1-9][0-9]*(_t)?", tok.text):
                    raise DslError(f"{tok.text!r} is reserved for jet variables", tok.line, tok.column)
                indep, indep_seen = tok.text, True
                self.expect(";")
            elif self.at("states"):
                kw = self.advance()
                if states:
                    raise DslError("states are already declared", kw.line, kw.column)
                while self.tok.kind == "name" and self.tok.text not in KEYWORDS:
                    tok = self.advance()
                    self._check_new_name(tok, {indep, *states, *params}, "name")
                    if re.fullmatch(r"[uv][1-9][0-9]*(_t)?", tok.text) and not re.fullmatch(r"u[1-9][0-9]*", tok.text):
                        raise DslError(f"{tok.text!r} is reserved for adjoint variables", tok.line, tok.column)
                    states.append(tok.text)
                if not states:
                    self.fail("empty state list", {"identifier"})
                self.expect(";")
            elif self.at("params"):
                self.advance()
                while self.tok.kind == "name" and self.tok.text not in KEYWORDS:
                    tok = self.advance()
                    self._check_new_name(tok, {indep, *states, *params}, "name")
                    if not sx.is_parameter_name(tok.text):
                        raise DslError(f"{tok.text!r} cannot be used as a parameter name", tok.line, tok.column)
                    params.append(tok.text)
                self.expect(";")
            elif self.at("eq"):
                self.advance()
                tok = self.expect_name("state name")
                if tok.text not in states:
                    raise UndeclaredName(f"undeclared state {tok.text!r}", tok.line, tok.column)
                if tok.text in equations:
                    raise ArityError(f"second equation for state {tok.text!r}", tok.line, tok.column)
                self.expect("'")
                self.expect("=")
                scope = _Scope(indep, states, params)
                scope.allow_adjoint = scope.allow_prime = False
                equations[tok.text] = self.expr(scope)
                self.expect(";")
            else:
                self.fail(f"unexpected {self.describe(self.tok)}", {"'indep'", "'states'", "'params'", "'eq'", "'}'"})
        close = self.expect("}")
        if not states:
            raise ArityError(f"system {name_tok.text!r} declares no states", close.line, close.column)
        missing = [s for s in states if s not in equations]
        if missing:
            raise ArityError(
                f"system {name_tok.text!r} has {len(states)} states but {len(equations)} equations "
                f"(missing: {', '.join(missing)})",
                close.line,
                close.column,
            )
        system = OdeSystem(
            f=tuple(equations[s] for s in states),
            params=tuple(sp.Symbol(p) for p in params),
            name=name_tok.text,
            state_names=tuple(states),
            indep_name=indep,
        )
        doc.systems[name_tok.text] = SystemEntry(system, Span(head.line, head.column))

    def generator(self, doc: SourceDocument):
        head = self.expect("generator")
        name_tok = self.expect_name("generator name")
        if name_tok.text in doc.generators:
            raise DslError(f"generator {name_tok.text!r} is already declared", name_tok.line, name_tok.column)
        self.expect("for")
        sys_tok = self.expect_name("system name")
        if sys_tok.text not in doc.systems:
            raise UndeclaredName(f"undeclared system {sys_tok.text!r}", sys_tok.line, sys_tok.column)
        system = doc.systems[sys_tok.text].system
        scope = _Scope(system.indep_name, system.state_names, [p.name for p in system.params])
        scope.allow_adjoint = scope.allow_prime = False
        self.expect("{")
        xi = None
        eta: dict[int, object] = {}
        while not self.at("}"):
            if self.at("xi"):
                kw = self.advance()
                if xi is not None:
                    raise DslError("xi is already given", kw.line, kw.column)
                self.expect("=")
                xi = self.expr(scope)
                self.expect(";")
            elif self.at("eta"):
                self.advance()
                tok = self.expect_name("state name")
                if tok.text not in scope.states:
                    raise UndeclaredName(f"undeclared state {tok.text!r}", tok.line, tok.column)
                k = scope.states[tok.text]
                if k in eta:
                    raise DslError(f"eta for {tok.text!r} is already given", tok.line, tok.column)
                self.expect("=")
                eta[k] = self.expr(scope)
                self.expect(";")
            else:
                self.fail(f"unexpected {self.describe(self.tok)}", {"'xi'", "'eta'", "'}'"})
        self.expect("}")
        gen = Generator(
            xi if xi is not None else 0,
            tuple(eta.get(k, 0) for k in range(1, system.m + 1)),
            name_tok.text,
        )
        doc.generators[name_tok.text] = GeneratorEntry(gen, sys_tok.text, Span(head.line, head.column))


def parse(text: str) -> SourceDocument:
    """Parse a document; every failure is a DslError carrying line:column."""
    try:
        return _Parser(text).document()
    except RecursionError:
        raise ParseError("input nested too deeply", 1, 1) from None


def parse_expression(text: str, system: OdeSystem | None = None) -> sx.Expression:
    """Parse a lone expression, with ``system`` naming or free jet naming."""
    try:
        p = _Parser(text)
        if system is None:
            scope = _Scope(free=True)
        else:
            scope = _Scope(system.indep_name, system.state_names, [q.name for q in system.params])
        value = p.expr(scope)
        if p.tok.kind != "eof":
            p.fail(f"unexpected {p.describe(p.tok)}", {"operator", "end of input"})
        return value
    except RecursionError:
        raise ParseError("input nested too deeply", 1, 1) from None


# --- printing ------------------------------------------------------------

_GREEK = {
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta", "iota", "kappa",
    "lambda", "mu", "nu", "xi", "pi", "rho", "sigma", "tau", "phi", "chi", "psi", "omega",
    "Gamma", "Delta", "Theta", "Lambda", "Xi", "Pi", "Sigma", "Phi", "Psi", "Omega",
}

SUM, NEG, PROD, POW, ATOM = range(5)


def plain_names(system: OdeSystem | None) -> dict:
    """Printing names for the jet symbols of ``system`` (identity when None)."""
    if system is None:
        return {}
    names = {sx.T: system.indep_name}
    for k, state in enumerate(system.state_names, start=1):
        names[sx.u(k)] = state
        names[sx.u_t(k)] = state + "'"
    return names


def _plain_symbol(sym, names):
    if sym in names:
        return names[sym]
    r = sx.role(sym)
    if r.kind is sx.Kind.STATE_DERIV:
        return f"u{r.index}'"
    if r.kind is sx.Kind.ADJOINT_DERIV:
        return f"v{r.index}'"
    return sym.name


def _split_fraction(e):
    """(sign, coefficient numerator, numerator factors, denominator factors)."""
    coeff, factors = e.as_coeff_mul()
    coeff = sp.Rational(coeff)
    num, den = [], []
    for f in factors:
        if f.is_Pow and f.exp.is_Integer and f.exp < 0:
            den.append(f.base if f.exp == -1 else sp.Pow(f.base, -f.exp))
        else:
            num.append(f)
    sign = -1 if coeff < 0 else 1
    return sign, abs(coeff.p), abs(coeff.q), num, den


class _Printer:
    mul = "*"

    def __init__(self, names=None):
        self.names = names or {}

    def wrap(self, e, min_prec):
        text, prec = self.emit(e)
        return self.paren(text) if prec < min_prec else text

    def paren(self, text):
        return f"({text})"

    def emit(self, e):
        if e.is_Integer:
            return (str(e), ATOM) if e >= 0 else (f"-{-e}", NEG)
        if e.is_Rational:
            return self.ratio(e)
        if e.is_Symbol:
            return self.symbol(e), ATOM
        if isinstance(e, sp.exp):
            return self.exp(e.args[0]), ATOM
        if e.is_Add:
            return self.add(e), SUM
        if e.is_Mul or (e.is_Pow and e.exp.is_Integer and e.exp < 0):
            return self.product(e)
        if e.is_Pow and e.exp.is_Integer:
            return self.power(e.base, int(e.exp)), POW
        raise TypeError(f"cannot print {type(e).__name__}: {e}")

    def add(self, e):
        parts = []
        for i, term in enumerate(e.as_ordered_terms()):
            negative = term.could_extract_minus_sign()
            body = self.wrap(-term if negative else term, NEG if i == 0 and negative else PROD)
            if i == 0:
                parts.append(("-" if negative else "") + body)
            else:
                parts.append(self.joiner(negative) + body)
        return "".join(parts)

    def joiner(self, negative):
        return " - " if negative else " + "

    def product(self, e):
        sign, p, q, num, den = _split_fraction(e)
        num_parts = ([str(p)] if p != 1 or not num else []) + [self.wrap(f, PROD + 1) for f in self.order(num)]
        text = self.mul.join(num_parts)
        if q != 1 or den:
            den_parts = ([str(q)] if q != 1 else []) + [self.wrap(f, PROD + 1) for f in self.order(den)]
            den_text = self.mul.join(den_parts)
            if len(den_parts) > 1:
                den_text = self.paren(den_text)
            text = f"{text}/{den_text}"
        if sign < 0:
            return "-" + text, NEG
        return text, PROD

    def order(self, factors):
        return sorted(factors, key=sp.default_sort_key)

    def ratio(self, e):
        text = f"{abs(e.p)}/{e.q}"
        return ("-" + text, NEG) if e < 0 else (text, PROD)

    def power(self, base, n):
        return f"{self.wrap(base, ATOM)}^{n}"

    def symbol(self, s):
        return _plain_symbol(s, self.names)

    def exp(self, arg):
        return f"exp({self.emit(arg)[0]})"


class _LatexPrinter(_Printer):
    mul = ""

    _ORDER = {
        sx.Kind.PARAMETER: 1,
        sx.Kind.ADJOINT: 2,
        sx.Kind.STATE: 3,
        sx.Kind.ADJOINT_DERIV: 4,
        sx.Kind.STATE_DERIV: 5,
        sx.Kind.INDEP: 6,
    }

    def paren(self, text):
        return rf"\left({text}\right)"

    def joiner(self, negative):
        return "-" if negative else "+"

    def order(self, factors):
        def key(f):
            base = f.base if f.is_Pow else f
            if base.is_Symbol:
                rank = self._ORDER[sx.role(base).kind]
            elif isinstance(base, sp.exp):
                rank = 8
            else:
                rank = 7
            return rank, sp.default_sort_key(f)

        return sorted(factors, key=key)

    def product(self, e):
        sign, p, q, num, den = _split_fraction(e)
        if q != 1 or den:
            top = self.frac_part(p, num)
            bottom = self.frac_part(q, den)
            text = rf"\frac{{{top}}}{{{bottom}}}"
        else:
            text = self.join([str(p)] * (p != 1 or not num) + [self.wrap(f, PROD + 1) for f in self.order(num)])
        if sign < 0:
            return "-" + text, NEG
        return text, PROD

    def frac_part(self, coeff, factors):
        if coeff == 1 and len(factors) == 1:
            return self.emit(factors[0])[0]
        parts = [str(coeff)] * (coeff != 1 or not factors)
        return self.join(parts + [self.wrap(f, PROD + 1) for f in self.order(factors)])

    @staticmethod
    def join(parts):
        out = ""
        for part in parts:
            if out and out[-1].isalpha() and (part[0].isalpha() or part[0] == "\\"):
                out += " "
            elif out and out[-1].isdigit() and part[0].isdigit():
                out += r"\,"
            out += part
        return out

    def ratio(self, e):
        text = rf"\frac{{{abs(e.p)}}}{{{e.q}}}"
        return ("-" + text, NEG) if e < 0 else (text, PROD)

    def power(self, base, n):
        text, prec = self.emit(base)
        if prec < ATOM or (base.is_Symbol and "^" in text):
            text = self.paren(text)
        return f"{text}^{{{n}}}"

    def symbol(self, s):
        r = sx.role(s)
        custom = self.names.get(s)
        if r.kind is sx.Kind.INDEP:
            return custom or "t"
        if r.kind is sx.Kind.PARAMETER:
            return _latex_name(s.name)
        letter = "u" if r.kind in (sx.Kind.STATE, sx.Kind.STATE_DERIV) else "v"
        if custom == f"u{r.index}" or custom == f"u{r.index}'":
            custom = None
        if custom and r.kind is sx.Kind.STATE:
            return _latex_name(custom)
        if custom and r.kind is sx.Kind.STATE_DERIV:
            return _latex_name(custom.rstrip("'")) + "_{t}"
        if r.kind in (sx.Kind.STATE_DERIV, sx.Kind.ADJOINT_DERIV):
            return f"{letter}^{{{r.index}}}_{{t}}"
        return f"{letter}^{{{r.index}}}"

    def exp(self, arg):
        return f"e^{{{self.emit(arg)[0]}}}"


def _latex_name(name: str) -> str:
    if name in _GREEK:
        return "\\" + name
    if len(name) == 1:
        return name
    m = re.fullmatch(r"([A-Za-z]+)([0-9]+)", name)
    if m and (len(m.group(1)) == 1 or m.group(1) in _GREEK):
        return f"{_latex_name(m.group(1))}_{{{m.group(2)}}}"
    return rf"\mathrm{{{name}}}"


def to_plain(e, names=None) -> str:
    return _Printer(names).emit(sx.exact(e))[0]


def to_latex(e, names=None) -> str:
    return _LatexPrinter(names).emit(sx.exact(e))[0]


# --- item rendering ------------------------------------------------------

FORMATS = ("plain", "latex", "json")


def render(item, fmt: str = "plain", system: OdeSystem | None = None) -> str:
    """Render a pipeline item as plain text, LaTeX or JSON."""
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}")
    if fmt == "json":
        return json.dumps(to_json(item, system), indent=2)
    return _render(item, fmt, system)


def _expr(e, fmt, names):
    return to_latex(e, names) if fmt == "latex" else to_plain(e, names)


def _names_for(system, item=None):
    if system is None:
        system = getattr(item, "system", None)
    return plain_names(system), system


def _adjoint_label(k, fmt):
    return f"v^{{{k}}}_{{t}}" if fmt == "latex" else f"v{k}'"


@singledispatch
def _render(item, fmt, system):
    if isinstance(item, sp.Basic):
        return _expr(item, fmt, plain_names(system))
    raise TypeError(f"cannot render {type(item).__name__}")


@_render.register
def _(item: OdeSystem, fmt, system):
    names = plain_names(item)
    if fmt == "latex":
        rows = [f"{to_latex(sx.u_t(k), names)} &= {to_latex(f, names)}" for k, f in enumerate(item.f, 1)]
        return "\\begin{aligned}\n" + " \\\\\n".join(rows) + "\n\\end{aligned}"
    lines = [f"system {item.name} {{", f"  indep {item.indep_name};", f"  states {' '.join(item.state_names)};"]
    lines.append("  params" + "".join(" " + p.name for p in item.params) + ";")
    for name, f in zip(item.state_names, item.f):
        lines.append(f"  eq {name}' = {to_plain(f, names)};")
    lines.append("}")
    return "\n".join(lines)


@_render.register
def _(item: Generator, fmt, system):
    names = plain_names(system)
    state_names = system.state_names if system else tuple(f"u{k}" for k in range(1, item.m + 1))
    if fmt == "latex":
        return _latex_operator(item.xi, item.eta, (), names, state_names)
    target = system.name if system else "system"
    lines = [f"generator {item.name} for {target} {{", f"  xi = {to_plain(item.xi, names)};"]
    for name, eta in zip(state_names, item.eta):
        lines.append(f"  eta {name} = {to_plain(eta, names)};")
    lines.append("}")
    return "\n".join(lines)


def _latex_operator(xi, eta, eta_star, names, state_names):
    terms = []
    pairs = [(xi, r"\partial_{t}")]
    pairs += [(e, rf"\partial_{{{to_latex(sx.u(k), names)}}}") for k, e in enumerate(eta, 1)]
    pairs += [(e, rf"\partial_{{{to_latex(sx.v(k), names)}}}") for k, e in enumerate(eta_star, 1)]
    for coeff, op in pairs:
        coeff = sx.exact(coeff)
        if coeff == 0:
            continue
        if coeff == 1:
            text = op
        elif coeff == -1:
            text = "-" + op
        else:
            c, prec = _LatexPrinter(names).emit(coeff)
            text = (rf"\left({c}\right)" if prec == SUM else c) + op
        if terms and not text.startswith("-"):
            text = "+" + text
        terms.append(text)
    return "".join(terms) or "0"


@_render.register
def _(item: FormalLagrangian, fmt, system):
    names, _ = _names_for(system, item)
    return f"L = {_expr(item.L, fmt, names)}"


@_render.register
def _(item: AdjointSystem, fmt, system):
    names, _ = _names_for(system, item)
    rows = [f"{_adjoint_label(k, fmt)} = {_expr(g, fmt, names)}" for k, g in enumerate(item.g, 1)]
    if fmt == "latex":
        return "\\begin{aligned}\n" + " \\\\\n".join(r.replace(" = ", " &= ") for r in rows) + "\n\\end{aligned}"
    return "\n".join(rows)


@_render.register
def _(item: ExtendedGenerator, fmt, system):
    names = plain_names(system)
    state_names = system.state_names if system else tuple(f"u{k}" for k in range(1, item.base.m + 1))
    if fmt == "latex":
        return _latex_operator(item.base.xi, item.base.eta, item.eta_star, names, state_names)
    lines = [f"extension of {item.name}:", f"  xi = {to_plain(item.base.xi, names)}"]
    for name, eta in zip(state_names, item.base.eta):
        lines.append(f"  eta {name} = {to_plain(eta, names)}")
    for k, es in enumerate(item.eta_star, 1):
        lines.append(f"  eta v{k} = {to_plain(es, names)}")
    lines.append(f"  invariance: {item.certificate.verdict.value} (residual {to_plain(item.certificate.residual, names)})")
    return "\n".join(lines)


@_render.register
def _(item: ConservedQuantity, fmt, system):
    names = plain_names(system)
    if fmt == "latex":
        return to_latex(item.C, names)
    status = "certified" if item.certified else "NOT certified"
    return (
        f"C[{item.name}] = {to_plain(item.C, names)}\n"
        f"  on-shell D_t C: {item.certificate.verdict.value}, {status} "
        f"(residual {to_plain(item.certificate.residual, names)})"
    )


@_render.register
def _(item: SymmetryReport, fmt, system):
    names = plain_names(system)
    if item.admitted:
        return f"{item.generator.name}: admitted"
    lines = [f"{item.generator.name}: not admitted"]
    for k, r in enumerate(item.residuals, 1):
        if r != 0:
            lines.append(f"  residual F{k} = {_expr(r, fmt, names)}")
    return "\n".join(lines)


@_render.register
def _(item: LambdaMatrix, fmt, system):
    names = plain_names(system)
    rows = [[_expr(e, fmt, names) for e in row] for row in item.entries]
    if fmt == "latex":
        body = " \\\\\n".join(" & ".join(r) for r in rows)
        return "\\begin{pmatrix}\n" + body + "\n\\end{pmatrix}"
    return "\n".join("[" + ", ".join(r) + "]" for r in rows)


@_render.register
def _(item: DriftReport, fmt, system):
    lines = []
    for d in item.entries:
        lines.append(f"{d.name}: C(t0) = {d.initial!r}, max |dC| = {d.max_abs:.3e}, max rel drift = {d.max_rel:.3e}")
    return "\n".join(lines)


# --- JSON ----------------------------------------------------------------


@singledispatch
def to_json(item, system=None):
    if isinstance(item, sp.Basic):
        names = plain_names(system)
        return {"plain": to_plain(item, names), "latex": to_latex(item, names)}
    raise TypeError(f"cannot serialize {type(item).__name__}")


@to_json.register
def _(item: ConservedQuantity, system=None):
    names = plain_names(system)
    return {
        "generator": item.name,
        "C": to_plain(item.C, names),
        "C_latex": to_latex(item.C, names),
        "certified": item.certified,
        "residual": to_plain(item.certificate.residual, names),
    }


@to_json.register
def _(item: OdeSystem, system=None):
    names = plain_names(item)
    return {
        "system": item.name,
        "indep": item.indep_name,
        "states": list(item.state_names),
        "params": [p.name for p in item.params],
        "rhs": [to_plain(f, names) for f in item.f],
    }


@to_json.register
def _(item: Generator, system=None):
    names = plain_names(system)
    return {"generator": item.name, "xi": to_plain(item.xi, names), "eta": [to_plain(e, names) for e in item.eta]}


@to_json.register
def _(item: FormalLagrangian, system=None):
    names = plain_names(system or item.system)
    return {"system": item.system.name, "L": to_plain(item.L, names), "L_latex": to_latex(item.L, names)}


@to_json.register
def _(item: AdjointSystem, system=None):
    names = plain_names(system or item.system)
    return {
        "system": item.system.name,
        "adjoint": [to_plain(g, names) for g in item.g],
        "adjoint_latex": [to_latex(g, names) for g in item.g],
    }


@to_json.register
def _(item: ExtendedGenerator, system=None):
    names = plain_names(system)
    return {
        "generator": item.name,
        "xi": to_plain(item.base.xi, names),
        "eta": [to_plain(e, names) for e in item.base.eta],
        "eta_star": [to_plain(e, names) for e in item.eta_star],
        "lambda": [[to_plain(e, names) for e in row] for row in item.lam.entries],
        "certified": item.certificate.passed,
        "residual": to_plain(item.certificate.residual, names),
    }


@to_json.register
def _(item: SymmetryReport, system=None):
    names = plain_names(system)
    return {
        "generator": item.generator.name,
        "admitted": item.admitted,
        "residuals": [to_plain(r, names) for r in item.residuals],
    }


@to_json.register
def _(item: LambdaMatrix, system=None):
    names = plain_names(system)
    return {"lambda": [[to_plain(e, names) for e in row] for row in item.entries]}


@to_json.register
def _(item: DriftReport, system=None):
    return {
        "drift": [
            {"name": d.name, "initial": d.initial, "max_abs": d.max_abs, "max_rel": d.max_rel}
            for d in item.entries
        ]
    }
