"""Symbolic expression kernel.

Expressions are plain (immutable) sympy trees restricted to the fragment the
pipeline needs: exact rationals, jet symbols, parameters, sums, products,
integer powers and ``exp``.  Jet symbols carry their role in their name:

    t            independent variable
    u3, v3       state / adjoint variable with index 3
    u3_t, v3_t   their first time derivatives

Every other symbol is a parameter.
"""
from __future__ import annotations

import enum
import math
import random
import re
from dataclasses import dataclass
from typing import Iterable, Mapping

import sympy as sp

from .errors import CyclicBinding, DomainError, UnboundSymbol

Expression = sp.Expr

_JET_RE = re.compile(r"^([uv])([1-9][0-9]*)(_t)?$")

T = sp.Symbol("t")


class Kind(enum.Enum):
    INDEP = "indep"
    STATE = "state"
    ADJOINT = "adjoint"
    STATE_DERIV = "state_deriv"
    ADJOINT_DERIV = "adjoint_deriv"
    PARAMETER = "parameter"


@dataclass(frozen=True)
class Role:
    kind: Kind
    index: int | None = None
    name: str | None = None


def u(k: int) -> sp.Symbol:
    return sp.Symbol(f"u{_check_index(k)}")


def v(k: int) -> sp.Symbol:
    return sp.Symbol(f"v{_check_index(k)}")


def u_t(k: int) -> sp.Symbol:
    return sp.Symbol(f"u{_check_index(k)}_t")


def v_t(k: int) -> sp.Symbol:
    return sp.Symbol(f"v{_check_index(k)}_t")


def param(name: str) -> sp.Symbol:
    if not is_parameter_name(name):
        raise ValueError(f"{name!r} is not a valid parameter name")
    return sp.Symbol(name)


def is_parameter_name(name: str) -> bool:
    return bool(name) and name.isidentifier() and name != "t" and not _JET_RE.match(name)


def _check_index(k: int) -> int:
    if int(k) != k or k < 1:
        raise ValueError(f"jet index must be a positive integer, got {k!r}")
    return int(k)


def role(sym: sp.Symbol) -> Role:
    name = sym.name
    if name == "t":
        return Role(Kind.INDEP)
    m = _JET_RE.match(name)
    if m is None:
        return Role(Kind.PARAMETER, name=name)
    letter, idx, deriv = m.groups()
    kind = {
        ("u", False): Kind.STATE,
        ("v", False): Kind.ADJOINT,
        ("u", True): Kind.STATE_DERIV,
        ("v", True): Kind.ADJOINT_DERIV,
    }[(letter, bool(deriv))]
    return Role(kind, index=int(idx))


def symbols_of(e: Expression, *kinds: Kind) -> set[sp.Symbol]:
    return {s for s in e.free_symbols if role(s).kind in kinds}


def is_derivative_free(e: Expression) -> bool:
    return not symbols_of(e, Kind.STATE_DERIV, Kind.ADJOINT_DERIV)


def is_adjoint_free(e: Expression) -> bool:
    return not symbols_of(e, Kind.ADJOINT, Kind.ADJOINT_DERIV)


def exact(value) -> Expression:
    """Sympify ``value`` with floats converted to exact rationals."""
    e = sp.sympify(value, rational=True)
    if e.atoms(sp.Float):
        e = sp.nsimplify(e, rational=True)
    return e


# --- simplification ------------------------------------------------------


def _expand_exp_args(e: Expression) -> Expression:
    return e.replace(
        lambda x: isinstance(x, sp.exp),
        lambda x: sp.exp(sp.expand(x.args[0])),
    )


def _merge_exp(e: Expression) -> Expression:
    # exp(a)*exp(b) -> exp(a+b), termwise, then canonicalize the arguments
    terms = [sp.powsimp(term, combine="exp") for term in sp.Add.make_args(e)]
    return _expand_exp_args(sp.Add(*terms))


def _is_exp_power(f: Expression) -> bool:
    return isinstance(f, sp.exp) or (f.is_Pow and isinstance(f.base, sp.exp))


def simplify(e) -> Expression:
    """Canonical form: a cancelled quotient of expanded polynomials.

    ``exp`` nodes behave as atoms with expanded arguments; products of
    exponentials are merged.
    """
    e = _expand_exp_args(exact(e))
    if e.is_Number:
        return e
    e = sp.cancel(sp.together(e))
    num, den = sp.fraction(e)
    # exponential factors are units: keep them in the numerator only
    units = [f for f in sp.Mul.make_args(den) if _is_exp_power(f)]
    if units:
        den = sp.Mul(*[f for f in sp.Mul.make_args(den) if not _is_exp_power(f)])
        num = num / sp.Mul(*units)
    num = _merge_exp(sp.expand(num, power_exp=False))
    den = _merge_exp(sp.expand(den, power_exp=False))
    if num == 0:
        return sp.Integer(0)
    return num / den


def diff(e: Expression, s: sp.Symbol) -> Expression:
    return simplify(sp.diff(e, s))


def substitute(e: Expression, bindings: Mapping[sp.Symbol, Expression]) -> Expression:
    """Simultaneous replacement of symbols followed by simplification."""
    bindings = {k: exact(val) for k, val in bindings.items()}
    _check_acyclic(bindings)
    return simplify(exact(e).xreplace(bindings))


def _check_acyclic(bindings: Mapping[sp.Symbol, Expression]) -> None:
    graph = {k: val.free_symbols & bindings.keys() for k, val in bindings.items()}
    state: dict[sp.Symbol, int] = {}

    def visit(node):
        state[node] = 1
        for nxt in graph[node]:
            if state.get(nxt) == 1:
                raise CyclicBinding(f"binding for {node} refers back to {nxt}")
            if nxt not in state:
                visit(nxt)
        state[node] = 2

    for key in graph:
        if key not in state:
            visit(key)


# --- evaluation ----------------------------------------------------------


def compile_function(exprs: Iterable[Expression], args: Iterable[sp.Symbol]):
    """Return a float function of ``args`` computing every expression.

    Raises ZeroDivisionError / OverflowError from the underlying math calls.
    """
    exprs = list(exprs)
    args = list(args)
    return sp.lambdify(args, exprs, modules="math")


def evaluate(e: Expression, point: Mapping[sp.Symbol, float]) -> float:
    e = exact(e)
    missing = e.free_symbols - set(point)
    if missing:
        names = ", ".join(sorted(s.name for s in missing))
        raise UnboundSymbol(f"unbound symbol(s): {names}")
    args = sorted(e.free_symbols, key=lambda s: s.name)
    fn = compile_function([e], args)
    return _call(fn, [float(point[s]) for s in args])[0]


def _call(fn, values):
    try:
        out = fn(*values)
    except ZeroDivisionError as exc:
        raise DomainError("division by zero") from exc
    except OverflowError as exc:
        raise DomainError("overflow during evaluation") from exc
    except ValueError as exc:
        raise DomainError(str(exc)) from exc
    return [float(x) for x in out]


# --- equivalence ---------------------------------------------------------


class Equivalence(enum.Enum):
    PROVED_EQUAL = "ProvedEqual"
    PROVED_UNEQUAL = "ProvedUnequal"
    PROBABLY_EQUAL = "ProbablyEqual"


SAMPLE_POINTS = 32
SAMPLE_LOW, SAMPLE_HIGH = 0.5, 2.0
RELATIVE_TOLERANCE = 1e-9
RESAMPLES = 5


def equivalent(a, b, seed: int = 0) -> Equivalence:
    diff_expr = simplify(exact(a) - exact(b))
    if diff_expr == 0:
        return Equivalence.PROVED_EQUAL
    a, b = exact(a), exact(b)
    args = sorted(a.free_symbols | b.free_symbols, key=lambda s: s.name)
    fn = compile_function([a, b], args)
    rng = random.Random(seed)
    budget = RESAMPLES
    checked = 0
    for _ in range(SAMPLE_POINTS):
        while True:
            values = [rng.uniform(SAMPLE_LOW, SAMPLE_HIGH) for _ in args]
            try:
                va, vb = _call(fn, values)
            except DomainError:
                if budget == 0:
                    break
                budget -= 1
                continue
            checked += 1
            if not math.isfinite(va) or not math.isfinite(vb):
                return Equivalence.PROVED_UNEQUAL
            if abs(va - vb) > RELATIVE_TOLERANCE * max(1.0, abs(va), abs(vb)):
                return Equivalence.PROVED_UNEQUAL
            break
    if checked == 0:
        raise DomainError("every sample point hit a pole")
    return Equivalence.PROBABLY_EQUAL


def is_zero(e: Expression) -> bool:
    return simplify(e) == 0
