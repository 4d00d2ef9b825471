"""ODE systems, point-symmetry generators, admission and lambda extraction."""
from __future__ import annotations

from dataclasses import dataclass, field

import sympy as sp

from . import symexpr as sx
from .errors import NotASymmetry
from .varcalc import JetContext, prolong1


@dataclass(frozen=True)
class OdeSystem:
    """First-order system in solved form ``u_t^a = f[a-1](t, u)``.

    ``state_names`` and ``indep_name`` only affect printing.
    """

    f: tuple
    params: tuple = ()
    name: str = "system"
    state_names: tuple | None = None
    indep_name: str = "t"

    def __post_init__(self):
        f = tuple(sx.exact(e) for e in self.f)
        object.__setattr__(self, "f", f)
        params = tuple(sp.Symbol(p) if isinstance(p, str) else p for p in self.params)
        object.__setattr__(self, "params", params)
        if not f:
            raise ValueError("a system needs at least one equation")
        if len({p.name for p in params}) != len(params):
            raise ValueError("parameter names must be unique")
        for p in params:
            if sx.role(p).kind is not sx.Kind.PARAMETER:
                raise ValueError(f"{p} cannot be used as a parameter name")
        if self.state_names is None:
            object.__setattr__(self, "state_names", tuple(f"u{k}" for k in range(1, len(f) + 1)))
        elif len(self.state_names) != len(f):
            raise ValueError("one state name per equation is required")
        allowed = {sx.T, *params, *(sx.u(k) for k in range(1, len(f) + 1))}
        for k, e in enumerate(f, start=1):
            stray = e.free_symbols - allowed
            if stray:
                names = ", ".join(sorted(s.name for s in stray))
                raise ValueError(f"right-hand side {k} references undeclared symbols: {names}")

    @property
    def m(self) -> int:
        return len(self.f)

    def F(self, alpha: int) -> sx.Expression:
        return sx.u_t(alpha) - self.f[alpha - 1]

    def is_autonomous(self) -> bool:
        return all(sx.T not in e.free_symbols for e in self.f)


@dataclass(frozen=True)
class Generator:
    """X = xi d/dt + eta[a-1] d/du^a, coefficients in (t, u)."""

    xi: sx.Expression
    eta: tuple
    name: str = "X"

    def __post_init__(self):
        xi = sx.simplify(self.xi)
        eta = tuple(sx.simplify(e) for e in self.eta)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "eta", eta)
        for e in (xi, *eta):
            if not (sx.is_derivative_free(e) and sx.is_adjoint_free(e)):
                raise ValueError(f"generator coefficients must depend on (t, u) only: {e}")

    @property
    def m(self) -> int:
        return len(self.eta)

    def __add__(self, other: Generator) -> Generator:
        return Generator(
            self.xi + other.xi,
            tuple(a + b for a, b in zip(self.eta, other.eta)),
            f"{self.name}+{other.name}",
        )


@dataclass(frozen=True)
class SymmetryReport:
    generator: Generator
    admitted: bool
    residuals: tuple


@dataclass(frozen=True)
class LambdaMatrix:
    """Coefficients with X1(F_a) = sum_b entries[a][b] F_b (0-based storage)."""

    entries: tuple
    certificate: tuple = field(default=(), compare=False)

    def __getitem__(self, ab):
        a, b = ab
        return self.entries[a][b]

    def is_zero(self) -> bool:
        return all(e == 0 for row in self.entries for e in row)

    def is_identity(self) -> bool:
        return all(
            e == (1 if i == j else 0)
            for i, row in enumerate(self.entries)
            for j, e in enumerate(row)
        )


def _compatible(sys: OdeSystem, g: Generator):
    if g.m != sys.m:
        raise ValueError(f"generator {g.name} has {g.m} eta components, system has {sys.m} states")


def _apply_to_equations(sys: OdeSystem, g: Generator) -> list:
    pg = prolong1(g, JetContext(sys.m))
    return [pg.apply(sys.F(a)) for a in range(1, sys.m + 1)]


def check_symmetry(sys: OdeSystem, g: Generator) -> SymmetryReport:
    _compatible(sys, g)
    onshell = {sx.u_t(k): f for k, f in enumerate(sys.f, start=1)}
    residuals = tuple(sx.substitute(r, onshell) for r in _apply_to_equations(sys, g))
    return SymmetryReport(g, all(r == 0 for r in residuals), residuals)


def compute_lambda(sys: OdeSystem, g: Generator) -> LambdaMatrix:
    """Read the lambda matrix off the u_t-coefficients of X1(F_a).

    X1(F_a) is affine in u_t, so the coefficients are unique; the u_t-free
    remainder must then equal -sum_b lambda[a][b] f_b.
    """
    _compatible(sys, g)
    m = sys.m
    rows, certificate = [], []
    for a, image in enumerate(_apply_to_equations(sys, g), start=1):
        row = tuple(sx.diff(image, sx.u_t(b)) for b in range(1, m + 1))
        combination = sp.Add(*(lam * sys.F(b) for b, lam in enumerate(row, start=1)))
        residual = sx.simplify(image - combination)
        if any(not sx.is_derivative_free(lam) for lam in row) or residual != 0:
            raise NotASymmetry(
                f"{g.name}: X1(F_{a}) is not a combination of the equations",
                residuals=[residual],
            )
        rows.append(row)
        certificate.append(sx.Equivalence.PROVED_EQUAL)
    return LambdaMatrix(tuple(rows), tuple(certificate))
