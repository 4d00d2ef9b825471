"""Total derivatives, first prolongation and the Euler-Lagrange operator.

Only one independent variable and jet order one are supported.  Two total
derivatives are provided: the formal one, which introduces derivative symbols
``u_t``/``v_t``, and the on-shell one, which replaces them by the right-hand
sides of the state (and adjoint) equations.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import sympy as sp

from . import symexpr as sx
from .errors import JetOrderExceeded, MissingAdjoint

if TYPE_CHECKING:
    from .ibragimov import AdjointSystem
    from .symmetry import Generator, OdeSystem


@dataclass(frozen=True)
class JetContext:
    m: int
    adjoint_present: bool = False

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("system dimension must be at least 1")


def _require_order_zero(e, what="expression"):
    if not sx.is_derivative_free(e):
        raise JetOrderExceeded(f"{what} already contains derivative symbols: {e}")


def formal_total_derivative(e, ctx: JetContext) -> sx.Expression:
    """D_t e = e_t + u_t^a e_{u^a} (+ v_t^a e_{v^a} when adjoints are present)."""
    e = sx.exact(e)
    _require_order_zero(e)
    terms = [sp.diff(e, sx.T)]
    for k in range(1, ctx.m + 1):
        terms.append(sx.u_t(k) * sp.diff(e, sx.u(k)))
        if ctx.adjoint_present:
            terms.append(sx.v_t(k) * sp.diff(e, sx.v(k)))
    return sx.simplify(sp.Add(*terms))


def onshell_bindings(sys: OdeSystem, adj: AdjointSystem | None = None) -> dict:
    bindings = {sx.u_t(k): f for k, f in enumerate(sys.f, start=1)}
    if adj is not None:
        bindings.update({sx.v_t(k): g for k, g in enumerate(adj.g, start=1)})
    return bindings


def onshell_total_derivative(e, sys: OdeSystem, adj: AdjointSystem | None = None) -> sx.Expression:
    """D_t e restricted to solutions of the state (and adjoint) system."""
    e = sx.exact(e)
    uses_adjoint = bool(sx.symbols_of(e, sx.Kind.ADJOINT, sx.Kind.ADJOINT_DERIV))
    if uses_adjoint and adj is None:
        raise MissingAdjoint("expression references adjoint variables but no adjoint system was given")
    bindings = onshell_bindings(sys, adj)
    # reduce to jet order zero first, so D_t never needs second derivatives
    e = sx.substitute(e, bindings)
    ctx = JetContext(sys.m, adjoint_present=adj is not None)
    return sx.substitute(formal_total_derivative(e, ctx), bindings)


@dataclass(frozen=True)
class ProlongedGenerator:
    generator: Generator
    zeta: tuple

    def apply(self, e) -> sx.Expression:
        """Action of the first prolongation on an expression in (t, u, u_t)."""
        g = self.generator
        terms = [g.xi * sp.diff(e, sx.T)]
        for k, (eta, zeta) in enumerate(zip(g.eta, self.zeta), start=1):
            terms.append(eta * sp.diff(e, sx.u(k)))
            terms.append(zeta * sp.diff(e, sx.u_t(k)))
        return sx.simplify(sp.Add(*terms))


def prolong1(g: Generator, ctx: JetContext) -> ProlongedGenerator:
    _require_order_zero(g.xi, "xi")
    for eta in g.eta:
        _require_order_zero(eta, "eta")
    d_xi = formal_total_derivative(g.xi, ctx)
    zeta = tuple(
        sx.simplify(formal_total_derivative(eta, ctx) - sx.u_t(k) * d_xi)
        for k, eta in enumerate(g.eta, start=1)
    )
    return ProlongedGenerator(g, zeta)


def euler_lagrange(L, alpha: int, ctx: JetContext) -> sx.Expression:
    """First-order variational derivative dL/du^a - D_t(dL/du_t^a)."""
    L = sx.exact(L)
    if not ctx.adjoint_present and sx.symbols_of(L, sx.Kind.ADJOINT):
        ctx = JetContext(ctx.m, adjoint_present=True)
    momentum = sp.diff(L, sx.u_t(alpha))
    _require_order_zero(momentum, "dL/du_t")
    return sx.simplify(sp.diff(L, sx.u(alpha)) - formal_total_derivative(momentum, ctx))
