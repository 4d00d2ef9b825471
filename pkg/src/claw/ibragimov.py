"""Conservation laws from symmetries via the adjoint system.

Pipeline: formal Lagrangian -> adjoint system -> extension of an admitted
generator to the adjoint variables -> conserved quantity with an on-shell
certificate.
"""
from __future__ import annotations

from dataclasses import dataclass

import sympy as sp

from . import symexpr as sx
from .errors import CertificateFailed, InvarianceTestFailed, NotASymmetry
from .symmetry import Generator, LambdaMatrix, OdeSystem, check_symmetry, compute_lambda
from .varcalc import JetContext, euler_lagrange, formal_total_derivative, onshell_total_derivative, prolong1


@dataclass(frozen=True)
class Certificate:
    """Outcome of a symbolic zero test; ``residual`` is the simplified remainder."""

    claim: str
    residual: sx.Expression
    verdict: sx.Equivalence

    @property
    def passed(self) -> bool:
        return self.verdict is sx.Equivalence.PROVED_EQUAL


def _certify(claim, expr) -> Certificate:
    residual = sx.simplify(expr)
    verdict = sx.Equivalence.PROVED_EQUAL if residual == 0 else sx.equivalent(residual, 0)
    return Certificate(claim, residual, verdict)


@dataclass(frozen=True)
class FormalLagrangian:
    L: sx.Expression
    system: OdeSystem


@dataclass(frozen=True)
class AdjointSystem:
    """Solved form ``v_t^a = g[a-1](t, u, v)``."""

    g: tuple
    system: OdeSystem

    @property
    def m(self) -> int:
        return len(self.g)


@dataclass(frozen=True)
class ExtendedGenerator:
    base: Generator
    eta_star: tuple
    lam: LambdaMatrix
    certificate: Certificate

    @property
    def name(self) -> str:
        return self.base.name


@dataclass(frozen=True)
class ConservedQuantity:
    C: sx.Expression
    raw: sx.Expression
    generator: Generator
    extension: ExtendedGenerator | None
    certificate: Certificate

    @property
    def name(self) -> str:
        return self.generator.name

    @property
    def certified(self) -> bool:
        return self.certificate.passed


def formal_lagrangian(sys: OdeSystem) -> FormalLagrangian:
    L = sp.Add(*(sx.v(b) * sys.F(b) for b in range(1, sys.m + 1)))
    return FormalLagrangian(sx.simplify(L), sys)


def adjoint_system(sys: OdeSystem) -> AdjointSystem:
    L = formal_lagrangian(sys).L
    ctx = JetContext(sys.m, adjoint_present=True)
    rows = []
    for a in range(1, sys.m + 1):
        # F*_a = dL/du^a - v_t^a, so v_t^a = F*_a + v_t^a
        rows.append(sx.simplify(euler_lagrange(L, a, ctx) + sx.v_t(a)))
    for a, row in enumerate(rows, start=1):
        if not sx.is_derivative_free(row):
            raise AssertionError(f"adjoint row {a} still contains derivatives: {row}")
    return AdjointSystem(tuple(rows), sys)


def _extension_residual(sys: OdeSystem, g: Generator, eta_star) -> sx.Expression:
    L = formal_lagrangian(sys).L
    pg = prolong1(g, JetContext(sys.m))
    action = pg.apply(L) + sp.Add(
        *(es * sp.diff(L, sx.v(k)) for k, es in enumerate(eta_star, start=1))
    )
    return action + L * formal_total_derivative(g.xi, JetContext(sys.m))


def verify_extension(sys: OdeSystem, adj: AdjointSystem | None, ext: ExtendedGenerator) -> Certificate:
    """Check Y(L) + L D_t(xi) = 0 off-shell; raise with the residual otherwise."""
    cert = _certify(f"Y({ext.name})L + L*D_t(xi) = 0", _extension_residual(sys, ext.base, ext.eta_star))
    if not cert.passed:
        raise InvarianceTestFailed(
            f"extension of {ext.name} fails the invariance test: residual {cert.residual}",
            residual=cert.residual,
        )
    return cert


def extend_generator(sys: OdeSystem, g: Generator) -> ExtendedGenerator:
    lam = compute_lambda(sys, g)
    d_xi = formal_total_derivative(g.xi, JetContext(sys.m))
    m = sys.m
    # transpose pairing: eta*^a = -(sum_b lam[b][a] v^b + v^a D_t xi)
    eta_star = tuple(
        sx.simplify(-(sp.Add(*(lam[b, a] * sx.v(b + 1) for b in range(m))) + sx.v(a + 1) * d_xi))
        for a in range(m)
    )
    pending = ExtendedGenerator(g, eta_star, lam, None)
    cert = verify_extension(sys, None, pending)
    return ExtendedGenerator(g, eta_star, lam, cert)


def noether_density(sys: OdeSystem, g: Generator) -> sx.Expression:
    """Unsimplified xi L + (eta^a - xi u_t^a) dL/du_t^a."""
    L = formal_lagrangian(sys).L
    return g.xi * L + sp.Add(
        *((eta - g.xi * sx.u_t(k)) * sp.diff(L, sx.u_t(k)) for k, eta in enumerate(g.eta, start=1))
    )


def conserved_quantity(
    sys: OdeSystem,
    g: Generator,
    adj: AdjointSystem | None = None,
    *,
    strict: bool = True,
) -> ConservedQuantity:
    """Conserved quantity attached to the admitted generator ``g``.

    With ``strict=False`` an uncertified quantity is returned instead of
    raising CertificateFailed.
    """
    report = check_symmetry(sys, g)
    if not report.admitted:
        raise NotASymmetry(f"{g.name} is not admitted by {sys.name}", residuals=report.residuals)
    ext = extend_generator(sys, g)
    if adj is None:
        adj = adjoint_system(sys)
    raw = noether_density(sys, g)
    C = sx.simplify(raw)
    if not sx.is_derivative_free(C):
        raise CertificateFailed(f"{g.name}: derivative terms did not cancel in {C}", residual=C)
    cert = _certify(f"D_t C[{g.name}] = 0 on solutions", onshell_total_derivative(C, sys, adj))
    if strict and not cert.passed:
        raise CertificateFailed(
            f"{g.name}: on-shell D_t C does not vanish: {cert.residual}", residual=cert.residual
        )
    return ConservedQuantity(C, raw, g, ext, cert)


def raw_matches_simplified(q: ConservedQuantity) -> bool:
    return sx.equivalent(q.raw, q.C) is sx.Equivalence.PROVED_EQUAL
