"""Built-in fixture: Anderson's HIV transmission model and its symmetry algebra.

Expected data is stored in the mathematically consistent form.  Where the
published formulas differ (notation drift, misprints) the published form is
kept verbatim in ``annotations`` next to the corrected one.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

import sympy as sp

from . import symexpr as sx
from .ibragimov import AdjointSystem
from .symmetry import Generator, OdeSystem

beta, c, mu, nu = sp.symbols("beta c mu nu")
u1, u2, u3 = sx.u(1), sx.u(2), sx.u(3)
v1, v2, v3 = sx.v(1), sx.v(2), sx.v(3)
S = u1 + u2 + u3
decay = sp.exp(-(mu + nu) * sx.T)


@dataclass(frozen=True)
class Expected:
    name: str
    value: object
    source: str
    note: str = ""


@dataclass(frozen=True)
class Fixture:
    system: OdeSystem
    generators: dict
    expected_adjoint: AdjointSystem
    expected_extensions: dict
    expected_conserved: dict
    expected_lambda: dict
    counterexample: Generator
    annotations: dict = field(default_factory=dict)


def hiv_system() -> OdeSystem:
    incidence = beta * c * u1 * u2 / S
    return OdeSystem(
        f=(
            -incidence - mu * u1,
            incidence - (nu + mu) * u2,
            nu * u2 - (mu + beta * c) * u3,
        ),
        params=(beta, c, mu, nu),
        name="hiv",
    )


def hiv_generators() -> dict:
    return {
        "X1": Generator(1, (0, 0, 0), "X1"),
        "X2": Generator(0, (u1, u2, u3), "X2"),
        "X3": Generator(0, (0, decay, decay * (u1 + u3) / u2), "X3"),
    }


def anderson_hiv() -> Fixture:
    sys = hiv_system()
    gens = hiv_generators()
    delta = c
    alpha = mu + beta * c
    adjoint_rows = (
        v1 * (u2 * beta * delta / S - u1 * u2 * beta * delta / S**2 + mu)
        - v2 * u2 * (u2 + u3) * beta * delta / S**2,
        v2 * (mu + nu - u1 * (u1 + u3) * beta * delta / S**2)
        + v1 * u1 * (u1 + u3) * beta * delta / S**2
        - v3 * nu,
        v3 * alpha - v1 * u1 * u2 * beta * delta / S**2 + v2 * u1 * u2 * beta * delta / S**2,
    )
    zero3 = (0, 0, 0)
    extensions = {
        "X1": Expected("Y1", zero3, "published: Y1 = X1"),
        "X2": Expected("Y2", (-v1, -v2, -v3), "published: eta* = -v"),
        "X3": Expected(
            "Y3",
            (-decay * v3 / u2, decay * v3 * (u1 + u3) / u2**2, -decay * v3 / u2),
            "derived from the invariance test",
            "published form multiplies the v-terms by the constant c; the invariance "
            "test forces the factor v3",
        ),
    }
    conserved = {
        "X1": Expected(
            "C1",
            u1 * u2 * beta * delta * (v1 - v2) / S + v1 * u1 * mu + v2 * u2 * (mu + nu)
            + v3 * (u3 * alpha - u2 * nu),
            "published first law",
        ),
        "X2": Expected("C2", v1 * u1 + v2 * u2 + v3 * u3, "published second law"),
        "X3": Expected(
            "C3",
            decay * (v2 + v3 * (u1 + u3) / u2),
            "third law, derived from X3",
            "published denominator is (u1)^2; the eta^3 coefficient of X3 forces u2",
        ),
    }
    identity = ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    lam = {
        "X1": Expected("lambda(X1)", ((0,) * 3,) * 3, "published: lambda = 0"),
        "X2": Expected("lambda(X2)", identity, "derived: F is homogeneous of degree 1 in (u, u_t)"),
        "X3": Expected(
            "lambda(X3)",
            ((0, 0, 0), (0, 0, 0), (decay / u2, -decay * (u1 + u3) / u2**2, decay / u2)),
            "derived: coefficient matching on zeta^3",
        ),
    }
    annotations = {
        "model": "published in unsolved form F_a = 0; stored here as u_t = f",
        "adjoint": "printed with delta for c and alpha for mu + beta*c",
        "lagrangian": "printed with a leading minus on the v2 bracket and -beta*c in the v1 bracket; "
        "L = v^b F_b with F in unsolved form is used instead",
        "Y3": extensions["X3"].note,
        "C3": conserved["X3"].note,
        "removal rate": "the AIDS compartment leaves at mu + beta*c, as published",
    }
    return Fixture(
        system=sys,
        generators=gens,
        expected_adjoint=AdjointSystem(tuple(sx.exact(r) for r in adjoint_rows), sys),
        expected_extensions=extensions,
        expected_conserved=conserved,
        expected_lambda=lam,
        counterexample=Generator(0, (u1, 0, 0), "BAD"),
        annotations=annotations,
    )


def hiv_source() -> str:
    """Text of the shipped DSL description of the model."""
    return resources.files("claw.data").joinpath("hiv.claw").read_text()


def hiv_path():
    return resources.files("claw.data").joinpath("hiv.claw")
