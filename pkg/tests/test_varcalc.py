import random

import pytest
import sympy as sp
from hypothesis import HealthCheck, given, settings

from claw import symexpr as sx
from claw.errors import JetOrderExceeded, MissingAdjoint
from claw.ibragimov import adjoint_system
from claw.symmetry import Generator, OdeSystem
from claw.varcalc import (
    JetContext,
    euler_lagrange,
    formal_total_derivative,
    onshell_total_derivative,
    prolong1,
)
from helpers import A, B, expressions, random_expression, random_point

u1, u2, u3 = sx.u(1), sx.u(2), sx.u(3)
v1, v2, v3 = sx.v(1), sx.v(2), sx.v(3)
mu, nu = sp.symbols("mu nu")
CTX3 = JetContext(3)
slow = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])


def proved(a, b):
    return sx.equivalent(a, b) is sx.Equivalence.PROVED_EQUAL


class TestFormalTotalDerivative:
    def test_product_of_states(self):
        d = formal_total_derivative(u1 * u2, JetContext(2))
        assert proved(d, sx.u_t(1) * u2 + u1 * sx.u_t(2))

    def test_explicit_time(self):
        assert formal_total_derivative(sx.T**2 * u1, JetContext(1)) == sx.simplify(
            2 * sx.T * u1 + sx.T**2 * sx.u_t(1)
        )

    def test_adjoint_terms_only_when_present(self):
        assert formal_total_derivative(v1, CTX3) == 0
        assert formal_total_derivative(v1, JetContext(3, adjoint_present=True)) == sx.v_t(1)

    def test_rejects_first_order_input(self):
        with pytest.raises(JetOrderExceeded):
            formal_total_derivative(sx.u_t(1), CTX3)

    def test_chain_rule_along_a_curve(self):
        # oracle: plug a concrete curve u(t) in and differentiate in t by finite differences
        rng = random.Random(5)
        curve = {u1: sp.exp(sx.T / 3), u2: 1 + sx.T**2, u3: 2 + sp.sin(sx.T)}
        rates = {sx.u_t(k): sp.diff(curve[sx.u(k)], sx.T) for k in (1, 2, 3)}
        for _ in range(30):
            e = random_expression(rng, 3)
            d = formal_total_derivative(e, CTX3)
            point = random_point(rng, [A, B])
            t0, h = rng.uniform(0.5, 2.0), 1e-5
            on_curve = lambda expr, t: sx.evaluate(expr.xreplace(curve).xreplace(rates), {**point, sx.T: t})
            fd = (on_curve(e, t0 + h) - on_curve(e, t0 - h)) / (2 * h)
            exact = on_curve(d, t0)
            assert abs(exact - fd) <= 1e-5 * (1 + abs(exact))


class TestOnshell:
    decay = OdeSystem((-mu * u1,), params=(mu,))

    def test_decay(self):
        assert onshell_total_derivative(u1, self.decay) == -mu * u1

    def test_accepts_first_order_input(self):
        assert onshell_total_derivative(sx.u_t(1), self.decay) == mu**2 * u1

    def test_pairing_conserved(self):
        sys = OdeSystem((-mu * u1 + nu * u2, -nu * u2), params=(mu, nu))
        adj = adjoint_system(sys)
        assert onshell_total_derivative(u1 * v1 + u2 * v2, sys, adj) == 0

    def test_probe_not_conserved(self, hiv, hiv_adjoint):
        assert onshell_total_derivative(u1 * v1, hiv.system, hiv_adjoint) != 0

    def test_missing_adjoint(self):
        with pytest.raises(MissingAdjoint):
            onshell_total_derivative(u1 * v1, self.decay)

    @slow
    @given(expressions())
    def test_agrees_with_formal_then_substitute(self, e):
        sys = OdeSystem((A * u1 - u2, u1 * u2 / (u1 + u3 + 1), B * sx.T * u3), params=(A, B))
        bindings = {sx.u_t(k): f for k, f in enumerate(sys.f, start=1)}
        expected = sx.substitute(formal_total_derivative(e, CTX3), bindings)
        assert proved(onshell_total_derivative(e, sys), expected)


class TestProlong:
    def test_time_translation(self, hiv):
        pg = prolong1(hiv.generators["X1"], CTX3)
        assert pg.zeta == (0, 0, 0)

    def test_scaling(self, hiv):
        pg = prolong1(hiv.generators["X2"], CTX3)
        assert pg.zeta == (sx.u_t(1), sx.u_t(2), sx.u_t(3))

    def test_exponential_generator(self, hiv):
        pg = prolong1(hiv.generators["X3"], CTX3)
        decay = sp.exp(-(mu + nu) * sx.T)
        assert pg.zeta[0] == 0
        assert proved(pg.zeta[1], -(mu + nu) * decay)
        expected3 = decay * (
            -(mu + nu) * (u1 + u3) / u2
            + (sx.u_t(1) + sx.u_t(3)) / u2
            - (u1 + u3) * sx.u_t(2) / u2**2
        )
        assert proved(pg.zeta[2], expected3)

    def test_time_dependent_xi(self):
        g = Generator(sx.T, (u1,))
        assert prolong1(g, JetContext(1)).zeta == (0,)

    @slow
    @given(expressions(depth=2), expressions(depth=2), expressions(depth=2))
    def test_linear_in_the_generator(self, a, b, c):
        g1, g2 = Generator(a, (b, 0, c)), Generator(c, (a, b, 0))
        p_sum, p1, p2 = prolong1(g1 + g2, CTX3), prolong1(g1, CTX3), prolong1(g2, CTX3)
        for z, z1, z2 in zip(p_sum.zeta, p1.zeta, p2.zeta):
            assert sx.simplify(z - z1 - z2) == 0

    def test_rejects_derivative_coefficients(self):
        with pytest.raises(ValueError):
            Generator(0, (sx.u_t(1),))


class TestEulerLagrange:
    def test_exact_derivative(self):
        L = u1 * sx.u_t(1)
        assert euler_lagrange(L, 1, JetContext(1)) == 0

    def test_potential(self):
        L = u1**3 * sx.T
        assert euler_lagrange(L, 1, JetContext(1)) == 3 * u1**2 * sx.T

    def test_first_order_lagrangian(self):
        L = v1 * (sx.u_t(1) + mu * u1)
        assert euler_lagrange(L, 1, JetContext(1)) == sx.simplify(mu * v1 - sx.v_t(1))

    def test_mixed_coupling(self):
        L = u2 * sx.u_t(1)
        ctx = JetContext(2)
        assert euler_lagrange(L, 1, ctx) == -sx.u_t(2)
        assert euler_lagrange(L, 2, ctx) == sx.u_t(1)

    def test_rejects_second_order_momentum(self):
        with pytest.raises(JetOrderExceeded):
            euler_lagrange(sx.u_t(1) ** 3, 1, JetContext(1))

    def test_null_lagrangians(self):
        rng = random.Random(2024)
        for _ in range(30):
            e = random_expression(rng, 3)
            total = formal_total_derivative(e, CTX3)
            for alpha in (1, 2, 3):
                assert euler_lagrange(total, alpha, CTX3) == 0

    @slow
    @given(expressions(depth=2), expressions(depth=2))
    def test_leibniz(self, a, b):
        lhs = formal_total_derivative(a * b, CTX3)
        rhs = formal_total_derivative(a, CTX3) * b + a * formal_total_derivative(b, CTX3)
        assert sx.simplify(lhs - rhs) == 0
