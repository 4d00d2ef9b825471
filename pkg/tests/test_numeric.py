import io
import math

import numpy as np
import pytest
import sympy as sp

from claw import numeric as nm
from claw import symexpr as sx
from claw.errors import DomainError, NonFinite, UnboundSymbol
from claw.ibragimov import adjoint_system, conserved_quantity
from claw.symmetry import OdeSystem

u1, u2, u3 = sx.u(1), sx.u(2), sx.u(3)
v1, v2, v3 = sx.v(1), sx.v(2), sx.v(3)
REFERENCE = {"mu": 0.02, "nu": 0.2, "beta": 0.3, "c": 4}
U0, V0 = (980, 20, 1), (1, 1, 1)


def solve(sys, u0, v0, cfg=nm.NumericConfig(0, 1, 1e-2), params=None, **kw):
    return nm.integrate(sys, adjoint_system(sys), params or {}, u0, v0, cfg, **kw)


@pytest.fixture(scope="module")
def reference(hiv, hiv_adjoint):
    cfg = nm.NumericConfig(0, 10, 1e-3)
    return nm.integrate(hiv.system, hiv_adjoint, REFERENCE, U0, V0, cfg)


def test_exponential_decay():
    traj = solve(OdeSystem((-u1,)), [1.0], [1.0], nm.NumericConfig(0, 1, 1e-2))
    assert abs(float(traj.states[-1, 0]) - math.exp(-1)) <= 1e-10
    # adjoint of u' = -u is v' = v
    assert abs(float(traj.adjoints[-1, 0]) - math.e) <= 1e-9


def test_lands_on_t1():
    traj = solve(OdeSystem((-u1,)), [1.0], [1.0], nm.NumericConfig(0, 1, 0.3))
    assert float(traj.times[-1]) == 1.0
    assert np.allclose(np.diff(traj.times.astype(float))[:3], 0.3)


def test_reference_run_is_finite_and_positive(reference):
    assert np.all(np.isfinite(reference.states)) and np.all(np.isfinite(reference.adjoints))
    assert reference.min_state > 0


def test_step_halving_agrees(hiv, hiv_adjoint, reference):
    half = nm.integrate(hiv.system, hiv_adjoint, REFERENCE, U0, V0, nm.NumericConfig(0, 10, 5e-4))
    final, final_half = reference.states[-1].astype(float), half.states[-1].astype(float)
    assert np.allclose(final, final_half, rtol=1e-9)


class TestMonitor:
    def test_constant_quantity(self, reference):
        report = nm.monitor(reference, [("const", sp.Integer(7))])
        assert report["const"].max_abs == 0 and report["const"].initial == 7

    def test_scaling_law_conserved(self, hiv, hiv_adjoint, reference):
        q = conserved_quantity(hiv.system, hiv.generators["X2"], hiv_adjoint)
        drift = nm.monitor(reference, [q])["X2"]
        assert drift.max_rel <= 1e-8
        assert drift.initial == pytest.approx(1001.0)

    def test_probe_drifts(self, reference):
        assert nm.monitor(reference, [("u1v1", u1 * v1)])["u1v1"].max_rel >= 1e-3

    def test_unknown_quantity(self, reference):
        with pytest.raises(KeyError):
            nm.monitor(reference, [])["X9"]

    def test_unbound(self, reference):
        with pytest.raises(UnboundSymbol):
            nm.evaluate_along(reference, sp.Symbol("kappa") * u1)


@pytest.mark.parametrize("v0", [(1, 1, 1), (0.5, -2, 3), (0, 0, 1)])
def test_conservation_for_any_adjoint_solution(hiv, hiv_adjoint, v0):
    cfg = nm.NumericConfig(0, 2, 1e-3)
    traj = nm.integrate(hiv.system, hiv_adjoint, REFERENCE, U0, v0, cfg)
    qs = [conserved_quantity(hiv.system, g, hiv_adjoint) for g in hiv.generators.values()]
    report = nm.monitor(traj, qs)
    for entry in report.entries:
        assert entry.max_rel <= 1e-8, entry


def test_deterministic(hiv, hiv_adjoint):
    cfg = nm.NumericConfig(0, 1, 1e-2, seed=4)
    params = nm.sample_params(hiv.system.params, cfg.seed)
    assert params == nm.sample_params(hiv.system.params, 4)
    a = nm.integrate(hiv.system, hiv_adjoint, params, U0, V0, cfg)
    b = nm.integrate(hiv.system, hiv_adjoint, params, U0, V0, cfg)
    assert np.array_equal(a.states, b.states) and np.array_equal(a.adjoints, b.adjoints)


def test_double_precision_option(hiv, hiv_adjoint):
    traj = nm.integrate(hiv.system, hiv_adjoint, REFERENCE, U0, V0, nm.NumericConfig(0, 1, 1e-2), dtype=np.float64)
    assert traj.states.dtype == np.float64


def test_csv():
    traj = solve(OdeSystem((-u1,)), [1.0], [2.0], nm.NumericConfig(0, 0.5, 0.25))
    buf = io.StringIO()
    nm.write_csv(traj, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,u1,v1"
    assert lines[1] == "0,1,2"
    assert len(lines) == 4
    assert float(lines[-1].split(",")[0]) == 0.5


class TestErrors:
    def test_missing_parameter(self, hiv, hiv_adjoint):
        with pytest.raises(UnboundSymbol):
            nm.integrate(hiv.system, hiv_adjoint, {"mu": 1}, U0, V0, nm.NumericConfig(0, 1, 0.1))

    def test_non_positive_initial_state(self, hiv, hiv_adjoint):
        with pytest.raises(DomainError):
            nm.integrate(hiv.system, hiv_adjoint, REFERENCE, (0, 0, 0), V0, nm.NumericConfig(0, 1, 0.1))

    def test_pole_crossing(self):
        # clock state u2 = 3 - t drives the denominator through zero at t = 2
        sys = OdeSystem((1 / (u2 - 1), sp.Integer(-1)))
        with pytest.raises(DomainError):
            solve(sys, [1.0, 3.0], [1.0, 1.0], nm.NumericConfig(0, 3, 0.1), require_positive=False)

    def test_blow_up(self):
        sys = OdeSystem((u1**2,))
        with pytest.raises(NonFinite):
            solve(sys, [10.0], [1.0], nm.NumericConfig(0, 1, 1e-3))

    def test_bad_config(self):
        with pytest.raises(ValueError):
            nm.NumericConfig(1, 0, 0.1)
        with pytest.raises(ValueError):
            nm.NumericConfig(0, 1, 0)
