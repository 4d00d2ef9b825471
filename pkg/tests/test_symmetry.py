import random

import pytest
import sympy as sp

from claw import symexpr as sx
from claw.errors import NotASymmetry
from claw.symmetry import Generator, OdeSystem, check_symmetry, compute_lambda
from helpers import A, autonomous_system, homogeneous_system

u1, u2, u3 = sx.u(1), sx.u(2), sx.u(3)
beta, c, mu, nu = sp.symbols("beta c mu nu")
S = u1 + u2 + u3


@pytest.mark.parametrize("name", ["X1", "X2", "X3"])
def test_fixture_generators_admitted(hiv, name):
    report = check_symmetry(hiv.system, hiv.generators[name])
    assert report.admitted
    assert report.residuals == (0, 0, 0)


def test_perturbed_generator_rejected(hiv):
    report = check_symmetry(hiv.system, hiv.counterexample)
    assert not report.admitted
    # the incidence term u1*u2/S is not invariant under u1 -> e^s u1
    expected = (-beta * c * u1**2 * u2 / S**2, -beta * c * u1 * u2 * (u2 + u3) / S**2, 0)
    for got, want in zip(report.residuals, expected):
        assert sx.equivalent(got, want) is sx.Equivalence.PROVED_EQUAL
    with pytest.raises(NotASymmetry) as info:
        compute_lambda(hiv.system, hiv.counterexample)
    assert info.value.residuals


@pytest.mark.parametrize("name", ["X1", "X2", "X3"])
def test_lambda_matches_fixture(hiv, name):
    lam = compute_lambda(hiv.system, hiv.generators[name])
    expected = hiv.expected_lambda[name].value
    for a in range(3):
        for b in range(3):
            assert sx.equivalent(lam[a, b], expected[a][b]) is sx.Equivalence.PROVED_EQUAL


def test_lambda_shapes(hiv):
    assert compute_lambda(hiv.system, hiv.generators["X1"]).is_zero()
    assert compute_lambda(hiv.system, hiv.generators["X2"]).is_identity()


def test_lambda_certificate(hiv):
    lam = compute_lambda(hiv.system, hiv.generators["X3"])
    assert all(v is sx.Equivalence.PROVED_EQUAL for v in lam.certificate)


def test_dimension_mismatch(hiv):
    with pytest.raises(ValueError):
        check_symmetry(hiv.system, Generator(1, (0, 0)))


def test_time_translation_breaks_on_explicit_time():
    sys = OdeSystem((sx.T * u1,))
    assert not check_symmetry(sys, Generator(1, (0,))).admitted


def test_system_validation():
    with pytest.raises(ValueError):
        OdeSystem((sx.v(1),))
    with pytest.raises(ValueError):
        OdeSystem((A * u1,))  # undeclared parameter
    sys = OdeSystem((A * u1,), params=("a",))
    assert sys.params == (A,)
    assert sys.F(1) == sx.u_t(1) - A * u1


def test_scaling_law_on_homogeneous_systems():
    rng = random.Random(31)
    for _ in range(20):
        sys = homogeneous_system(rng)
        g = Generator(0, (u1, u2, u3), "scale")
        assert check_symmetry(sys, g).admitted
        assert compute_lambda(sys, g).is_identity()


def test_time_translation_on_autonomous_systems():
    rng = random.Random(37)
    for _ in range(20):
        sys = autonomous_system(rng)
        g = Generator(1, (0, 0, 0), "translate")
        assert check_symmetry(sys, g).admitted
        assert compute_lambda(sys, g).is_zero()


def test_admitted_iff_lambda_exists():
    rng = random.Random(41)
    candidates = [Generator(0, (u1, 0, 0)), Generator(1, (0, 0, 0)), Generator(0, (u1, u2, u3)),
                  Generator(0, (u2, u1, 0)), Generator(sx.T, (0, 0, 0))]
    for _ in range(5):
        sys = homogeneous_system(rng)
        for g in candidates:
            admitted = check_symmetry(sys, g).admitted
            try:
                compute_lambda(sys, g)
                has_lambda = True
            except NotASymmetry:
                has_lambda = False
            assert admitted == has_lambda, (sys.f, g)
