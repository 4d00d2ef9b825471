import pytest

from claw import symexpr as sx
from claw.ibragimov import conserved_quantity, extend_generator
from claw.models import hiv_path, hiv_source
from claw.symmetry import check_symmetry, compute_lambda


def test_shape(hiv):
    assert hiv.system.m == 3
    assert set(hiv.generators) == {"X1", "X2", "X3"}
    assert set(hiv.expected_conserved) == set(hiv.generators)
    assert hiv.system.is_autonomous()


def test_scaling_law_present(hiv):
    assert hiv.generators["X2"].eta == (sx.u(1), sx.u(2), sx.u(3))
    c2 = hiv.expected_conserved["X2"].value
    assert c2 == sx.simplify(sx.u(1) * sx.v(1) + sx.u(2) * sx.v(2) + sx.u(3) * sx.v(3))


def test_every_expectation_has_provenance(hiv):
    for group in (hiv.expected_extensions, hiv.expected_conserved, hiv.expected_lambda):
        for item in group.values():
            assert item.source


def test_corrections_are_annotated(hiv):
    for name in ("X3",):
        assert "derived" in hiv.expected_extensions[name].source and hiv.expected_extensions[name].note
        assert "derived" in hiv.expected_conserved[name].source and hiv.expected_conserved[name].note
    assert any("delta" in note for note in hiv.annotations.values())


@pytest.mark.parametrize("name", ["X1", "X2", "X3"])
def test_pipeline_reproduces_fixture(hiv, hiv_adjoint, name):
    g = hiv.generators[name]
    assert check_symmetry(hiv.system, g).admitted
    lam = compute_lambda(hiv.system, g)
    want = hiv.expected_lambda[name].value
    assert all(sx.is_zero(lam[a, b] - want[a][b]) for a in range(3) for b in range(3))
    ext = extend_generator(hiv.system, g)
    assert all(sx.is_zero(x - y) for x, y in zip(ext.eta_star, hiv.expected_extensions[name].value))
    q = conserved_quantity(hiv.system, g, hiv_adjoint)
    assert sx.is_zero(q.C - hiv.expected_conserved[name].value)


def test_counterexample_rejected(hiv):
    assert not check_symmetry(hiv.system, hiv.counterexample).admitted


def test_shipped_source():
    assert "system hiv" in hiv_source()
    assert hiv_path().name == "hiv.claw"
