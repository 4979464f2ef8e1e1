from fractions import Fraction

import numpy as np
import pytest

from sclag import expr as ex
from sclag import geometry as geo
from sclag import sgsymbols as sg


def amp(text, sp, m_e, m_psi):
    return sg.Amplitude(ex.parse(text, sp), sp, sg.SGOrder(m_e, m_psi))


@pytest.fixture
def sp12():
    return ex.VarSpace(1, 2)


@pytest.mark.parametrize("m_e,m_psi", [(0, 0), (1, -1), ("-1/2", "3/2")])
def test_generators_pass_at_declared_order(m_e, m_psi, sp12):
    a = amp(f"jbx()^({m_e})*jbt()^({m_psi})", sp12, Fraction(m_e), Fraction(m_psi))
    assert sg.verify_order(a).passes


def test_wrong_order_fails(sp12):
    assert not sg.verify_order(amp("jbt()^2", sp12, 0, 1)).passes


def test_bracket_phase_is_order_one_one(sp12):
    assert sg.verify_order(amp("x1*jbt()", sp12, 1, 1)).passes


def test_order_report_counts_derivatives(sp12):
    rep = sg.verify_order(amp("jbx()", sp12, 1, 0), depth=1)
    assert rep.checked == 1 + 3


def test_principal_components_of_bracket(sp12):
    parts = sg.principal_components(amp("jbt()", sp12, 0, 1))
    xs = np.array([[0.3]])
    ts = np.array([[30.0, 40.0]])
    assert parts.evaluate("psi", xs, ts)[0] == pytest.approx(50.0, rel=1e-12)


def test_corner_component_of_bracket_phase(sp12):
    parts = sg.principal_components(amp("x1*jbt()", sp12, 1, 1))
    assert parts.symbolic
    xs = np.array([[-7.0]])
    ts = np.array([[6.0, 8.0]])
    assert parts.evaluate("psie", xs, ts)[0] == pytest.approx(-70.0, rel=1e-12)


def test_decaying_amplitude_has_zero_components(sp12):
    parts = sg.principal_components(amp("jbx()^-1*jbt()^-1", sp12, 0, 0))
    xs = np.array([[50.0]])
    ts = np.array([[40.0, 30.0]])
    for face in ("e", "psi", "psie"):
        assert abs(parts.evaluate(face, xs, ts)[0]) < 1e-14


def test_principal_part_residual_is_lower_order(sp12):
    ap = sg.principal_part(amp("jbx()*jbt()", sp12, 1, 1))
    assert sg.residual_check(ap).passes


def test_homogeneous_amplitude_equals_its_principal_part():
    sp = ex.VarSpace(1, 1)
    ap = sg.principal_part(amp("nx()*nt()", sp, 1, 1))
    xs = np.array([[9.0], [-10.0]])
    ts = np.array([[12.0], [20.0]])
    a = ex.evaluate(ap.parts.amplitude.expr, xs, ts)
    np.testing.assert_allclose(ap(xs, ts), a, rtol=1e-13)


def test_cutoff_choices_differ_by_lower_order(sp12):
    a = amp("jbx()*jbt()", sp12, 1, 1)
    diff = sg.principal_part_difference(sg.principal_part(a, Fraction(1, 2)), sg.principal_part(a, Fraction(1, 3)))
    rep = sg.verify_order_values(diff, sg.SGOrder(0, 0), sp12)
    assert rep.passes


def test_cutoff_parameter_range(sp12):
    with pytest.raises(sg.SymbolError):
        sg.principal_part(amp("1", sp12, 0, 0), Fraction(3, 2))


def test_transform_identity_and_rotation():
    sp = ex.VarSpace(1, 2)
    a = amp("jbx()^-1*jbt()", sp, -1, 1)
    ident = geo.ScMapSpec((ex.x(1), ex.x(2)), 2)
    assert sg.transform_principal(a, psi_t=ident).passes
    msp = ex.VarSpace(2, 1)
    rot = geo.ScMapSpec((ex.parse("0.6*x1-0.8*x2", msp), ex.parse("0.8*x1+0.6*x2", msp)), 2)
    assert sg.transform_principal(a, psi_t=rot).passes


def test_transform_fiber_scaling():
    sp = ex.VarSpace(1, 1)
    a = amp("jbt()", sp, 0, 1)
    scale = geo.ScMapSpec((ex.parse("2*x1", sp),), 1)
    assert sg.transform_principal(a, psi_t=scale).passes


def test_convention_must_be_known(sp12):
    with pytest.raises(sg.SymbolError):
        sg.Amplitude(ex.ONE, sp12, sg.SGOrder(0, 0), "density")
