import cmath
import math
from fractions import Fraction

import numpy as np
import pytest

from sclag import expr as ex
from sclag import oscint as oi
from sclag import phase as ph
from sclag import reduction as rd
from sclag import sgsymbols as sg

PROFILE = "exp(-(t2*(1+t1^2)^(-1/2))^2)*(1+t1^2)^(-1/2)*3.141592653589793^(-1/2)"


def phase(text, d, s, domain=None):
    sp = ex.VarSpace(d, s)
    return ph.PhaseFunction(ex.parse(text, sp), sp, domain)


def amp(text, d, s, m_e=0, m_psi=0):
    sp = ex.VarSpace(d, s)
    return sg.Amplitude(ex.parse(text, sp), sp, sg.SGOrder(m_e, m_psi))


def test_order_normalize_examples():
    for d in (1, 2, 3):
        delta = rd.order_normalize(0, 0, d, d, 0)
        assert delta.m_psi == Fraction(d, 4)
        const = rd.order_normalize(0, 0, d, 0, 0)
        assert const.legendrian_order == Fraction(-d, 4)
        assert (const.m_psi, const.m_e) == (Fraction(-d, 4), Fraction(d, 4))


def test_amplitude_orders_inverts_normalize():
    for args in [(Fraction(1, 2), -1, 2, 3, 1), (0, 0, 1, 1, 0), (Fraction(-3, 2), 2, 3, 2, 2)]:
        lag = rd.order_normalize(*args)
        m_psi, m_e = rd.amplitude_orders(lag.m_psi, lag.m_e, *args[2:])
        assert (m_e, m_psi) == (Fraction(args[0]), Fraction(args[1]))


def test_add_smooth_zero_and_bounded():
    phi = phase("x1*t1", 1, 1)
    same = rd.add_smooth(phi, ex.ZERO)
    assert ex.to_text(same.phase.expr) == ex.to_text(phi.expr)
    shifted = rd.add_smooth(phi, ex.parse("x1*jbx()^-1*jbt()^-1", phi.space))
    assert shifted.maslov_factor == 1
    assert rd.boundary_lambda_distance(phi, shifted.phase) < 1e-9


def test_add_smooth_rejects_unbounded():
    phi = phase("x1*t1", 1, 1)
    with pytest.raises(rd.SurgeryError):
        rd.add_smooth(phi, ex.jbx())


def test_increase_fiber_critical_set():
    phi = phase("x1*t1", 1, 1)
    up = rd.increase_fiber(phi, sign=1)
    cm = ph.critical_solve(up.phase, count=8)
    assert cm.samples and cm.excess == 0
    for p in cm.samples:
        assert abs(p.z[-1]) < 1e-10
    assert up.maslov_factor == pytest.approx(cmath.exp(-1j * math.pi / 4))
    assert rd.boundary_lambda_distance(phi, up.phase, faces=("psi",)) < 1e-9


def test_increase_fiber_preserves_mu():
    phi = phase("x1*t1", 1, 1)
    a = amp("jbx()^-1", 1, 1, -1, 0)
    before = rd.OrderRecord(-1, 0, 1, 0)
    for sign in (1, -1):
        up = rd.increase_fiber(phi, a, sign=sign)
        assert (up.order.mu_e, up.order.mu_psi) == (before.mu_e, before.mu_psi)


def test_reduce_fiber_closed_form():
    phi = phase("x1*t1+jbx()*t2^2*(1+t1^2)^(-1/2)", 1, 2)
    a = amp("jbx()^-1", 1, 2, -1, 0)
    p0 = ph.critical_solve(phi, faces=("interior",), count=4).face_samples("interior")[0]
    r = rd.reduce_fiber(phi, a, p0)
    assert r.maslov_factor == pytest.approx(cmath.exp(1j * math.pi / 4))
    assert r.order_delta == (Fraction(-1, 2), Fraction(1, 2))
    assert r.phase.space.s == 1
    xs = np.array([[0.3], [-2.0], [5.0]])
    ts = np.array([[1.0], [7.0], [-3.0]])
    c = np.sqrt(1 + xs[:, 0] ** 2) / np.sqrt(1 + ts[:, 0] ** 2)
    fresnel = np.sqrt(math.pi / c) / np.sqrt(1 + xs[:, 0] ** 2)
    np.testing.assert_allclose(r.amplitude(xs, ts), fresnel, rtol=1e-12)
    np.testing.assert_allclose(r.phase.value(xs, ts), xs[:, 0] * ts[:, 0], rtol=1e-14)


def test_reduce_fiber_split_signature_zero():
    phi = phase("x1*t1+jbx()*(t2^2-t3^2)*(1+t1^2)^(-1/2)", 1, 3)
    p0 = ph.critical_solve(phi, faces=("interior",), count=4).face_samples("interior")[0]
    r = rd.reduce_fiber(phi, amp("1", 1, 3), p0)
    assert r.maslov_factor == pytest.approx(1.0)
    assert r.order_delta == (Fraction(-1), Fraction(1))


def test_reduce_fiber_rank_zero_rejected():
    phi = phase("x1*t1", 1, 1)
    p0 = ph.critical_solve(phi, faces=("interior",), count=2).face_samples("interior")[0]
    with pytest.raises(rd.SurgeryError):
        rd.reduce_fiber(phi, amp("1", 1, 1), p0)


def test_reduce_after_increase_round_trip():
    phi = phase("x1*t1", 1, 1)
    up = rd.increase_fiber(phi, sign=1)
    p0 = ph.critical_solve(up.phase, faces=("interior",), count=4).face_samples("interior")[0]
    down = rd.reduce_fiber(up.phase, up.amplitude, p0)
    assert up.maslov_factor * down.maslov_factor == pytest.approx(1.0)
    assert (down.order.mu_e, down.order.mu_psi) == (up.order.mu_e, up.order.mu_psi)
    xs = np.array([[0.5], [3.0]])
    ts = np.array([[2.0], [-6.0]])
    # integrating out tau returns the original amplitude 1 up to the Gaussian profile normalization
    np.testing.assert_allclose(down.amplitude(xs, ts), 1.0, rtol=1e-12)
    np.testing.assert_allclose(down.phase.value(xs, ts), xs[:, 0] * ts[:, 0], atol=1e-12)


def test_eliminate_excess_normalized_profile():
    phi = phase("x1*t1", 1, 2, ph.ConeDomain((2,)))
    a = amp("jbx()^-1*exp(-(t2*10*(1+t1^2)^(-1/2))^2)*10*(1+t1^2)^(-1/2)*3.141592653589793^(-1/2)", 1, 2, -1, -1)
    r = rd.eliminate_excess(phi, a, 1)
    xs = np.array([[0.5], [3.0]])
    ts = np.array([[2.0], [10.0]])
    np.testing.assert_allclose(r.amplitude(xs, ts), 1 / np.sqrt(1 + xs[:, 0] ** 2), rtol=1e-9)
    assert r.order_delta == (Fraction(0), Fraction(1))
    assert (r.order.mu_e, r.order.mu_psi) == (Fraction(-3, 2), Fraction(1, 2))


def test_eliminate_excess_matches_fourier_representation():
    phi = phase("x1*t1", 1, 2, ph.ConeDomain((2,), Fraction(4)))
    a = amp(PROFILE, 1, 2, 0, -1)
    r = rd.eliminate_excess(phi, a, 1)
    pts_x = np.array([[0.0], [1.3]])
    pts_t = np.array([[0.0], [-4.0]])
    np.testing.assert_allclose(r.amplitude(pts_x, pts_t), 1.0, rtol=1e-7)
    f = oi.TestDensity.gaussian([0.4], 1.5)
    dup = oi.evaluate(phi, a, f, oi.QuadratureConfig(eps_list=(0.125,), refine=1.25,
                                                     fiber_box=[(-7.0, -24.0), (7.0, 24.0)], min_nodes=192))
    one = amp("1", 1, 1)
    std = oi.evaluate(r.phase, one, f, oi.QuadratureConfig(eps_list=(0.125,), refine=1.25, fiber_box=[(-7.0,), (7.0,)]))
    assert abs(dup.value - std.value) < 1e-3 * abs(std.value)
    assert std.value == pytest.approx(2 * math.pi * math.exp(-0.16 / 4.5), rel=1e-6)


def test_eliminate_excess_needs_excess():
    with pytest.raises(rd.SurgeryError):
        rd.eliminate_excess(phase("x1*t1+x2*t2", 2, 2), amp("1", 2, 2), 1)


def _pair(phi1, phi2):
    p1, p2 = rd.matched_pair(phi1, phi2, "psi")
    return rd.equivalence_decide(phi1, p1, phi2, p2)


def test_equivalence_suite():
    phi = phase("x1*t1", 1, 1)
    assert _pair(phi, phase("2*x1*t1", 1, 1)).equivalent is True
    assert _pair(phi, rd.add_smooth(phi, ex.parse("x1*jbx()^-1*jbt()^-1", phi.space)).phase).equivalent is True
    v = _pair(rd.increase_fiber(phi, sign=1).phase, rd.increase_fiber(phi, sign=-1).phase)
    assert v.equivalent is False and v.signatures == (1, -1)


def test_equivalence_symmetric_and_reflexive():
    a, b = phase("x1*t1", 1, 1), phase("2*x1*t1", 1, 1)
    assert _pair(a, a).equivalent is True
    assert _pair(b, a).equivalent == _pair(a, b).equivalent


def test_equivalence_preconditions_reported():
    v = _pair(phase("x1*t1", 1, 1), phase("x1*t1", 1, 2, ph.ConeDomain((2,))))
    assert v.equivalent is None
    assert v.preconditions["same_fiber_dimension"] is False
