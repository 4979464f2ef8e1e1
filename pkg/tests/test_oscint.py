import cmath
import math

import numpy as np
import pytest

from sclag import expr as ex
from sclag import oscint as oi
from sclag import phase as ph
from sclag.geometry import CompactPoint


def ones(X, T):
    return np.ones(np.broadcast_shapes(X.shape[:-1], T.shape[:-1]))


def probe(face, base, fiber):
    return CompactPoint(face, 0.0 if face == "e" else 1.0, tuple(base), 0.0 if face == "psi" else 1.0, tuple(fiber))


@pytest.mark.parametrize("kind", ["exp", "tanh"])
def test_profile_shape(kind):
    chi = oi.ChiProfile(kind)
    u = np.array([0.0, 1.0, 2.0, 3.0, 4.0, 10.0])
    v = chi.value(u)
    assert v[0] == v[1] == v[2] == 1.0
    assert 0 < v[3] < 1
    assert v[4] == v[5] == 0.0


@pytest.mark.parametrize("kind", ["exp", "tanh"])
def test_regularizer_checks(kind):
    reg = oi.make_regularizer(oi.ChiProfile(kind), 0.1)
    assert max(reg.checks["uniformity_spread"]) <= 1.5
    assert reg.checks["pointwise_deviation"][-1] == 0
    assert reg.fiber_radius == pytest.approx(math.sqrt(40.0 ** 2 - 1))


def test_gaussian_profile_rejected():
    with pytest.raises(oi.OscError, match="compactly supported"):
        oi.make_regularizer(oi.ChiProfile("gaussian"), 0.1)


def test_bad_profile_parameters():
    with pytest.raises(oi.OscError):
        oi.ChiProfile("box")
    with pytest.raises(oi.OscError):
        oi.ChiProfile("exp", flat=3.0, support=2.0)
    with pytest.raises(oi.OscError):
        oi.QuadratureConfig(eps_list=(0.1, 0.2))


def test_gauss_legendre_panels_integrate_polynomial():
    x, w = oi.gauss_legendre_panels(-1.0, 2.0, 40)
    assert np.sum(w * x ** 5) == pytest.approx((2.0 ** 6 - 1.0) / 6, rel=1e-12)


@pytest.mark.parametrize("center,width", [(0.0, 0.5), (0.3, 0.3), (-0.2, 0.8)])
def test_fourier_inversion_one_dimension(center, width):
    phi = ph.PhaseFunction.parse("x1*t1", ex.VarSpace(1, 1))
    f = oi.TestDensity.gaussian([center], width)
    r = oi.evaluate(phi, ones, f, oi.QuadratureConfig(eps_list=(0.125, 0.0625)))
    expected = 2 * math.pi * math.exp(-center ** 2 / (2 * width ** 2))
    assert abs(r.value - expected) < 1e-6 * expected
    assert r.converged


def test_profiles_agree():
    phi = ph.PhaseFunction.parse("x1*t1", ex.VarSpace(1, 1))
    f = oi.TestDensity.gaussian([0.2], 0.4)
    cfg = oi.QuadratureConfig(eps_list=(0.125, 0.0625))
    a = oi.evaluate(phi, ones, f, cfg, oi.ChiProfile("exp")).value
    b = oi.evaluate(phi, ones, f, cfg, oi.ChiProfile("tanh")).value
    assert abs(a - b) < 1e-6 * (1 + abs(a))


def test_stationary_phase_model():
    errs = []
    lams = [50.0, 100.0, 200.0, 400.0]
    for lam in lams:
        q = oi.gaussian_model_quadrature(lam)
        assert abs(q - oi.gaussian_model_exact(lam)) < 1e-10 * abs(q)
        sp = oi.stationary_phase_eval(np.array([[1.0]]), 1.0, lam=lam)
        errs.append(abs(q - sp.value) / abs(q))
    assert errs[2] < 0.05
    rate = -np.polyfit(np.log(lams), np.log(errs), 1)[0]
    assert rate >= 0.8


def test_stationary_phase_signature_and_degeneracy():
    sp = oi.stationary_phase_eval(np.diag([2.0, -3.0, -1.0]), 1.0)
    assert sp.signature == -1
    assert sp.maslov == pytest.approx(cmath.exp(-1j * math.pi / 4))
    with pytest.raises(oi.OscError):
        oi.stationary_phase_eval(np.diag([1.0, 0.0]), 1.0)


def test_maslov_ratio():
    sp = ex.VarSpace(1, 1)

    def a(X, T):
        return np.broadcast_to(np.exp(-(T[..., 0] / 3) ** 8), np.broadcast_shapes(X.shape[:-1], T.shape[:-1]))

    vals = {}
    for sign in "+-":
        phi = ph.PhaseFunction.parse(f"0.7*x1 {sign} jbx()*t1^2*(t1^2+1)^(-1/2)", sp)
        f = oi.TestDensity.gaussian([400.0], 1.0, frequency=[0.7])
        cfg = oi.QuadratureConfig(eps_list=(0.01,), fiber_box=((-6,), (6,)), max_evaluations=1e9)
        vals[sign] = oi.evaluate(phi, a, f, cfg).value
    assert abs(vals["+"] / vals["-"] - 1j) < 0.02


@pytest.mark.parametrize("face,base,fiber,verdict", [
    ("psi", (0, 0), (1, 0), "singular"),
    ("psi", (0, 0.7), (-1, 0), "singular"),
    ("psi", (1.5, 0), (1, 0), "regular"),
    ("psi", (0, 0), (0.8, 0.6), "regular"),
    ("e", (0, 1), (0.5, 0), "singular"),
    ("e", (1, 0), (1, 0), "regular"),
])
def test_wf_probe_conormal(face, base, fiber, verdict):
    phi = ph.PhaseFunction.parse("x1*t1", ex.VarSpace(2, 1))
    r = oi.wf_probe(phi, ones, probe(face, base, fiber))
    assert r.verdict == verdict
    if verdict == "regular":
        assert r.exponent >= oi.REGULAR_EXPONENT


def test_wf_probe_rejects_interior():
    phi = ph.PhaseFunction.parse("x1*t1", ex.VarSpace(2, 1))
    with pytest.raises(oi.OscError):
        oi.wf_probe(phi, ones, CompactPoint("interior", 1.0, (0.0, 0.0), 1.0, (1.0, 0.0)))
