import math

import numpy as np
import pytest

from sclag import expr as ex
from sclag import geometry as geo
from sclag import phase as ph


def parse(text, d, s, domain=None):
    return ph.PhaseFunction(ex.parse(text, ex.VarSpace(d, s)), ex.VarSpace(d, s), domain)


def test_fourier_phase_validates():
    v = ph.validate_phase(parse("x1*t1+x2*t2", 2, 2))
    assert v.passes and v.constant > 0.5


def test_bracket_phase_validates():
    assert ph.validate_phase(parse("x1*jbt()-x2*t1", 2, 1)).passes


def test_trivially_extended_phase_fails():
    v = ph.validate_phase(parse("x1*t1", 1, 2))
    assert not v.passes
    assert v.witness is not None


def test_order_two_phase_rejected():
    v = ph.validate_phase(parse("x1^2*t1", 1, 1))
    assert not v.passes and not v.order_report.passes


def test_conormal_critical_set():
    phi, _ = ph.conormal_bundle(1, 2)
    cm = ph.critical_solve(phi, count=8)
    assert cm.clean and cm.excess == 0
    for p in cm.samples:
        if p.face in ("interior", "psi"):
            assert abs(p.z[0]) < 1e-10


def test_smooth_perturbation_keeps_boundary_critical_set():
    base = parse("x1*t1", 1, 1)
    pert = parse("x1*t1+x1*jbx()^-1*jbt()^-1", 1, 1)
    a = ph.critical_solve(base, faces=("psi",), count=6).face_samples("psi")
    b = ph.critical_solve(pert, faces=("psi",), count=6).face_samples("psi")
    pa = sorted(tuple(np.round(p.z, 9)) for p in a)
    pb = sorted(tuple(np.round(p.z, 9)) for p in b)
    assert pa and pa == pb
    assert not ph.critical_solve(pert, faces=("e",), count=6).samples


def test_duplicated_fiber_has_excess():
    phi = parse("x1*t1", 1, 2, ph.ConeDomain((2,)))
    cm = ph.critical_solve(phi, count=8)
    assert cm.clean and cm.excess == 1


def test_hessian_of_linear_phase_vanishes():
    phi = parse("x1*t1", 1, 1)
    for p in ph.critical_solve(phi, count=4).samples:
        rec = ph.sc_hessian(phi, p)
        assert rec.signature == 0 and rec.rank == 0


def test_split_quadratic_signature():
    phi = parse("x1*t1+jbx()*(t2^2-t3^2)*(1+t1^2)^(-1/2)*0.5", 1, 3, ph.ConeDomain((2, 3)))
    p = ph.critical_solve(phi, faces=("interior",), count=4).face_samples("interior")[0]
    rec = ph.sc_hessian(phi, p)
    assert (rec.signature, rec.rank) == (0, 2)


def test_bracket_phase_hessian_on_psi_face():
    phi = parse("x1*jbt()-x2*t1-x3*t2", 3, 2)
    cm = ph.critical_solve(phi, faces=("psi",), count=6)
    assert cm.samples
    for p in cm.samples:
        rec = ph.sc_hessian(phi, p)
        b, f = p.z[:3], p.z[3:]
        # x1 |t| on the unit sphere: Hessian x1 (I - f f^T), projected and divided by <x>
        expected = b[0] * (np.eye(2) - np.outer(f, f)) / math.sqrt(1 + b @ b)
        np.testing.assert_allclose(rec.matrix, expected, atol=1e-10)
        assert rec.rank == 1 and rec.signature == int(np.sign(b[0]))


def test_lambda_faces_of_linear_phase():
    phi = parse("x1*t1", 1, 1)
    cm = ph.critical_solve(phi, count=6)
    samples, _ = ph.sample_lagrangian(cm)
    for s in samples:
        p = s.point
        if p.face == "psi":
            assert abs(p.base[0]) < 1e-12 and abs(abs(p.fiber[0]) - 1) < 1e-12
        if p.face == "e":
            assert abs(abs(p.base[0]) - 1) < 1e-12 and abs(p.fiber[0]) < 1e-12
    # C_phi forces x = 0, so only the psi face is reached
    assert not cm.face_samples("e") and not cm.face_samples("psie")


@pytest.mark.parametrize("k,d", [(0, 2), (1, 2), (1, 3)])
def test_conormal_closed_forms(k, d):
    phi, faces = ph.conormal_bundle(k, d)
    cm = ph.critical_solve(phi, count=12)
    samples, _ = ph.sample_lagrangian(cm)
    for s in samples:
        assert faces.distance(s.point) < 1e-8
    rep = ph.legendrian_check(samples, d)
    assert rep.passes
    for face in faces.nonempty():
        assert rep.counts.get(face, 0) > 0 or face == "psie"


def test_conormal_rejects_no_fiber():
    with pytest.raises(ph.PhaseError):
        ph.conormal_bundle(2, 2)


def test_non_lagrangian_surface_fails():
    pts = [((float(c), 0.0), (1.0, 0.0)) for c in np.linspace(-1, 1, 4)]
    tans = [[((1.0, 0.0), (0.0, 0.0))]] * 4
    rep = ph.legendrian_check(ph.surface_samples(pts, tans, "psi"), 2)
    assert not rep.passes and rep.worst["alpha_psi"] == pytest.approx(1.0)


def test_too_few_samples_reported():
    pts = [((0.0, 0.0), (1.0, 0.0))]
    with pytest.raises(ph.InsufficientSamples):
        ph.legendrian_check(ph.surface_samples(pts, [[]], "psi"), 2)


def test_corner_orthogonality():
    phi, _ = ph.conormal_bundle(1, 2)
    samples, _ = ph.sample_lagrangian(ph.critical_solve(phi, count=12))
    corner = [s for s in samples if s.face == "psie"]
    assert corner
    for s in corner:
        assert abs(np.dot(s.point.base, s.point.fiber)) < 1e-10


def test_cone_domain_membership():
    dom = ph.ConeDomain((2,))
    assert dom.contains(np.array([3.0, 1.0]))
    assert not dom.contains(np.array([1.0, 1.0]))


def test_newton_converges_quadratically():
    phi = parse("x1*t1+x1^2*jbx()^-1*t1^2*jbt()^-1", 1, 1)
    model = ph.FaceModel(phi, "interior")
    z, res, hist, ok = ph.newton(model, np.array([0.3, 1.0]))
    assert ok and res < 1e-12
    assert len(hist) < 20


def test_lambda_point_of_interior_sample():
    phi = parse("x1*t1+x2*t2", 2, 2)
    p = ph.critical_solve(phi, faces=("interior",), count=2).samples[0]
    q = ph.lambda_phi(phi, p)
    assert isinstance(q, geo.CompactPoint)
    np.testing.assert_allclose(q.base, 0.0, atol=1e-12)
    np.testing.assert_allclose(q.fiber, p.z[2:], rtol=1e-12)
