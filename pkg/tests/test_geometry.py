from fractions import Fraction

import numpy as np
import pytest

from sclag import expr as ex
from sclag import geometry as geo


def test_iota_examples():
    np.testing.assert_allclose(geo.iota(np.array([4.0, 0.0])), [0.75, 0.0], rtol=1e-15)
    np.testing.assert_allclose(geo.iota_inv(np.array([0.9, 0.0])), [10.0, 0.0], rtol=1e-12)
    assert np.linalg.norm(geo.iota(np.zeros(2))) < 1


def test_iota_round_trip_inside_and_outside():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(20, 3)) * np.array([[0.5], [5.0]] * 10)
    np.testing.assert_allclose(geo.iota_inv(geo.iota(pts)), pts, rtol=1e-9, atol=1e-12)


def test_iota_inv_rejects_outside_ball():
    with pytest.raises(geo.GeometryError):
        geo.iota_inv(np.array([1.0, 0.0]))


def test_bdf_equivalence_examples():
    sp = ex.VarSpace(2, 1)
    jb_inv = ex.parse("jbx()^-1", sp)
    rep = geo.bdf_equivalent(jb_inv, ex.parse("nx()^-1", sp), sp)
    assert rep.equivalent
    np.testing.assert_allclose(rep.limits, 1.0, rtol=1e-9)
    assert not geo.bdf_equivalent(jb_inv, ex.parse("jbx()^-2", sp), sp).equivalent
    rep2 = geo.bdf_equivalent(jb_inv, ex.parse("2*jbx()^-1", sp), sp)
    assert rep2.equivalent
    np.testing.assert_allclose(rep2.limits, 0.5, rtol=1e-12)


def test_deviation_rate_is_two():
    for d in (1, 2, 3):
        sp = ex.VarSpace(d, 1)
        assert geo.deviation_rate(ex.parse("jbx()^-1", sp), ex.parse("nx()^-1", sp), sp) >= 1.9


def test_sc_differential_examples():
    sp = ex.VarSpace(1, 1)
    const = geo.sc_differential(ex.ONE, sp)
    np.testing.assert_allclose(const.boundary_rho, 0.0, atol=1e-12)
    norm = geo.sc_differential(ex.nx(), sp, directions=[[1.0]])
    assert norm.boundary_rho[0] == pytest.approx(-1.0, abs=1e-10)


def test_sc_differential_rejects_order_two():
    sp = ex.VarSpace(1, 1)
    with pytest.raises(geo.GeometryError):
        geo.sc_differential(ex.parse("x1^3", sp), sp)


def test_scmap_examples():
    sp = ex.VarSpace(2, 1)
    a = geo.ScMapSpec((ex.parse("2*x1+x2", sp), ex.parse("x2-x1+sin(x1)", sp)), 2)
    b = geo.ScMapSpec((ex.parse("x1*(2+x2*jbx()^-1)", sp), ex.parse("x2", sp)), 2)
    assert geo.scmap_check(a).verified and geo.scmap_check(b).verified
    assert geo.scmap_check(geo.compose(a, b)).verified
    sq = geo.ScMapSpec((ex.parse("x1^2", ex.VarSpace(1, 1)),), 1)
    assert not geo.scmap_check(sq).verified


def test_ball_embedding_is_sc_map():
    sp = ex.VarSpace(2, 1)
    root = ex.power(ex.parse("1-x2^2", sp), Fraction(-1, 2))
    j = geo.ScMapSpec((ex.mul(ex.x(1), root), ex.x(2)), 2, chart="ball",
                      target_bounded=(2,), eps=0.5)
    assert geo.scmap_check(j).verified


def test_rank_examples():
    for d in (2, 3):
        f = geo.iota_inv_map(d)
        for w in geo.sphere_directions(d, 6):
            r = geo.rank_compare(f, w)
            assert r.rank_sc == r.rank_tpsi == d
    sp = ex.VarSpace(2, 1)
    const = geo.RayMap.from_exprs([ex.parse("jbx()", sp), ex.ZERO], 2)
    r = geo.rank_compare(const, np.array([0.6, 0.8]))
    assert r.equal


def test_rank_precondition():
    sp = ex.VarSpace(2, 1)
    f = geo.RayMap.from_exprs([ex.parse("x1", sp), ex.ZERO], 2)
    with pytest.raises(geo.PreconditionError):
        geo.rank_compare(f, np.array([0.0, 1.0]))


def test_richardson_recovers_polynomial_limit():
    hs = [1e-1, 5e-2, 2.5e-2]
    vals = [3.0 + 2 * h - h * h for h in hs]
    lim, err = geo.richardson(vals, hs)
    assert lim == pytest.approx(3.0, abs=1e-13)


def _sample(face, base, fiber, db, df, **kw):
    rho_x = 0.0 if face in ("e", "psie") else 1.0
    rho_xi = 0.0 if face in ("psi", "psie") else 1.0
    return geo.TangentSample(geo.CompactPoint(face, rho_x, base, rho_xi, fiber), db, df, **kw)


def test_contact_forms():
    # tangent of {0} x S^1 on the psi face
    s = _sample("psi", (0.0, 0.0), (0.6, 0.8), (0.0, 0.0), (-0.8, 0.6))
    assert geo.contact_eval("alpha_psi", s) == 0
    # base-only vector on the e face
    s = _sample("e", (1.0, 0.0), (0.0, 0.0), (0.0, 1.0), (0.0, 0.0))
    assert geo.contact_eval("alpha_e", s) == 0
    # non-Lagrangian direction
    s = _sample("psi", (0.0, 0.0), (1.0, 0.0), (1.0, 0.0), (0.0, 0.0))
    assert geo.contact_eval("alpha_psi", s) == 1
    with pytest.raises(geo.GeometryError):
        geo.contact_eval("alpha_e", _sample("psi", (0.0,), (1.0,), (0.0,), (0.0,)))


def test_compact_point_face_consistency():
    with pytest.raises(geo.GeometryError):
        geo.CompactPoint("psi", 1.0, (0.0,), 0.0, (0.5,))
    p = geo.CompactPoint.from_euclidean((3.0, 4.0), (0.0, 1.0))
    assert p.face == "interior"
    b, f = p.compactified()
    assert np.linalg.norm(b) < 1 and np.linalg.norm(f) < 1
