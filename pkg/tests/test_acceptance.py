"""Acceptance criteria 1-13; each check records (ok, detail) and prints one PASS/FAIL line.

Run with pytest (lines appear in the terminal summary) or directly:
``python3 tests/test_acceptance.py``.
"""

import math
import time
from fractions import Fraction as F

import numpy as np
import pytest

from sclag import expr as ex
from sclag import geometry as geo
from sclag import oscint as oi
from sclag import phase as ph
from sclag import prsymb as ps
from sclag import reduction as rd
from sclag import sgsymbols as sg
from sclag.geometry import CompactPoint

RESULTS: dict[int, tuple[bool, str]] = {}


def ones(X, T):
    return np.ones(np.broadcast_shapes(X.shape[:-1], T.shape[:-1]))


def amp(text, sp, order=(0, 0)):
    return sg.Amplitude(ex.parse(text, sp), sp, sg.SGOrder(*order))


def criterion_1():
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(200):
        sp = ex.VarSpace(int(rng.integers(1, 3)), int(rng.integers(1, 3)))
        e = ex.random_expression(rng, sp, depth=3)
        variables = sp.variables()
        v = variables[int(rng.integers(0, len(variables)))]
        pt = rng.uniform(-2, 2, sp.d + sp.s)
        sym = ex.eval_point(ex.diff(e, v), pt, sp)
        fd = ex.central_difference(e, v, pt, sp)
        worst = max(worst, abs(sym - fd) / max(abs(sym), 1.0))
    elapsed = time.perf_counter() - t0
    return worst < 1e-6 and elapsed < 5, f"worst relative error {worst:.2e}, {elapsed:.2f} s"


def criterion_2():
    rates = []
    for d in (1, 2, 3):
        sp = ex.VarSpace(d, 1)
        rates.append(geo.deviation_rate(ex.parse("jbx()^-1", sp), ex.parse("nx()^-1", sp), sp))
    return min(rates) >= 1.9, "rates " + ", ".join(f"{r:.3f}" for r in rates)


def _ray_map(texts, d, name):
    sp = ex.VarSpace(d, 1)
    return geo.RayMap.from_exprs([ex.parse(s, sp) for s in texts], d, name)


def criterion_3():
    family = [_ray_map(["x1", "x2"], 2, "id"), _ray_map(["2*x1+x2", "x2-x1"], 2, "linear"),
              _ray_map(["x1+sin(x2)", "x2+cos(x1)"], 2, "bounded_shift"),
              _ray_map(["x1*(2+x2*jbx()^-1)", "x2"], 2, "homog_distort"),
              _ray_map(["x1", "x2", "jbx()"], 2, "graph_cone"), _ray_map(["jbx()", "0"], 2, "collapse"),
              _ray_map(["x1+x2", "x1+x2"], 2, "diagonal"), _ray_map(["x1", "x2", "x3"], 3, "id3"),
              geo.iota_inv_map(2), geo.iota_inv_map(3)]
    equal = total = skipped = 0
    for f in family:
        for w in geo.sphere_directions(f.dim, 12):
            try:
                r = geo.rank_compare(f, w)
            except geo.PreconditionError:
                skipped += 1
                continue
            total += 1
            equal += bool(r.equal)
    return total > 0 and equal == total, f"{equal}/{total} directions agree ({skipped} outside the hypotheses)"


def criterion_4():
    worst = {"closed_form": 0.0, "alpha_psi": 0.0, "alpha_e": 0.0, "corner_dot": 0.0, "alpha_psie": 0.0}
    for k, d in [(1, 2), (0, 2), (1, 3), (2, 3)]:
        phi, faces = ph.conormal_bundle(k, d)
        cm = ph.critical_solve(phi, count=16)
        samples, _ = ph.sample_lagrangian(cm)
        for f in faces.nonempty():
            if not any(p.face == f for p in samples):
                return False, f"k={k} d={d}: no samples on {f}"
        worst["closed_form"] = max([worst["closed_form"]] + [faces.distance(p.point) for p in samples])
        rep = ph.legendrian_check(samples, d)
        for key, v in rep.worst.items():
            worst[key] = max(worst[key], v)
    ok = max(v for k, v in worst.items() if k != "alpha_psie") <= 1e-8 and worst["alpha_psie"] <= 1e-6
    return ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items())


def criterion_5():
    results = []
    for d in (1, 2):
        s = d + 1
        sp = ex.VarSpace(d, s)
        lin = "+".join(f"x{i}*t{i}" for i in range(1, d + 1))
        for q in ("1", "-1", "2", "-3"):
            for o in ((0, 0), (-1, F(1, 2))):
                phi = ph.PhaseFunction.parse(f"{lin}+{q}*t{s}^2*jbt()^-1", sp)
                a = amp(f"jbx()^{o[0]}*jbt()^{o[1]}", sp, o)
                p0 = ph.critical_solve(phi, faces=("interior",), count=6).face_samples("interior")[0]
                r = rd.reduce_fiber(phi, a, p0)
                before = rd.OrderRecord(o[0], o[1], s, 0)
                results.append((before.mu_e, before.mu_psi) == (r.order.mu_e, r.order.mu_psi))
            if len(results) >= 12:
                break
    for d in (1, 2):
        s = d + 1
        sp = ex.VarSpace(d, s)
        lin = "+".join(f"x{i}*t{i}" for i in range(1, d + 1))
        phi = ph.PhaseFunction(ex.parse(lin, sp), sp, ph.ConeDomain((s,)))
        r0 = "1+" + "+".join(f"t{i}^2" for i in range(1, d + 1))
        profile = f"exp(-(t{s}*10*({r0})^(-1/2))^2)*10*({r0})^(-1/2)*3.141592653589793^(-1/2)"
        cm = ph.critical_solve(phi, count=6)
        for o in ((-1, -1), (0, -1), (-2, 0), (-1, F(-3, 2))):
            a = amp(f"jbx()^{o[0]}*({r0})^({F(o[1] + 1) / 2})*{profile}", sp, o)
            r = rd.eliminate_excess(phi, a, 1)
            before = rd.OrderRecord(o[0], o[1], s, cm.excess)
            results.append((before.mu_e, before.mu_psi) == (r.order.mu_e, r.order.mu_psi))
    normal = all(rd.order_normalize(0, 0, d, d, 0).m_psi == F(d, 4)
                 and rd.order_normalize(0, 0, d, 0, 0).legendrian_order == F(-d, 4) for d in (1, 2, 3, 4))
    ok = len(results) == 20 and all(results) and normal
    return ok, f"{sum(results)}/{len(results)} instances exact, normalization {'exact' if normal else 'wrong'}"


def criterion_6():
    t0 = time.perf_counter()
    lams = [50.0, 100.0, 200.0, 400.0]
    errs = []
    for lam in lams:
        q = oi.gaussian_model_quadrature(lam)
        lead = oi.stationary_phase_eval(np.array([[1.0]]), 1.0, lam=lam).value
        errs.append(abs(lead / q - 1))
    rate = -np.polyfit(np.log(lams), np.log(errs), 1)[0]
    elapsed = time.perf_counter() - t0
    ok = errs[2] <= 0.05 and rate >= 0.8 and elapsed < 30
    return ok, f"error at 200 {errs[2]:.2e}, rate {rate:.3f}, {elapsed:.2f} s"


def criterion_7():
    sp = ex.VarSpace(1, 1)

    def a(X, T):
        return np.broadcast_to(np.exp(-(T[..., 0] / 3) ** 8), np.broadcast_shapes(X.shape[:-1], T.shape[:-1]))

    f = oi.TestDensity.gaussian([400.0], 1.0, frequency=[0.7])
    cfg = oi.QuadratureConfig(eps_list=(0.01,), fiber_box=((-6,), (6,)), max_evaluations=1e9)
    vals = {}
    for sign in "+-":
        phi = ph.PhaseFunction.parse(f"0.7*x1 {sign} jbx()*t1^2*(t1^2+1)^(-1/2)", sp)
        vals[sign] = oi.evaluate(phi, a, f, cfg).value
    ratio = vals["+"] / vals["-"]
    return abs(ratio - 1j) < 0.02, f"ratio {ratio.real:+.5f}{ratio.imag:+.5f}i"


def criterion_8():
    sp = ex.VarSpace(1, 1)
    suite = []
    for phase_text in ("x1*t1", "2*x1*t1", "(x1-0.2)*t1", "x1*t1+0.5*jbt()^-1"):
        for amp_text, center, width in (("1", 0.1, 0.4), ("jbx()^-1", -0.3, 0.6), ("jbt()", 0.0, 0.2)):
            suite.append((phase_text, amp_text, center, width))
    suite = suite[:10]
    cfg = oi.QuadratureConfig(eps_list=(0.125, 0.0625))
    worst = coarse = 0.0
    for phase_text, amp_text, center, width in suite:
        phi = ph.PhaseFunction.parse(phase_text, sp)
        a = amp(amp_text, sp)
        f = oi.TestDensity.gaussian([center], width)
        r1 = oi.evaluate(phi, a, f, cfg, oi.ChiProfile("exp"))
        r2 = oi.evaluate(phi, a, f, cfg, oi.ChiProfile("tanh"))
        worst = max(worst, abs(r1.value - r2.value) / (1 + abs(r1.value)))
        coarse = max(coarse, abs(r1.per_eps[0] - r2.per_eps[0]) / (1 + abs(r1.value)))
    detail = f"{len(suite)} integrals, worst scaled difference {worst:.2e} (at the coarse eps {coarse:.1e})"
    return worst < 1e-6, detail


def criterion_9():
    worst = 0.0
    sp1 = ex.VarSpace(1, 1)
    phi1 = ph.PhaseFunction.parse("x1*t1", sp1)
    for c, w in [(0.0, 0.5), (0.3, 0.3), (-0.2, 0.8), (0.5, 0.4), (0.1, 1.0)]:
        r = oi.evaluate(phi1, ones, oi.TestDensity.gaussian([c], w), oi.QuadratureConfig(eps_list=(0.125, 0.0625)))
        f0 = math.exp(-c * c / (2 * w * w))
        worst = max(worst, abs(r.value / (2 * math.pi) - f0) / f0)
    sp2 = ex.VarSpace(2, 2)
    phi2 = ph.PhaseFunction.parse("x1*t1+x2*t2", sp2)
    for c, w in [((0.0, 0.0), 1.0), ((0.1, -0.2), 1.0), ((0.5, 0.2), 0.8), ((-0.3, 0.4), 1.2), ((0.6, -0.1), 0.9)]:
        box = 5.5 / w
        cfg = oi.QuadratureConfig(eps_list=(0.1,), refine=1.25, fiber_box=((-box, -box), (box, box)), tolerance=1e-4)
        r = oi.evaluate(phi2, ones, oi.TestDensity.gaussian(list(c), w, radius_factor=4.5), cfg)
        f0 = math.exp(-(c[0] ** 2 + c[1] ** 2) / (2 * w * w))
        worst = max(worst, abs(r.value / (2 * math.pi) ** 2 - f0) / f0)
    return worst < 1e-3, f"10 Gaussians, worst relative error {worst:.2e}"


def criterion_10():
    sp = ex.VarSpace(2, 2)
    phi = ph.PhaseFunction.parse("x1*t1+x2*t2", sp)
    a = amp("jbx()^-1*jbt()", sp, (-1, 1))
    worst, passed = 0.0, 0
    family = ps.diffeo_family(10)
    for entry in family:
        g = ps.FiberDiffeo.parse(entry["fiber"], sp)
        rep = ps.transport_laws(phi, a, g, product_map=ps.product_maps(entry, 2, 2))
        worst = max(worst, rep.max_residual)
        passed += bool(rep.passes) and rep.max_residual < 1e-6
    return passed == len(family), f"{passed}/{len(family)} maps, worst residual {worst:.1e}"


def _decide(phi1, phi2):
    p1, p2 = rd.matched_pair(phi1, phi2, "psi")
    return rd.equivalence_decide(phi1, p1, phi2, p2).equivalent


def criterion_11():
    phi = ph.PhaseFunction.parse("x1*t1", ex.VarSpace(1, 1))
    smooth = rd.add_smooth(phi, ex.parse("x1*jbx()^-1*jbt()^-1", phi.space)).phase
    suite = [(phi, ph.PhaseFunction.parse("2*x1*t1", phi.space), True),
             (rd.increase_fiber(phi, sign=1).phase, rd.increase_fiber(phi, sign=-1).phase, False),
             (phi, smooth, True)]
    got = [_decide(a, b) for a, b, _ in suite]
    correct = sum(g is want for g, (_, _, want) in zip(got, suite))
    return correct == len(suite), f"{correct}/{len(suite)} verdicts correct {got}"


def criterion_12():
    sp = ex.VarSpace(1, 1)
    phi = ph.PhaseFunction.parse("x1*t1", sp)
    a = amp("jbx()^-1", sp, (-1, 0))
    family = ps.symbol_family([ps.Parametrization("base", phi, a),
                               ps.Parametrization.from_surgery("plus", rd.increase_fiber(phi, a, sign=1)),
                               ps.Parametrization.from_surgery("minus", rd.increase_fiber(phi, a, sign=-1))])
    rep = ps.coherence(family)
    one = ps.Parametrization("a", phi, amp("1", sp))
    lower = ps.Parametrization("a+r", phi, amp("1+jbx()^-1*jbt()^-1", sp))
    probe = ps.exactness_probe(one, lower)
    gap = probe.gap if probe.gap is not None else -math.inf
    ok = rep.passes and rep.max_residual <= 1e-12 and probe.passes and gap >= 0.8
    return ok, f"cocycle residual {rep.max_residual:.1e} over {len(rep.cocycle)} triples, exactness gap {gap:.3f}"


def _probe(face, base, fiber):
    return CompactPoint(face, 0.0 if face == "e" else 1.0, tuple(base), 0.0 if face == "psi" else 1.0,
                        tuple(fiber))


WF_PROBES = [
    ("psi", (0, 0), (1, 0), "singular"), ("psi", (0, 0.7), (-1, 0), "singular"),
    ("psi", (0, -1.2), (1, 0), "singular"), ("psi", (0, 2.5), (-1, 0), "singular"),
    ("e", (0, 1), (0.5, 0), "singular"), ("e", (0, -1), (-1, 0), "singular"),
    ("e", (0, 1), (-0.8, 0), "singular"), ("e", (0, -1), (0.3, 0), "singular"),
    ("psi", (1.5, 0), (1, 0), "regular"), ("psi", (-2, 1), (1, 0), "regular"),
    ("psi", (0, 0), (0.8, 0.6), "regular"), ("psi", (0, 0), (0, 1), "regular"),
    ("psi", (0, 0), (math.cos(0.3), math.sin(0.3)), "regular"), ("psi", (0, 0.7), (-0.6, 0.8), "regular"),
    ("e", (math.sin(0.8), math.cos(0.8)), (0.5, 0), "regular"), ("e", (0, 1), (0.5, 0.5), "regular"),
    ("e", (1, 0), (1, 0), "regular"), ("e", (-0.6, 0.8), (1, 0), "regular"),
    ("e", (0, -1), (0, 0.7), "regular"), ("psi", (3, 3), (0.6, -0.8), "regular"),
]


def criterion_13():
    phi = ph.PhaseFunction.parse("x1*t1", ex.VarSpace(2, 1))
    correct, sing, reg = 0, [], []
    for face, base, fiber, want in WF_PROBES:
        r = oi.wf_probe(phi, ones, _probe(face, base, fiber))
        correct += r.verdict == want
        (sing if want == "singular" else reg).append(r.exponent)
    margin = min(reg) - max(sing)
    ok = correct == len(WF_PROBES) and margin >= 4
    return ok, f"{correct}/{len(WF_PROBES)} probes classified, margin {margin:.2f}"


CRITERIA = {n: globals()[f"criterion_{n}"] for n in range(1, 14)}


def record(n: int) -> tuple[bool, str]:
    try:
        ok, detail = CRITERIA[n]()
    except Exception as err:  # a crash counts as a failure with its message
        ok, detail = False, f"{type(err).__name__}: {err}"
    RESULTS[n] = (bool(ok), detail)
    return RESULTS[n]


def summary_lines() -> list[str]:
    return [f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}" for n, (ok, detail) in sorted(RESULTS.items())]


@pytest.mark.parametrize("n", list(CRITERIA))
def test_criterion(n):
    ok, detail = record(n)
    assert ok, detail


if __name__ == "__main__":
    for n in CRITERIA:
        record(n)
        print(summary_lines()[-1], flush=True)
