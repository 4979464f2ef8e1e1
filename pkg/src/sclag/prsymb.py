"""Principal-symbol half-densities on the Lagrangian: Jacobian densities, transport laws,
Maslov factors, coherence and an exactness probe.

Everything is computed in Euclidean charts with Lebesgue reference densities:

    Delta(p)  = |det d(t, Phi)/d(x, theta)|^{-1},   Phi = grad_theta phi
    w(p)      = (2 pi)^{s/2} <x>^{s/2} a(p) Delta(p)^{1/2}
    w_p(p)    = <x>^{-m_e} <theta_f>^{-m_psi - (s+1)/2} w(p)

where theta_f are the fiber variables not bounded by a cone domain.  The
scattering density powers only enter through w_p; boundary symbol values are
ray limits of w_p taken in a frame built from the radial compactification.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, linalg

from . import expr as ex
from . import sgsymbols as sg
from .geometry import CompactPoint, ScMapSpec, richardson
from .phase import (FaceModel, PhaseFunction, critical_solve, newton, sc_hessian, _lambda)

DET_TOL = 1e-12
CRITICAL_TOL = 1e-8
SYMBOL_RADII = (1e3, 2e3, 4e3, 8e3)


class SymbolError(ValueError):
    pass


# ---------------------------------------------------------------------------
# frames and Jacobian densities


@dataclass
class Frame:
    """Functions t restricting to coordinates on C_phi, given through their Jacobian rows."""

    jacobian: Callable
    label: str
    indices: tuple | None = None

    @classmethod
    def coordinates(cls, indices: Sequence[int], n: int) -> "Frame":
        idx = tuple(int(i) for i in indices)
        rows = np.zeros((len(idx), n))
        rows[np.arange(len(idx)), idx] = 1.0
        return cls(lambda x, t: rows, f"coordinates{list(idx)}", idx)

    def scaled(self, c: float) -> "Frame":
        return Frame(lambda x, t: c * self.jacobian(x, t), f"{c:g}*{self.label}", None)

    def pullback(self, diffeo: "FiberDiffeo") -> "Frame":
        """t~ = F^* t with F = id x g."""

        def jac(x, tt):
            return self.jacobian(x, diffeo(x, tt)) @ diffeo.full_jacobian(x, tt)

        return Frame(jac, f"pullback({self.label})", None)


def _fiber_indices(phi: PhaseFunction, fixed: Sequence[int]) -> list[int]:
    return [j for j in range(phi.space.s) if j not in set(fixed)]


def critical_jacobian(phi: PhaseFunction, x, t, fixed: Sequence[int] = ()) -> np.ndarray:
    """d Phi / d(x, theta_kept) with frozen fibers removed."""
    keep = _fiber_indices(phi, fixed)
    d = phi.space.d
    rows = []
    for j in keep:
        g = phi.grad_t_exprs[j]
        gx = [float(ex.evaluate(ex.diff(g, ex.x(i + 1)), x, t)) for i in range(d)]
        gt = [float(ex.evaluate(ex.diff(g, ex.t(k + 1)), x, t)) for k in keep]
        rows.append(gx + gt)
    return np.array(rows, float).reshape(len(keep), d + len(keep))


def _critical_residual(phi: PhaseFunction, x, t, fixed=()) -> float:
    keep = _fiber_indices(phi, fixed)
    g = np.atleast_1d(phi.grad_t(np.asarray(x, float), np.asarray(t, float)))
    return float(np.linalg.norm(g[keep])) if len(keep) else 0.0


def default_frame(phi: PhaseFunction, x, t, fixed: Sequence[int] = ()) -> Frame:
    """Coordinate subset of (x, theta_kept) chosen by pivoted QR of the C_phi tangent basis."""
    m = critical_jacobian(phi, x, t, fixed)
    n = m.shape[1]
    _, sv, vt = np.linalg.svd(m) if m.size else (None, np.zeros(0), np.eye(n))
    rank = int(np.sum(sv > 1e-10 * max(1.0, sv[0] if sv.size else 1.0)))
    tangent = vt[rank:].T
    _, _, piv = linalg.qr(tangent.T, pivoting=True)
    return Frame.coordinates(sorted(piv[: tangent.shape[1]]), n)


@dataclass
class JacobianDensity:
    value: float
    frame: str
    face: str
    point: tuple

    def __post_init__(self):
        if not (self.value > 0 and math.isfinite(self.value)):
            raise SymbolError("Jacobian density must be positive and finite")

    def as_dict(self) -> dict:
        return {"delta": self.value, "frame": self.frame, "face": self.face, "point": list(self.point)}


def delta_phi(phi: PhaseFunction, x, t, frame: Frame | None = None, fixed: Sequence[int] = (),
              face: str = "interior", check: bool = True) -> JacobianDensity:
    x = np.asarray(x, float)
    t = np.asarray(t, float)
    if check:
        res = _critical_residual(phi, x, t, fixed)
        if res > CRITICAL_TOL * (1 + float(np.linalg.norm(t))):
            raise SymbolError(f"point is not critical (residual {res:.3g})")
    m = critical_jacobian(phi, x, t, fixed)
    frame = frame or default_frame(phi, x, t, fixed)
    keep = _fiber_indices(phi, fixed)
    rows = np.asarray(frame.jacobian(x, t), float)
    if rows.shape[1] != m.shape[1]:
        rows = rows[:, list(range(phi.space.d)) + [phi.space.d + j for j in keep]]
    full = np.vstack([rows, m])
    if full.shape[0] != full.shape[1]:
        raise SymbolError("frame and critical equations do not form a square system")
    det = float(np.linalg.det(full))
    scale = float(np.prod(np.linalg.norm(full, axis=1)))
    if abs(det) <= DET_TOL * max(scale, 1e-300):
        raise SymbolError("singular Jacobian: frame unsuitable at this point")
    return JacobianDensity(1.0 / abs(det), frame.label, face, tuple(np.concatenate([x, t]).tolist()))


# ---------------------------------------------------------------------------
# symbol half-densities


def _amp_value(a, x, t) -> complex:
    if isinstance(a, sg.Amplitude):
        return complex(ex.evaluate(a.expr, x, t))
    return complex(np.asarray(a(np.asarray(x, float)[None], np.asarray(t, float)[None])).reshape(-1)[0])


def free_fibers(phi: PhaseFunction, fixed: Sequence[int] = ()) -> list[int]:
    bounded = set() if phi.domain is None else {j - 1 for j in phi.domain.bounded}
    return [j for j in range(phi.space.s) if j not in bounded and j not in set(fixed)]


@dataclass
class SymbolValue:
    w: complex
    principal: complex
    delta: JacobianDensity

    def as_dict(self) -> dict:
        return {"w": [self.w.real, self.w.imag], "principal": [self.principal.real, self.principal.imag],
                **self.delta.as_dict()}


def w_phi(phi: PhaseFunction, a, x, t, frame: Frame | None = None, fixed: Sequence[int] = (),
          convention: str | None = None, check: bool = True) -> SymbolValue:
    """Half-density value of (phi, a) at a critical point, with its boundary-normalized form.

    In Lebesgue charts a scalar amplitude is its own coefficient against sqrt(dx) dtheta,
    so both conventions evaluate alike; ``convention`` only asserts what the caller expects.
    """
    if convention is not None and getattr(a, "convention", convention) != convention:
        raise SymbolError(f"amplitude convention {a.convention!r} does not match {convention!r}")
    x = np.asarray(x, float)
    t = np.asarray(t, float)
    dens = delta_phi(phi, x, t, frame, fixed, check=check)
    s = phi.space.s - len(fixed)
    w = (2 * math.pi) ** (s / 2) * float(ex.japanese_bracket(x)) ** (s / 2) * _amp_value(a, x, t) * math.sqrt(dens.value)
    order = a.order
    tf = t[free_fibers(phi, fixed)]
    e_weight = len(fixed)
    wp = (w * float(ex.japanese_bracket(x)) ** (-float(order.m_e))
          * float(ex.japanese_bracket(tf)) ** (-float(order.m_psi) - e_weight - (s + 1) / 2))
    return SymbolValue(complex(w), complex(wp), dens)


# ---------------------------------------------------------------------------
# boundary values


def _iota_jacobian(v: np.ndarray) -> np.ndarray:
    r = float(np.linalg.norm(v))
    if r <= 3:
        raise SymbolError("compactified frame needs |v| > 3")
    c = 1 / r - 1 / r ** 2
    return c * np.eye(len(v)) + np.outer(v, v) * (-1 / r ** 3 + 2 / r ** 4)


def compactified_frame(base: Frame, d: int, face: str) -> Frame:
    """Replace the x (e faces) and/or theta (psi faces) coordinates of a coordinate frame by iota."""
    if base.indices is None:
        raise SymbolError("compactified frames need a coordinate frame")
    idx = base.indices

    def jac(x, t):
        n = d + len(t)
        rows = np.zeros((len(idx), n))
        jx = _iota_jacobian(x) if face in ("e", "psie") else None
        jt = _iota_jacobian(t) if face in ("psi", "psie") else None
        for r, i in enumerate(idx):
            if i < d:
                if jx is None:
                    rows[r, i] = 1.0
                else:
                    rows[r, :d] = jx[i]
            else:
                if jt is None:
                    rows[r, i] = 1.0
                else:
                    rows[r, d:] = jt[i - d]
        return rows

    return Frame(jac, f"iota[{face}]({base.label})", None)


def approach_points(phi: PhaseFunction, sample, radii: Sequence[float] = SYMBOL_RADII) -> list:
    """Interior critical points converging to a face sample along its ray."""
    model = FaceModel(phi, "interior")
    b, f = np.asarray(sample.z[: phi.space.d]), np.asarray(sample.z[phi.space.d:])
    pts = []
    for r in radii:
        xb = b * r if sample.face in ("e", "psie") else b
        tf = f * r if sample.face in ("psi", "psie") else f
        z, res, _, ok = newton(model, np.concatenate([xb, tf]))
        if not ok:
            raise SymbolError(f"no interior critical point near the {sample.face} sample at R = {r:g}")
        pts.append((z[: phi.space.d], z[phi.space.d:]))
    return pts


@dataclass
class BoundarySymbol:
    point: CompactPoint
    value: complex
    error: float
    signature: int
    frame: str

    def as_dict(self) -> dict:
        return {"face": self.point.face, "base": list(self.point.base), "fiber": list(self.point.fiber),
                "value": [self.value.real, self.value.imag], "error": self.error,
                "signature": self.signature, "frame": self.frame}


def boundary_symbol(phi: PhaseFunction, a, sample, radii: Sequence[float] = SYMBOL_RADII,
                    frame_indices: tuple | None = None) -> BoundarySymbol:
    """Ray limit of the normalized symbol value at a face sample of C_phi."""
    if sample.face == "interior":
        raise SymbolError("boundary symbols live on the faces")
    pts = approach_points(phi, sample, radii)
    d = phi.space.d
    n = d + phi.space.s
    base = Frame.coordinates(frame_indices, n) if frame_indices else default_frame(phi, *pts[-1])
    frame = compactified_frame(base, d, sample.face)
    vals = [w_phi(phi, a, x, t, frame).principal for x, t in pts]
    limit, err = richardson(np.array(vals), [1.0 / r for r in radii])
    point = _lambda(FaceModel(phi, sample.face), sample.z)
    sig = sc_hessian(phi, sample).signature
    return BoundarySymbol(point, complex(limit), float(np.max(np.abs(err))), sig, frame.label)


# ---------------------------------------------------------------------------
# pushforward to Lambda


@dataclass
class LambdaSymbol:
    point: CompactPoint | None
    value: complex
    fiber_length: float | None = None

    def as_dict(self) -> dict:
        out = {"value": [self.value.real, self.value.imag]}
        if self.point is not None:
            out.update({"face": self.point.face, "base": list(self.point.base), "fiber": list(self.point.fiber)})
        if self.fiber_length is not None:
            out["fiber_length"] = self.fiber_length
        return out


def pushforward(phi: PhaseFunction, a, points: Sequence[tuple], fixed: Sequence[int] = (),
                quad_limit: int = 200) -> list[LambdaSymbol]:
    """gamma on Lambda from critical points; excess fibers are integrated in y'' = t''/<theta_f>."""
    out = []
    model = FaceModel(phi, "interior")
    for x, t in points:
        x = np.asarray(x, float)
        t = np.asarray(t, float)
        lam = _lambda(model, np.concatenate([x, t]))
        if not fixed:
            out.append(LambdaSymbol(lam, w_phi(phi, a, x, t).principal))
            continue
        if len(fixed) != 1:
            raise SymbolError("fiber integration is implemented for excess 1")
        j = fixed[0]
        scale = float(ex.japanese_bracket(t[free_fibers(phi, fixed)]))
        ratio = float(phi.domain.ratio) if phi.domain is not None else math.inf
        frame = default_frame(phi, x, t, fixed)

        def part(y, reim):
            tt = t.copy()
            tt[j] = y * scale
            v = w_phi(phi, _FamilyAmplitude(a, phi, fixed), x, tt, frame, fixed, check=False).principal
            return v.real if reim == 0 else v.imag

        vals = []
        for reim in (0, 1):
            v, _ = integrate.quad(part, -ratio, ratio, args=(reim,), limit=quad_limit, epsabs=1e-13, epsrel=1e-11)
            vals.append(v)
        val = complex(vals[0], vals[1])
        if not np.isfinite(val.real) or not np.isfinite(val.imag):
            raise SymbolError("fiber integration diverged")
        out.append(LambdaSymbol(lam, val, 2 * ratio))
    return out


@dataclass
class _FamilyAmplitude:
    """a(y'') = <theta_f>^e a in the density convention, of order (m_e, m_psi + e)."""

    base: object
    phi: PhaseFunction
    fixed: tuple

    @property
    def convention(self):
        return self.base.convention

    @property
    def order(self):
        return self.base.order

    def __call__(self, xs, ts):
        x = np.asarray(xs, float).reshape(-1)
        t = np.asarray(ts, float).reshape(-1)
        weight = float(ex.japanese_bracket(t[free_fibers(self.phi, self.fixed)])) ** len(self.fixed)
        return np.asarray(_amp_value(self.base, x, t) * weight)


# ---------------------------------------------------------------------------
# fibered diffeomorphisms and transport laws


@dataclass
class FiberDiffeo:
    """theta = g(x, theta~) given by expressions in the x and t blocks."""

    exprs: tuple
    space: ex.VarSpace

    @classmethod
    def parse(cls, texts: Sequence[str], space: ex.VarSpace) -> "FiberDiffeo":
        if len(texts) != space.s:
            raise SymbolError("fiber map needs one component per fiber variable")
        return cls(tuple(ex.parse(s, space) for s in texts), space)

    def __call__(self, x, tt):
        return np.array([float(ex.evaluate(e, x, tt)) for e in self.exprs])

    def fiber_jacobian(self, x, tt) -> np.ndarray:
        s = self.space.s
        return np.array([[float(ex.evaluate(ex.diff(e, ex.t(k + 1)), x, tt)) for k in range(s)] for e in self.exprs])

    def full_jacobian(self, x, tt) -> np.ndarray:
        """d(x, g)/d(x, theta~)."""
        d, s = self.space.d, self.space.s
        top = np.hstack([np.eye(d), np.zeros((d, s))])
        gx = np.array([[float(ex.evaluate(ex.diff(e, ex.x(i + 1)), x, tt)) for i in range(d)] for e in self.exprs])
        return np.vstack([top, np.hstack([gx.reshape(s, d), self.fiber_jacobian(x, tt)])])

    def pull_phase(self, phi: PhaseFunction) -> PhaseFunction:
        mapping = {ex.t(j + 1): self.exprs[j] for j in range(self.space.s)}
        return PhaseFunction(ex.substitute(phi.expr, mapping, {"t": self.space.s}), phi.space, phi.domain)


@dataclass
class TransportedAmplitude:
    """a~ = (a o F) |det dg/dtheta~|, the density-convention transport."""

    base: object
    diffeo: FiberDiffeo

    @property
    def convention(self):
        return getattr(self.base, "convention", "half_density")

    @property
    def order(self):
        return self.base.order

    def __call__(self, xs, ts):
        x = np.asarray(xs, float).reshape(-1)
        tt = np.asarray(ts, float).reshape(-1)
        val = _amp_value(self.base, x, self.diffeo(x, tt)) * abs(np.linalg.det(self.diffeo.fiber_jacobian(x, tt)))
        return np.asarray(val)


@dataclass
class LawResidual:
    point: tuple
    trdelta: float
    trdelta_sc: float
    wphi: float
    transport: float

    def as_dict(self) -> dict:
        return {"point": list(self.point), "trdelta": self.trdelta, "trdelta_sc": self.trdelta_sc,
                "wphi": self.wphi, "transport": self.transport}


@dataclass
class TransportReport:
    residuals: list
    principal: sg.TransformReport | None
    tol: float

    @property
    def max_residual(self) -> float:
        vals = [max(r.trdelta, r.trdelta_sc, r.wphi, r.transport) for r in self.residuals]
        return max(vals) if vals else math.inf

    @property
    def passes(self) -> bool:
        ok = bool(self.residuals) and self.max_residual < self.tol
        return ok and (self.principal is None or self.principal.passes)

    def summary(self) -> dict:
        return {"passes": self.passes, "max_residual": self.max_residual, "samples": len(self.residuals),
                "principal_transform": None if self.principal is None else self.principal.passes}


def transport_laws(phi: PhaseFunction, a: sg.Amplitude, diffeo: FiberDiffeo, count: int = 8,
                   tol: float = 1e-6, product_map: tuple | None = None) -> TransportReport:
    """Check the Jacobian-density, half-density and principal-part transport laws at matched samples."""
    pulled = diffeo.pull_phase(phi)
    cm = critical_solve(pulled, faces=("interior",), count=count)
    s = phi.space.s
    d = phi.space.d
    at = TransportedAmplitude(a, diffeo)
    out = []
    for sample in cm.face_samples("interior"):
        x, tt = sample.z[:d], sample.z[d:]
        t = diffeo(x, tt)
        frame = default_frame(phi, x, t)
        pframe = frame.pullback(diffeo)
        dens = delta_phi(phi, x, t, frame)
        dens_t = delta_phi(pulled, x, tt, pframe)
        jdet = abs(float(np.linalg.det(diffeo.fiber_jacobian(x, tt))))
        predicted = dens.value / jdet ** 2
        tr = abs(dens_t.value - predicted) / dens_t.value
        bx = float(ex.japanese_bracket(x))
        h = float(ex.japanese_bracket(tt)) / float(ex.japanese_bracket(t))
        sc_lhs = bx ** s * float(ex.japanese_bracket(tt)) ** (-(s + 1)) * dens_t.value
        sc_rhs = h ** (s + 1) * (h ** (s + 1) * jdet) ** -2 * bx ** s * float(ex.japanese_bracket(t)) ** (-(s + 1)) * dens.value
        tr_sc = abs(sc_lhs - sc_rhs) / sc_lhs
        w = w_phi(phi, a, x, t, frame)
        wt = w_phi(pulled, at, x, tt, pframe)
        wres = abs(wt.w - w.w) / max(abs(w.w), 1e-300)
        m_psi = float(a.order.m_psi)
        pred_p = w.principal * h ** -(m_psi + (s + 1) / 2)
        pres = abs(wt.principal - pred_p) / max(abs(pred_p), 1e-300)
        out.append(LawResidual(tuple(sample.z.tolist()), tr, tr_sc, wres, pres))
    principal = sg.transform_principal(a, *product_map) if product_map is not None else None
    return TransportReport(out, principal, tol)


def diffeo_family(n: int = 10, seed: int = 0) -> list[dict]:
    """Product-form sc-diffeomorphisms on R^2 x R^2 (affine plus scaling terms), as expression texts."""
    rng = np.random.default_rng(seed)
    fam = []
    for _ in range(n):
        p = rng.uniform(0.6, 1.8, 2)
        q = rng.uniform(-0.4, 0.4)
        e = rng.uniform(-0.2, 0.2, 2) * p
        c = rng.uniform(-0.5, 0.5, 2)
        b = rng.uniform(-0.3, 0.3, 2)
        fiber = [f"{p[0]:.6f}*t1 + {q:.6f}*t2 + {e[0]:.6f}*t1*jbt()^-1",
                 f"{p[1]:.6f}*t2 + {e[1]:.6f}*t2*jbt()^-1"]
        base = [f"{1 + b[0]:.6f}*x1 + {c[0]:.6f}", f"{1 + b[1]:.6f}*x2 + {0.2 * b[0]:.6f}*x1*jbx()^-1 + {c[1]:.6f}"]
        fam.append({"fiber": fiber, "base": base})
    return fam


def product_maps(entry: dict, d: int, s: int) -> tuple:
    """(base, fiber) ScMapSpecs for a family entry; fiber components are rewritten in the x block."""
    base_space = ex.VarSpace(d, 1)
    fiber_space = ex.VarSpace(s, 1)
    rewrite = [re.sub(r"jbt\(", "jbx(", re.sub(r"\bt(\d)", r"x\1", c)) for c in entry["fiber"]]
    base = ScMapSpec(tuple(ex.parse(c, base_space) for c in entry["base"]), d)
    fiber = ScMapSpec(tuple(ex.parse(c, fiber_space) for c in rewrite), s)
    return base, fiber


# ---------------------------------------------------------------------------
# Maslov data and coherence


@dataclass(frozen=True)
class MaslovData:
    s: int
    e: int
    sigma: int

    def __post_init__(self):
        if self.s < 0 or self.e < 0 or abs(self.sigma) > self.s:
            raise SymbolError("inconsistent Maslov data")


@dataclass
class MaslovComparison:
    factor: complex
    kappa: int
    lhs_phase: complex
    rhs_phase: complex

    def as_dict(self) -> dict:
        return {"factor": [self.factor.real, self.factor.imag], "kappa": self.kappa}


def maslov_factor(a: MaslovData, b: MaslovData) -> MaslovComparison:
    """e^{i(sigma_A - sigma_B) pi/4}, the integer kappa and the two sides' phase weights."""
    twice = a.sigma - b.sigma - a.s + b.s + a.e - b.e
    if twice % 2:
        raise SymbolError("kappa is not an integer: inconsistent Maslov records")
    kappa = twice // 2
    factor = cmath.exp(1j * math.pi * (a.sigma - b.sigma) / 4)
    lhs = (1j) ** kappa * cmath.exp(1j * math.pi * (a.s - a.e) / 4)
    rhs = cmath.exp(1j * math.pi * (b.s - b.e) / 4)
    return MaslovComparison(factor, kappa, lhs, rhs)


@dataclass
class Parametrization:
    """One local representation I_phi(factor * a) of a Lagrangian distribution."""

    name: str
    phi: PhaseFunction
    amplitude: object
    excess: int = 0
    factor: complex = 1.0

    @classmethod
    def from_surgery(cls, name: str, result) -> "Parametrization":
        return cls(name, result.phase, result.amplitude, result.order.e, result.maslov_factor)

    @property
    def scaled_amplitude(self):
        return self.amplitude if self.factor == 1 else _Scaled(self.amplitude, complex(self.factor))


@dataclass
class _Scaled:
    base: object
    factor: complex

    @property
    def order(self):
        return self.base.order

    @property
    def convention(self):
        return getattr(self.base, "convention", "scalar")

    def __call__(self, xs, ts):
        if isinstance(self.base, sg.Amplitude):
            return self.factor * np.asarray(ex.evaluate(self.base.expr, xs, ts))
        return self.factor * np.asarray(self.base(xs, ts))


@dataclass
class FamilyMember:
    name: str
    symbols: list
    maslov: list


@dataclass
class CoherenceReport:
    pairs: list
    cocycle: list
    tol: float

    @property
    def max_residual(self) -> float:
        vals = [p["residual"] for p in self.pairs] + [c["residual"] for c in self.cocycle]
        return max(vals) if vals else 0.0

    @property
    def passes(self) -> bool:
        return bool(self.pairs) and self.max_residual <= self.tol

    def summary(self) -> dict:
        return {"passes": self.passes, "max_residual": self.max_residual, "pairs": self.pairs,
                "cocycle": self.cocycle}


def symbol_family(params: Sequence[Parametrization], face: str = "psi", count: int = 12) -> list[FamilyMember]:
    """Boundary symbols of each parametrization at its face samples, with Maslov data."""
    members = []
    for p in params:
        cm = critical_solve(p.phi, faces=(face,), count=count)
        syms, mas = [], []
        for sample in cm.face_samples(face):
            bs = boundary_symbol(p.phi, p.scaled_amplitude, sample)
            syms.append(bs)
            mas.append(MaslovData(p.phi.space.s, p.excess, bs.signature))
        members.append(FamilyMember(p.name, syms, mas))
    return members


def _match(sym, others, tol=1e-8):
    best, k = math.inf, None
    for i, o in enumerate(others):
        if o.point.face != sym.point.face:
            continue
        dist = float(np.linalg.norm(o.point.array() - sym.point.array()))
        if dist < best:
            best, k = dist, i
    return k if best < tol else None


def coherence(members: Sequence[FamilyMember], tol: float = 1e-12) -> CoherenceReport:
    """Coherence relation on all overlaps and the factor cocycle on all triples."""
    pairs, cocycle = [], []
    for i, a in enumerate(members):
        for j, b in enumerate(members):
            if j <= i:
                continue
            for k, sym in enumerate(a.symbols):
                m = _match(sym, b.symbols)
                if m is None:
                    continue
                comp = maslov_factor(a.maslov[k], b.maslov[m])
                lhs = comp.lhs_phase * sym.value
                rhs = comp.rhs_phase * b.symbols[m].value
                ratio = rhs / lhs if abs(lhs) > 0 else complex("nan")
                pairs.append({"pair": [a.name, b.name], "point": list(sym.point.fiber), "kappa": comp.kappa,
                              "residual": float(abs(ratio - 1)), "modulus": float(abs(ratio))})
    for i, a in enumerate(members):
        for j, b in enumerate(members):
            for k, c in enumerate(members):
                if len({i, j, k}) < 3:
                    continue
                for n, sym in enumerate(a.symbols):
                    mb = _match(sym, b.symbols)
                    mc = _match(sym, c.symbols)
                    if mb is None or mc is None:
                        continue
                    ab = maslov_factor(a.maslov[n], b.maslov[mb]).factor
                    bc = maslov_factor(b.maslov[mb], c.maslov[mc]).factor
                    ac = maslov_factor(a.maslov[n], c.maslov[mc]).factor
                    cocycle.append({"triple": [a.name, b.name, c.name], "residual": float(abs(ab * bc - ac))})
    return CoherenceReport(pairs, cocycle, tol)


# ---------------------------------------------------------------------------
# exactness probe


@dataclass
class ExactnessVerdict:
    applicable: bool
    symbol_residual: float
    exponents_rep: list
    exponents_diff: list
    gap: float | None
    passes: bool
    note: str = ""

    def summary(self) -> dict:
        def fmt(v):
            return v if v is None or math.isfinite(v) else "inf"
        return {"applicable": self.applicable, "symbol_residual": self.symbol_residual,
                "exponents_rep": [fmt(v) for v in self.exponents_rep],
                "exponents_diff": [fmt(v) for v in self.exponents_diff],
                "gap": fmt(self.gap), "passes": self.passes, "note": self.note}


def exactness_probe(rep1: Parametrization, rep2: Parametrization, face: str = "psi",
                    symbol_tol: float = 1e-6, gap_min: float = 0.8, count: int = 8,
                    probe_cfg=None) -> ExactnessVerdict:
    """Equal symbols should make I(rep1) - I(rep2) one order smaller near Lambda."""
    from . import oscint as oi

    fam = symbol_family([rep1, rep2], face, count)
    resid = 0.0
    matched = []
    for k, sym in enumerate(fam[0].symbols):
        m = _match(sym, fam[1].symbols)
        if m is None:
            continue
        comp = maslov_factor(fam[0].maslov[k], fam[1].maslov[m])
        other = fam[1].symbols[m].value
        r = abs(comp.lhs_phase * sym.value - comp.rhs_phase * other) / max(abs(sym.value), 1e-300)
        resid = max(resid, r)
        matched.append(sym.point)
    if not matched:
        return ExactnessVerdict(False, math.inf, [], [], None, False, "no overlapping samples")
    if resid > symbol_tol:
        return ExactnessVerdict(False, resid, [], [], None, False, "symbols differ; probe not applicable")
    cfg = probe_cfg or oi.ProbeConfig()
    e_rep, e_diff = [], []
    for pt in matched:
        probe = CompactPoint(pt.face, pt.rho_x, pt.base, pt.rho_xi, pt.fiber)
        mags1, mags_d = [], []
        for lam in cfg.scales:
            v1 = _localized_value(rep1, probe, lam, cfg)
            v2 = _localized_value(rep2, probe, lam, cfg)
            mags1.append(abs(v1))
            mags_d.append(abs(v1 - v2))
        e_rep.append(oi._fit_exponent(cfg.scales, mags1)[0])
        e_diff.append(oi._fit_exponent(cfg.scales, mags_d)[0])
    gaps = [b - a for a, b in zip(e_rep, e_diff)]
    gap = min(gaps)
    if all(math.isinf(v) for v in e_diff):
        note = "difference vanishes numerically"
    else:
        note = ""
    return ExactnessVerdict(True, resid, e_rep, e_diff, gap, bool(gap >= gap_min), note)


def _localized_value(rep: Parametrization, probe: CompactPoint, lam: float, cfg) -> complex:
    from . import oscint as oi

    phi = rep.phi
    d = phi.space.d
    x0 = np.asarray(probe.base, float)
    xi = np.asarray(probe.fiber, float)
    r = cfg.window_radius
    win = oi.TestDensity(lambda xs: oi.compact_bump(np.sum((xs - x0) ** 2, -1) / r ** 2), x0, np.full(d, r), lam * xi)
    loc = oi._phase_space_localizer(phi, lam, xi, cfg.sigma_psi)
    amp = rep.scaled_amplitude
    return oi._probe_integral(phi, amp, win, oi.QuadratureConfig(eps_list=(0.001,), refine=1.0), None, loc,
                              lam * (1 + np.linalg.norm(xi)), cfg)
