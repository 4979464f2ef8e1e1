"""SG phase functions: validation, critical sets on all faces, sc-Hessians, lambda_phi and Legendrian checks.

Boundary faces are handled through homogeneous principal components.  A face
point stores unit vectors for the blocks at infinity; homogeneous components
are evaluated at radius ``FACE_RADIUS`` where the smooth norms equal the
Euclidean ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from . import expr as ex
from . import sgsymbols as sg
from .geometry import (FACES, CompactPoint, GeometryError, TangentSample, blowup_chart, contact_eval,
                       sphere_directions)

FACE_RADIUS = 4.0
NEWTON_TOL = 1e-12
STORE_TOL = 1e-9
RANK_TOL = 1e-8


class PhaseError(ValueError):
    pass


def _values(exprs, xs, ts, shape=None):
    xs = np.asarray(xs, float)
    ts = np.asarray(ts, float)
    shape = np.broadcast_shapes(xs.shape[:-1], ts.shape[:-1]) if shape is None else shape
    return np.stack([np.broadcast_to(ex.evaluate(e, xs, ts), shape) for e in exprs], axis=-1)


@dataclass(frozen=True)
class ConeDomain:
    """Fiber variables in ``bounded`` (1-based) satisfy |t_j| < ratio * <t_rest>."""

    bounded: tuple
    ratio: Fraction = Fraction(1, 2)

    def _split(self, ts):
        ts = np.asarray(ts, float)
        idx = [j - 1 for j in self.bounded]
        rest = [j for j in range(ts.shape[-1]) if j not in idx]
        return ts[..., idx], ts[..., rest]

    def contains(self, ts) -> np.ndarray:
        b, r = self._split(ts)
        lim = float(self.ratio) * np.sqrt(1.0 + np.sum(r * r, axis=-1))
        return np.all(np.abs(b) < lim[..., None], axis=-1)

    def contains_direction(self, eta) -> np.ndarray:
        b, r = self._split(eta)
        lim = float(self.ratio) * np.linalg.norm(r, axis=-1)
        return np.all(np.abs(b) < lim[..., None], axis=-1)


@dataclass(frozen=True)
class PhaseFunction:
    expr: ex.Expr
    space: ex.VarSpace
    domain: ConeDomain | None = None

    @classmethod
    def parse(cls, text: str, space: ex.VarSpace, domain: ConeDomain | None = None) -> "PhaseFunction":
        return cls(ex.parse(text, space), space, domain)

    def accept(self, xs, ts) -> np.ndarray:
        ts = np.asarray(ts, float)
        shape = np.broadcast_shapes(np.shape(xs)[:-1], ts.shape[:-1])
        if self.domain is None:
            return np.ones(shape, bool)
        return np.broadcast_to(self.domain.contains(ts), shape)

    @cached_property
    def grad_x_exprs(self):
        return ex.grad(self.expr, self.space, "x")

    @cached_property
    def grad_t_exprs(self):
        return ex.grad(self.expr, self.space, "t")

    def value(self, xs, ts):
        return ex.evaluate(self.expr, xs, ts)

    def grad_x(self, xs, ts):
        return _values(self.grad_x_exprs, xs, ts)

    def grad_t(self, xs, ts):
        return _values(self.grad_t_exprs, xs, ts)

    @cached_property
    def components(self) -> dict:
        """Degree-one homogeneous components keyed by face; None when not symbolic."""
        accept = None if self.domain is None else (lambda xs, ts: self.domain.contains_direction(ts))
        out = {"interior": self.expr}
        try:
            out["psi"] = sg.component_expr(self.expr, self.space, "t", Fraction(1), accept)
        except sg.SymbolError:
            out["psi"] = None
        try:
            out["e"] = sg.component_expr(self.expr, self.space, "x", Fraction(1))
        except sg.SymbolError:
            out["e"] = None
        try:
            out["psie"] = (sg.component_expr(out["psi"], self.space, "x", Fraction(1))
                           if out["psi"] is not None else None)
        except sg.SymbolError:
            out["psie"] = None
        return out


# ---------------------------------------------------------------------------
# validation


@dataclass
class PhaseVerdict:
    passes: bool
    order_report: sg.OrderReport
    constant: float
    witness: dict | None
    detail: str = ""

    def summary(self) -> dict:
        return {"passes": self.passes, "constant": self.constant, "witness": self.witness,
                "order_passes": self.order_report.passes, "detail": self.detail}


def _domain_grid(phi: PhaseFunction, n_dirs: int = 24):
    grid = sg.SymbolGrid.standard(phi.space, n_dirs=n_dirs)
    if phi.domain is None:
        return grid
    dirs = grid.dirs_t[phi.domain.contains_direction(grid.dirs_t)]
    extra = sphere_directions(phi.space.s, 400)
    extra = extra[phi.domain.contains_direction(extra)]
    dirs = np.concatenate([dirs, extra[: max(0, n_dirs - len(dirs))]])
    return sg.SymbolGrid(grid.radii_x, grid.radii_t, grid.dirs_x, dirs)


def _with_axes(dirs: np.ndarray) -> np.ndarray:
    n = dirs.shape[1]
    eye = np.eye(n)
    return np.concatenate([dirs, eye, -eye])


def validate_phase(phi: PhaseFunction, r_min: float = 10.0, tol: float = 1e-6) -> PhaseVerdict:
    """Order (1,1) and |<x>^-1 grad_t phi|^2 + |<t>^-1 grad_x phi|^2 >= C for |t| >= r_min."""
    grid = _domain_grid(phi)
    order = sg.verify_order(phi.expr, sg.SGOrder(1, 1), depth=2, grid=grid, space=phi.space)
    if not order.passes:
        return PhaseVerdict(False, order, 0.0, None, "phase is not of order (1,1)")
    d, s = phi.space.d, phi.space.s
    radii_x = np.concatenate([[0.0, 0.1, 0.5], np.geomspace(1, 1e5, 11)])
    radii_t = np.geomspace(r_min, 1e5, 9)
    dx = _with_axes(sphere_directions(d, 24))
    dt = _with_axes(grid.dirs_t)
    if phi.domain is not None:
        dt = dt[phi.domain.contains_direction(dt)]
    xs = radii_x[:, None, None, None, None] * dx[None, None, :, None, :]
    ts = radii_t[None, :, None, None, None] * dt[None, None, None, :, :]
    shape = (len(radii_x), len(radii_t), len(dx), len(dt))
    xs = np.broadcast_to(xs, shape + (d,))
    ts = np.broadcast_to(ts, shape + (s,))
    gx = phi.grad_x(xs, ts)
    gt = phi.grad_t(xs, ts)
    bx = ex.japanese_bracket(xs)[..., None]
    bt = ex.japanese_bracket(ts)[..., None]
    q = np.sum((gt / bx) ** 2, axis=-1) + np.sum((gx / bt) ** 2, axis=-1)
    q = np.where(phi.accept(xs, ts), q, np.inf)
    k = np.unravel_index(np.argmin(q), q.shape)
    c = float(q[k])
    # uniformity: the infimum at the outermost fiber radius must not collapse
    outer = float(q[:, -1].min())
    passes = c > tol and outer > tol
    witness = None if passes else {"x": xs[k].tolist(), "t": ts[k].tolist(), "value": c}
    return PhaseVerdict(passes, order, c, witness, "" if passes else "phase inequality fails")


# ---------------------------------------------------------------------------
# face models


@dataclass
class FaceModel:
    """Stationarity system on one face in variables z = (base, fiber)."""

    phi: PhaseFunction
    face: str

    def __post_init__(self):
        if self.face not in FACES:
            raise PhaseError(f"unknown face {self.face!r}")
        g = self.phi.components[self.face]
        if g is None:
            raise sg.NotSymbolic(f"no symbolic component on the {self.face} face")
        self.g = g
        sp = self.phi.space
        self.unit_x = self.face in ("e", "psie")
        self.unit_t = self.face in ("psi", "psie")
        self.gt = ex.grad(g, sp, "t")
        self.gx = ex.grad(g, sp, "x")
        self.htt = [ex.grad(e, sp, "t") for e in self.gt]
        self.htx = [ex.grad(e, sp, "x") for e in self.gt]
        self.hxx = [ex.grad(e, sp, "x") for e in self.gx]
        self.hxt = [ex.grad(e, sp, "t") for e in self.gx]

    @property
    def d(self) -> int:
        return self.phi.space.d

    @property
    def s(self) -> int:
        return self.phi.space.s

    def split(self, z):
        z = np.asarray(z, float)
        return z[..., : self.d], z[..., self.d:]

    def eval_point(self, z):
        b, f = self.split(z)
        cx = FACE_RADIUS if self.unit_x else 1.0
        ct = FACE_RADIUS if self.unit_t else 1.0
        return cx * b, ct * f, cx, ct

    def normalize(self, z):
        b, f = self.split(z)
        if self.unit_x:
            b = b / np.linalg.norm(b)
        if self.unit_t:
            f = f / np.linalg.norm(f)
        return np.concatenate([b, f])

    def projector(self, z):
        b, f = self.split(z)
        blocks = []
        for v, unit in ((b, self.unit_x), (f, self.unit_t)):
            blocks.append(np.eye(len(v)) - np.outer(v, v) if unit else np.eye(len(v)))
        p = np.zeros((self.d + self.s, self.d + self.s))
        p[: self.d, : self.d] = blocks[0]
        p[self.d:, self.d:] = blocks[1]
        return p

    def residual(self, z):
        X, T, _, _ = self.eval_point(z)
        return np.array([float(ex.evaluate(e, X, T)) for e in self.gt])

    def jacobian(self, z):
        """d residual / dz (full, before projection onto the face tangent space)."""
        X, T, cx, ct = self.eval_point(z)
        jx = np.array([[float(ex.evaluate(e, X, T)) for e in row] for row in self.htx]) * cx
        jt = np.array([[float(ex.evaluate(e, X, T)) for e in row] for row in self.htt]) * ct
        return np.hstack([jx, jt])

    def tangent_jacobian(self, z):
        return self.jacobian(z) @ self.projector(z)

    def in_domain(self, z) -> bool:
        if self.phi.domain is None:
            return True
        _, f = self.split(z)
        if self.unit_t:
            return bool(self.phi.domain.contains_direction(f))
        return bool(self.phi.domain.contains(f))

    def xi(self, z):
        """grad_x of the face component; a direction on the psi faces."""
        X, T, _, _ = self.eval_point(z)
        return np.array([float(ex.evaluate(e, X, T)) for e in self.gx])

    def hessian_tt(self, z):
        X, T, _, ct = self.eval_point(z)
        return np.array([[float(ex.evaluate(e, X, T)) for e in row] for row in self.htt]) * ct


def _rank(m: np.ndarray, tol: float = RANK_TOL) -> int:
    if m.size == 0:
        return 0
    sv = np.linalg.svd(m, compute_uv=False)
    return int(np.sum(sv > tol * max(1.0, sv[0])))


def newton(model: FaceModel, z0, max_iter: int = 50, tol: float = NEWTON_TOL):
    """Damped minimal-norm Gauss-Newton on the face; returns (z, residual, history, converged)."""
    z = model.normalize(np.asarray(z0, float))
    res = np.linalg.norm(model.residual(z))
    history = [float(res)]
    for _ in range(max_iter):
        if res < tol:
            return z, float(res), history, True
        jt = model.tangent_jacobian(z)
        step = model.projector(z) @ np.linalg.lstsq(jt, -model.residual(z), rcond=None)[0]
        lam = 1.0
        while True:
            zn = model.normalize(z + lam * step)
            rn = np.linalg.norm(model.residual(zn))
            if rn < res or lam < 1e-6:
                break
            lam /= 2
        if not np.all(np.isfinite(zn)):
            break
        z, res = zn, rn
        history.append(float(res))
    return z, float(res), history, bool(res < tol)


@dataclass
class CriticalSample:
    face: str
    z: np.ndarray
    residual: float
    rank: int
    iterations: int

    def as_dict(self) -> dict:
        return {"face": self.face, "z": [float(v) for v in self.z], "residual": self.residual, "rank": self.rank}


@dataclass
class CriticalManifold:
    phi: PhaseFunction
    samples: list
    excess: int | None
    clean: bool
    failures: list
    ranks: dict = field(default_factory=dict)

    def face_samples(self, face: str) -> list:
        return [p for p in self.samples if p.face == face]

    def summary(self) -> dict:
        counts = {f: len(self.face_samples(f)) for f in FACES}
        return {"excess": self.excess, "clean_on_samples": self.clean, "counts": counts,
                "ranks": {k: sorted(v) for k, v in self.ranks.items()}, "failures": len(self.failures)}


def default_seeds(phi: PhaseFunction, face: str, count: int = 24, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed + FACES.index(face))
    d, s = phi.space.d, phi.space.s
    b = rng.normal(size=(count, d)) * 2.0
    f = rng.normal(size=(count, s)) * 2.0
    if phi.domain is not None:
        idx = [j - 1 for j in phi.domain.bounded]
        f[:, idx] *= 0.05
    return np.hstack([b, f])


def _dedupe(samples, tol=1e-7):
    out = []
    for p in samples:
        if all(q.face != p.face or np.linalg.norm(q.z - p.z) > tol for q in out):
            out.append(p)
    return out


def critical_solve(phi: PhaseFunction, seeds: dict | None = None, faces: Sequence[str] = FACES,
                   count: int = 24, seed: int = 0) -> CriticalManifold:
    """Newton-solve the critical equations from seeds on each requested face."""
    samples, failures, ranks = [], [], {}
    for face in faces:
        try:
            model = FaceModel(phi, face)
        except sg.NotSymbolic as err:
            failures.append({"face": face, "reason": str(err)})
            continue
        face_seeds = (seeds or {}).get(face)
        if face_seeds is None:
            face_seeds = default_seeds(phi, face, count, seed)
        for z0 in np.atleast_2d(face_seeds):
            z0 = np.asarray(z0, float)
            try:
                z, res, hist, ok = newton(model, z0)
            except (FloatingPointError, np.linalg.LinAlgError, ex.DomainError) as err:
                failures.append({"face": face, "seed": z0.tolist(), "reason": str(err)})
                continue
            if not ok or res > STORE_TOL:
                failures.append({"face": face, "seed": z0.tolist(), "reason": "Newton did not converge",
                                 "residual": res})
                continue
            if not model.in_domain(z):
                failures.append({"face": face, "seed": z0.tolist(), "reason": "left the phase domain"})
                continue
            rank = _rank(model.tangent_jacobian(z))
            samples.append(CriticalSample(face, z, res, rank, len(hist) - 1))
            ranks.setdefault(face, set()).add(rank)
    samples = _dedupe(samples)
    all_ranks = set().union(*ranks.values()) if ranks else set()
    clean = len(all_ranks) == 1
    excess = phi.space.s - next(iter(all_ranks)) if clean else None
    return CriticalManifold(phi, samples, excess, clean, failures, ranks)


def critical_tangents(model: FaceModel, z) -> np.ndarray:
    """Orthonormal basis (columns) of the tangent space of the critical set at z."""
    p = model.projector(z)
    jt = model.tangent_jacobian(z)
    u, sv, vt = np.linalg.svd(np.vstack([jt, np.eye(len(z)) - p]))
    r = int(np.sum(sv > RANK_TOL * max(1.0, sv[0])))
    return vt[r:].T


# ---------------------------------------------------------------------------
# scattering Hessian


@dataclass
class ScHessianRecord:
    matrix: np.ndarray
    rank: int
    signature: int
    face: str

    def __post_init__(self):
        if not (abs(self.signature) <= self.rank <= self.matrix.shape[0]) or (self.signature - self.rank) % 2:
            raise PhaseError("inconsistent signature and rank")

    def as_dict(self) -> dict:
        return {"face": self.face, "rank": self.rank, "signature": self.signature,
                "matrix": np.asarray(self.matrix).tolist()}


def signature_rank(m: np.ndarray, tol: float = RANK_TOL) -> tuple[int, int]:
    w = np.linalg.eigvalsh(0.5 * (m + m.T))
    cut = tol * max(1.0, float(np.max(np.abs(w)))) if w.size else 0.0
    pos = int(np.sum(w > cut))
    neg = int(np.sum(w < -cut))
    return pos - neg, pos + neg


def sc_hessian(phi: PhaseFunction, sample: CriticalSample) -> ScHessianRecord:
    model = FaceModel(phi, sample.face)
    if np.linalg.norm(model.residual(sample.z)) > STORE_TOL:
        raise PhaseError("not a critical point")
    h = model.hessian_tt(sample.z)
    b, f = model.split(sample.z)
    if sample.face == "interior":
        h = h * float(ex.japanese_bracket(f)) / float(ex.japanese_bracket(b))
    elif sample.face == "e":
        h = h * float(ex.japanese_bracket(f))
    else:
        p = np.eye(len(f)) - np.outer(f, f)
        h = p @ h @ p
        if sample.face == "psi":
            h = h / float(ex.japanese_bracket(b))
    sig, rank = signature_rank(h)
    return ScHessianRecord(h, rank, sig, sample.face)


# ---------------------------------------------------------------------------
# lambda_phi and Lagrangian samples


def lambda_phi(phi: PhaseFunction, sample: CriticalSample) -> CompactPoint:
    model = FaceModel(phi, sample.face)
    if np.linalg.norm(model.residual(sample.z)) > STORE_TOL:
        raise PhaseError("lambda_phi needs a critical point")
    return _lambda(model, sample.z)


def _lambda(model: FaceModel, z) -> CompactPoint:
    b, _ = model.split(z)
    xi = model.xi(z)
    face = model.face
    if face == "interior":
        return CompactPoint.from_euclidean(b, xi)
    if face == "e":
        return CompactPoint("e", 0.0, tuple(b), 1.0 / float(ex.japanese_bracket(xi)), tuple(xi))
    n = np.linalg.norm(xi)
    if n == 0:
        raise PhaseError("vanishing frequency direction at fiber infinity")
    xi_hat = tuple(xi / n)
    if face == "psi":
        return CompactPoint("psi", 1.0 / float(ex.japanese_bracket(b)), tuple(b), 0.0, xi_hat)
    return CompactPoint("psie", 0.0, tuple(b), 0.0, xi_hat)


def _retract(model: FaceModel, z):
    z, res, _, ok = newton(model, z, max_iter=20, tol=1e-13)
    return z, ok or res < 1e-11


@dataclass
class LagrangianSample:
    point: CompactPoint
    tangents: list
    source: CriticalSample

    @property
    def face(self) -> str:
        return self.point.face

    def row(self) -> list:
        return [self.face, self.point.rho_x, *self.point.base, self.point.rho_xi, *self.point.fiber]


def sample_lagrangian(cm: CriticalManifold, step: float = 1e-5) -> tuple[list, dict]:
    """Lambda samples with tangent vectors pushed from the critical set; plus rank data."""
    out, ranks = [], {}
    for sample in cm.samples:
        model = FaceModel(cm.phi, sample.face)
        point = _lambda(model, sample.z)
        basis = critical_tangents(model, sample.z)
        tangents = []
        for k in range(basis.shape[1]):
            v = basis[:, k]
            zp, okp = _retract(model, sample.z + step * v)
            zm, okm = _retract(model, sample.z - step * v)
            if not (okp and okm):
                continue
            pp, pm = _lambda(model, zp), _lambda(model, zm)
            db = (np.asarray(pp.base) - np.asarray(pm.base)) / (2 * step)
            df = (np.asarray(pp.fiber) - np.asarray(pm.fiber)) / (2 * step)
            tangents.append((db, df))
        rank = _rank(np.array([np.concatenate(t) for t in tangents])) if tangents else 0
        ranks.setdefault(sample.face, set()).add(rank)
        out.append(LagrangianSample(point, tangents, sample))
    dims = {face: sorted(v) for face, v in ranks.items()}
    return out, dims


@dataclass
class LegendrianReport:
    passes: bool
    worst: dict
    counts: dict
    detail: list

    def summary(self) -> dict:
        return {"passes": self.passes, "worst": self.worst, "counts": self.counts}


class InsufficientSamples(PhaseError):
    pass


def legendrian_check(samples: Sequence[LagrangianSample], d: int, tol: float = 1e-8,
                     psie_tol: float = 1e-6) -> LegendrianReport:
    """alpha_psi on Lambda^psi, alpha_e on Lambda^e, x-hat.xi-hat and alpha_psie at the corner."""
    counts = {f: sum(1 for p in samples if p.face == f) for f in ("psi", "e", "psie")}
    for face, n in counts.items():
        if 0 < n < 2 * d:
            raise InsufficientSamples(f"{face}: {n} samples, need at least {2 * d}")
    worst = {"alpha_psi": 0.0, "alpha_e": 0.0, "corner_dot": 0.0, "alpha_psie": 0.0}
    detail = []
    for p in samples:
        if p.face == "interior":
            continue
        if p.face == "psie":
            dot = abs(float(np.dot(p.point.base, p.point.fiber)))
            worst["corner_dot"] = max(worst["corner_dot"], dot)
            chart, _, _ = blowup_chart(1.0, 1.0)
            vecs = list(p.tangents) + [(np.zeros(d), np.zeros(d))]
            for k, (db, df) in enumerate(vecs):
                d_tau = 1.0 if k == len(vecs) - 1 else 0.0
                ts = TangentSample(p.point, tuple(db), tuple(df), d_tau=d_tau, tau=1.0, chart=chart)
                norm = max(np.linalg.norm(np.concatenate([db, df, [d_tau]])), 1e-300)
                worst["alpha_psie"] = max(worst["alpha_psie"], abs(contact_eval("alpha_psie", ts)) / norm)
            continue
        form = "alpha_psi" if p.face == "psi" else "alpha_e"
        for db, df in p.tangents:
            norm = np.linalg.norm(np.concatenate([db, df]))
            if norm == 0:
                continue
            val = abs(contact_eval(form, TangentSample(p.point, tuple(db), tuple(df)))) / norm
            worst[form] = max(worst[form], val)
            if val > tol:
                detail.append({"face": p.face, "form": form, "value": val, "point": p.point.array().tolist()})
    passes = (worst["alpha_psi"] <= tol and worst["alpha_e"] <= tol and worst["corner_dot"] <= tol
              and worst["alpha_psie"] <= psie_tol)
    return LegendrianReport(passes, worst, counts, detail)


# ---------------------------------------------------------------------------
# conormal bundles


@dataclass(frozen=True)
class ConormalFaces:
    """Closed-form faces of the conormal bundle of {x' = 0}, x' the first d - k coordinates."""

    d: int
    k: int

    @property
    def m(self) -> int:
        return self.d - self.k

    def distance(self, point: CompactPoint) -> float:
        m = self.m
        base = np.asarray(point.base)
        fiber = np.asarray(point.fiber)
        if point.face == "interior":
            return float(np.linalg.norm(base[:m]) + np.linalg.norm(fiber[m:]))
        if point.face == "psi":
            return float(np.linalg.norm(base[:m]) + np.linalg.norm(fiber[m:])
                         + abs(np.linalg.norm(fiber[:m]) - 1))
        if point.face == "e":
            if self.k == 0:
                return float("inf")
            return float(np.linalg.norm(base[:m]) + abs(np.linalg.norm(base[m:]) - 1)
                         + np.linalg.norm(fiber[m:]))
        if self.k == 0:
            return float("inf")
        return float(np.linalg.norm(base[:m]) + np.linalg.norm(fiber[m:])
                     + abs(np.linalg.norm(base[m:]) - 1) + abs(np.linalg.norm(fiber[:m]) - 1))

    def nonempty(self) -> tuple:
        return ("psi",) if self.k == 0 else ("psi", "e", "psie")


def conormal_bundle(k: int, d: int) -> tuple[PhaseFunction, ConormalFaces]:
    """phi(x, y) = x'.y with x' = (x_1, ..., x_{d-k}), y in R^{d-k}."""
    if not 0 <= k < d:
        raise PhaseError("need 0 <= k < d (at least one fiber variable)")
    m = d - k
    space = ex.VarSpace(d, m)
    phi = ex.add(*(ex.mul(ex.x(i), ex.t(i)) for i in range(1, m + 1)))
    return PhaseFunction(phi, space), ConormalFaces(d, k)


def surface_samples(points: Sequence[tuple], tangents: Sequence[Sequence[tuple]], face: str) -> list:
    """Wrap externally constructed face points (e.g. a non-Lagrangian test surface)."""
    out = []
    for (base, fiber), tans in zip(points, tangents):
        rho_x = 0.0 if face in ("e", "psie") else 1.0 / float(ex.japanese_bracket(np.asarray(base)))
        rho_xi = 0.0 if face in ("psi", "psie") else 1.0 / float(ex.japanese_bracket(np.asarray(fiber)))
        try:
            pt = CompactPoint(face, rho_x, tuple(base), rho_xi, tuple(fiber))
        except GeometryError as err:
            raise PhaseError(str(err)) from err
        out.append(LagrangianSample(pt, [(np.asarray(a, float), np.asarray(b, float)) for a, b in tans], None))
    return out
