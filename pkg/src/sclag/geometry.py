"""Radial compactification, boundary defining functions, sc-maps and contact forms.

All boundary values are obtained as limits along rays ``x = R * omega`` with
polynomial (Richardson) extrapolation in ``1/R``.  Points on the compactified
cotangent bundle are carried by :class:`CompactPoint`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from . import expr as ex

RAY_RADII = (1e3, 1e4, 1e5)
RANK_TOL = 1e-8
FACES = ("interior", "e", "psi", "psie")


class GeometryError(ValueError):
    pass


class PreconditionError(GeometryError):
    pass


# ---------------------------------------------------------------------------
# directions and ray limits


def sphere_directions(d: int, count: int = 50) -> np.ndarray:
    """Deterministic, roughly uniform unit vectors in R^d (all of S^0 when d = 1)."""
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        ang = 2 * np.pi * (np.arange(count) + 0.5) / count
        return np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    if d == 3:
        k = np.arange(count) + 0.5
        z = 1 - 2 * k / count
        phi = np.pi * (1 + 5 ** 0.5) * k
        r = np.sqrt(1 - z * z)
        return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)
    rng = np.random.default_rng(1729 + d)
    v = rng.standard_normal((count, d))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def tangent_basis(omega: np.ndarray) -> np.ndarray:
    """Orthonormal basis of omega^perp as the columns of a (d, d-1) matrix."""
    omega = np.asarray(omega, dtype=float)
    d = omega.shape[0]
    q, _ = np.linalg.qr(np.column_stack([omega, np.eye(d)]))
    basis = q[:, 1:d]
    return basis


def richardson(values: Sequence, steps: Sequence[float]):
    """Extrapolate samples v(h) to h = 0 with a full-degree polynomial in h.

    Returns ``(limit, error)`` where the error compares the full extrapolant
    with the one built from all but the coarsest sample.
    """
    vals = [np.asarray(v, dtype=complex if np.iscomplexobj(v) else float) for v in values]
    hs = [float(h) for h in steps]

    def neville(vs, hh):
        table = list(vs)
        n = len(table)
        for level in range(1, n):
            for i in range(n - level):
                h0, h1 = hh[i], hh[i + level]
                table[i] = (h1 * table[i] - h0 * table[i + 1]) / (h1 - h0)
        return table[0]

    full = neville(vals, hs)
    if len(vals) < 2:
        return full, np.zeros_like(full, dtype=float)
    reduced = neville(vals[1:], hs[1:])
    return full, np.abs(full - reduced)


def ray_limit(fn: Callable[[float], np.ndarray], radii: Sequence[float] = RAY_RADII):
    """Limit of fn(R) as R -> infinity, extrapolated in 1/R."""
    values = [fn(r) for r in radii]
    return richardson(values, [1.0 / r for r in radii])


def fitted_rate(radii: Sequence[float], deviations: Sequence[float]) -> float:
    """Least-squares exponent p in |deviation| ~ C R^(-p)."""
    r = np.log(np.asarray(radii, dtype=float))
    dev = np.log(np.maximum(np.abs(np.asarray(deviations, dtype=float)), 1e-300))
    slope = np.polyfit(r, dev, 1)[0]
    return float(-slope)


# ---------------------------------------------------------------------------
# radial compactification


def _radial_profile(r):
    """|iota(x)| as a function of r = |x|; equals 1 - 1/r for r >= 3."""
    r = np.asarray(r, dtype=float)
    n = np.sqrt(r * r + 4.0 * ex.bump_derivative(r * r, 0))
    return r * (n - 1.0) / (n * n)


def iota(x) -> np.ndarray:
    """Radial compactification R^d -> open unit ball.

    For |x| > 3 this is x/|x| (1 - 1/|x|).  Inside radius 3 the radial
    profile is r (N - 1)/N^2 with N^2 = r^2 + 4 bump(r^2), which is smooth,
    strictly increasing and vanishes to first order at the origin.
    """
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1, keepdims=True)
    n2 = r * r + 4.0 * ex.bump_derivative(r * r, 0)
    n = np.sqrt(n2)
    return x * (n - 1.0) / n2


def iota_inv(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    flat = y.reshape(-1, y.shape[-1])
    out = np.empty_like(flat)
    for i, v in enumerate(flat):
        s = float(np.linalg.norm(v))
        if s >= 1.0:
            raise GeometryError(f"iota_inv needs |y| < 1, got {s}")
        if s == 0.0:
            out[i] = 0.0
            continue
        if s >= 2.0 / 3.0:
            r = 1.0 / (1.0 - s)
        else:
            r = brentq(lambda q: float(_radial_profile(q)) - s, 0.0, 3.0, xtol=1e-15, rtol=1e-15)
        out[i] = v / s * r
    return out.reshape(y.shape)


# ---------------------------------------------------------------------------
# boundary defining functions


@dataclass
class BdfReport:
    equivalent: bool
    ratio_min: float
    ratio_max: float
    worst_slope: float
    limits: np.ndarray
    rate: float | None
    detail: str = ""


def _ray_values(e: ex.Expr, space: ex.VarSpace, directions: np.ndarray, radii) -> np.ndarray:
    pts = np.asarray(radii)[:, None, None] * directions[None, :, :]
    ts = np.zeros(pts.shape[:-1] + (space.s,))
    return ex.evaluate(e, pts, ts)


def bdf_equivalent(rho1: ex.Expr, rho2: ex.Expr, space: ex.VarSpace, radii=RAY_RADII,
                   n_dirs: int = 50, slope_tol: float = 0.1) -> BdfReport:
    """Decide whether rho1/rho2 extends positively and boundedly to infinity."""
    dirs = sphere_directions(space.d, n_dirs)
    radii = tuple(radii)
    v1 = _ray_values(rho1, space, dirs, radii)
    v2 = _ray_values(rho2, space, dirs, radii)
    if np.any(v1 <= 0) or np.any(v2 <= 0):
        return BdfReport(False, float("nan"), float("nan"), float("nan"), np.array([]), None,
                         "a candidate bdf is not positive on the ray grid")
    ratio = v1 / v2
    logr = np.log(np.asarray(radii))
    slopes = np.polyfit(logr, np.log(ratio), 1)[0]
    worst = float(np.max(np.abs(slopes)))
    limits, _ = richardson(list(ratio), [1.0 / r for r in radii])
    ok = worst < slope_tol and np.all(limits > 0)
    rate = None
    if ok:
        fine = np.geomspace(radii[0], radii[-1], 9)
        vals = _ray_values(rho1, space, dirs, fine) / _ray_values(rho2, space, dirs, fine)
        dev = np.max(np.abs(vals - limits[None, :]), axis=1)
        if np.all(dev > 1e-15 * np.max(np.abs(limits))):
            rate = fitted_rate(fine, dev)
    return BdfReport(bool(ok), float(ratio.min()), float(ratio.max()), worst, limits, rate)


def deviation_rate(rho1: ex.Expr, rho2: ex.Expr, space: ex.VarSpace, target: float = 1.0,
                   n_dirs: int = 50, lo: float = 1e3, hi: float = 1e5) -> float:
    """Worst-direction exponent p with |rho1/rho2 - target| ~ R^-p on [lo, hi]."""
    dirs = sphere_directions(space.d, n_dirs)
    radii = np.geomspace(lo, hi, 9)
    dev = np.abs(_ray_values(rho1, space, dirs, radii) / _ray_values(rho2, space, dirs, radii) - target)
    return min(fitted_rate(radii, dev[:, j]) for j in range(dev.shape[1]))


# ---------------------------------------------------------------------------
# scattering differential


@dataclass
class ScDifferential:
    rho_coefficient: ex.Expr
    """Coefficient of d rho / rho^2 in the polar chart rho = 1/[x], as an expression."""
    boundary_rho: np.ndarray
    boundary_tangential: np.ndarray
    directions: np.ndarray


def sc_differential(f: ex.Expr, space: ex.VarSpace, directions=None, radii=RAY_RADII) -> ScDifferential:
    """sc-differential of f in the collar chart x = omega(z)/rho with rho = 1/[x].

    rho^2 d_rho f = -omega . grad f and rho d_z f = e_j . grad f, so both
    coefficients are read off the Euclidean gradient; boundary values are ray
    limits.  The order of f is checked: the gradient must stay bounded.
    """
    grad = ex.grad(f, space, "x")
    radial = ex.mul(ex.Const(-1), ex.add(*(ex.mul(ex.x(i + 1), g) for i, g in enumerate(grad))),
                    ex.power(ex.nx(), -1))
    dirs = sphere_directions(space.d) if directions is None else np.atleast_2d(np.asarray(directions, float))
    rho_vals, tan_vals = [], []
    for omega in dirs:
        basis = tangent_basis(omega)

        def gvec(r, omega=omega):
            pts = r * omega
            return np.array([ex.evaluate(g, pts, np.zeros(space.s)) for g in grad])

        growth = [np.linalg.norm(gvec(r)) for r in radii]
        if growth[-1] > 10 * max(1.0, growth[0]) and growth[-1] > 1e3:
            raise GeometryError(f"f has order above 1 along direction {omega.tolist()}")
        lim, _ = ray_limit(gvec, radii)
        rho_vals.append(-float(omega @ lim))
        tan_vals.append(basis.T @ lim)
    return ScDifferential(radial, np.array(rho_vals), np.array(tan_vals), dirs)


# ---------------------------------------------------------------------------
# sc-maps


@dataclass(frozen=True)
class ScMapSpec:
    """A product-form map given by component expressions of the x block.

    ``chart`` is ``"euclidean"`` (bdf 1/<x>) or ``"ball"`` (bdf 1 - |v| over
    the coordinates not listed in the ``*_bounded`` tuples; bounded
    coordinates range over (-eps, eps)).
    """

    components: tuple
    source_dim: int
    chart: str = "euclidean"
    source_bounded: tuple = ()
    target_bounded: tuple = ()
    eps: float = 0.5

    @property
    def target_dim(self) -> int:
        return len(self.components)

    @property
    def space(self) -> ex.VarSpace:
        return ex.VarSpace(self.source_dim, 1)

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        zeros = np.zeros(pts.shape[:-1] + (1,))
        return np.stack([np.broadcast_to(ex.evaluate(c, pts, zeros), pts.shape[:-1]) for c in self.components],
                        axis=-1)

    def jacobian_exprs(self):
        return [[ex.diff(c, ex.x(j + 1)) for j in range(self.source_dim)] for c in self.components]

    def jacobian(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        zeros = np.zeros(pts.shape[:-1] + (1,))
        rows = [np.stack([np.broadcast_to(ex.evaluate(g, pts, zeros), pts.shape[:-1]) for g in row], axis=-1)
                for row in self.jacobian_exprs()]
        return np.stack(rows, axis=-2)


def compose(outer: ScMapSpec, inner: ScMapSpec) -> ScMapSpec:
    if outer.source_dim != inner.target_dim or outer.chart != inner.chart:
        raise GeometryError("maps cannot be composed")
    mapping = {ex.x(i + 1): c for i, c in enumerate(inner.components)}
    comps = tuple(ex.substitute(c, mapping, {"x": inner.target_dim}) for c in outer.components)
    return ScMapSpec(comps, inner.source_dim, outer.chart, inner.source_bounded, outer.target_bounded,
                     min(outer.eps, inner.eps))


@dataclass
class ScMapVerdict:
    verified: bool
    h_min: float
    h_max: float
    worst_slope: float
    jacobian_slope: float
    witness: list | None = None
    detail: str = ""


def _ball_bdf(v: np.ndarray, bounded: tuple) -> np.ndarray:
    keep = [i for i in range(v.shape[-1]) if i + 1 not in bounded]
    return 1.0 - np.linalg.norm(v[..., keep], axis=-1)


def _ball_samples(spec: ScMapSpec, deltas, n_dirs: int) -> np.ndarray:
    """Points at distance delta from the source boundary, shape (len(deltas), n, dim).

    Bounded coordinates (of the source, or of the target when the source is a
    full ball) are drawn inside (-0.8 eps, 0.8 eps).
    """
    bounded = spec.source_bounded or spec.target_bounded
    free = [i for i in range(spec.source_dim) if i + 1 not in bounded]
    fixed = [i - 1 for i in bounded]
    rng = np.random.default_rng(7)
    dirs = sphere_directions(len(free), n_dirs)
    taus = rng.uniform(-0.8 * spec.eps, 0.8 * spec.eps, (len(dirs), len(fixed)))
    out = []
    for delta in deltas:
        pts = np.zeros((len(dirs), spec.source_dim))
        pts[:, fixed] = taus
        if spec.source_bounded:
            pts[:, free] = (1.0 - delta) * dirs
        else:
            radius = np.sqrt((1.0 - delta) ** 2 - np.sum(taus ** 2, axis=-1))
            pts[:, free] = dirs * radius[:, None]
        out.append(pts)
    return np.stack(out)


def scmap_check(spec: ScMapSpec, radii=RAY_RADII, n_dirs: int = 24, slope_tol: float = 0.1) -> ScMapVerdict:
    """Check Psi^* rho_target = rho_source * h with h positive and bounded near the boundary."""
    if spec.chart == "euclidean":
        dirs = sphere_directions(spec.source_dim, n_dirs)
        scales = np.asarray(radii, dtype=float)
        pts = scales[:, None, None] * dirs[None]
        src = ex.japanese_bracket(pts) ** -1.0
        img = spec(pts)
        tgt = ex.japanese_bracket(img) ** -1.0
        steps = 1.0 / scales
    elif spec.chart == "ball":
        scales = np.array([1e-3, 1e-4, 1e-5])
        pts = _ball_samples(spec, scales, n_dirs)
        src = _ball_bdf(pts, spec.source_bounded)
        img = spec(pts)
        tgt = _ball_bdf(img, spec.target_bounded)
        steps = scales
    else:
        raise GeometryError(f"unknown chart {spec.chart!r}")
    h = tgt / src
    bad = np.argwhere(~(h > 0) | ~np.isfinite(h))
    if bad.size:
        i, j = bad[0]
        return ScMapVerdict(False, float(np.nanmin(h)), float(np.nanmax(h)), float("inf"), float("nan"),
                            pts[i, j].tolist(), "h is not positive")
    logs = np.log(steps)
    slopes = np.polyfit(logs, np.log(h), 1)[0]
    jac = spec.jacobian(pts)
    jnorm = np.linalg.norm(jac.reshape(jac.shape[:2] + (-1,)), axis=-1)
    jslopes = np.polyfit(logs, np.log(np.maximum(jnorm, 1e-300)), 1)[0]
    worst = int(np.argmax(np.abs(slopes)))
    # Euclidean: Jacobian entries must not grow (slope in 1/R >= -tol); ball: must stay bounded
    jworst = float(np.min(jslopes))
    ok = bool(np.max(np.abs(slopes)) < slope_tol and jworst > -slope_tol)
    witness = None if ok else pts[-1, worst].tolist()
    return ScMapVerdict(ok, float(h.min()), float(h.max()), float(np.max(np.abs(slopes))), jworst, witness,
                        "" if ok else "h or the Jacobian is unbounded along a ray")


# ---------------------------------------------------------------------------
# rank comparison for maps Y -> R^n of order one


@dataclass
class RayMap:
    """f: Y -> R^n with values and exact Jacobian, given in a chart of Y.

    ``chart`` is ``"euclidean"`` (collar x = omega/rho) or ``"ball"``
    (collar y = (1 - rho) omega).
    """

    value: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    dim: int
    chart: str = "euclidean"
    name: str = ""

    @classmethod
    def from_exprs(cls, comps: Sequence[ex.Expr], dim: int, name: str = "") -> "RayMap":
        spec = ScMapSpec(tuple(comps), dim)
        return cls(spec, spec.jacobian, dim, "euclidean", name)


def _collar_point(chart: str, rho: float, omega: np.ndarray) -> np.ndarray:
    return omega / rho if chart == "euclidean" else (1.0 - rho) * omega


@dataclass
class RankReport:
    rank_sc: int
    rank_tpsi: int
    singular_sc: np.ndarray
    singular_tpsi: np.ndarray

    @property
    def equal(self) -> bool:
        return self.rank_sc == self.rank_tpsi


def _rank(m: np.ndarray, tol: float = RANK_TOL) -> tuple[int, np.ndarray]:
    sv = np.linalg.svd(m, compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return 0, sv
    return int(np.sum(sv > tol * sv[0])), sv


def sc_matrix(f: RayMap, omega: np.ndarray, radii=RAY_RADII) -> np.ndarray:
    """Boundary value of [-h | d_z h] with h = rho f, from the exact Jacobian."""
    omega = np.asarray(omega, dtype=float)
    basis = tangent_basis(omega)

    def block(r):
        rho = 1.0 / r
        p = _collar_point(f.chart, rho, omega)
        val = f.value(p)
        jac = f.jacobian(p)
        if f.chart == "euclidean":
            dz = jac @ basis
        else:
            dz = rho * (1.0 - rho) * (jac @ basis)
        return np.column_stack([-rho * val, dz])

    lim, _ = ray_limit(block, radii)
    return lim


def tpsi_matrix(f: RayMap, omega: np.ndarray, delta: float = 1e-3, step: float = 1e-3) -> np.ndarray:
    """Differential of iota o f at the boundary point, by finite differences only."""
    omega = np.asarray(omega, dtype=float)
    basis = tangent_basis(omega)

    def psi(rho, z):
        w = omega + basis @ z
        w = w / np.linalg.norm(w)
        p = _collar_point(f.chart, rho, w)
        return iota(f.value(p))

    k = np.arange(1, 6)
    rhos = k * delta
    zero = np.zeros(basis.shape[1])
    samples = np.array([psi(r, zero) for r in rhos])
    # derivative at rho = 0 of the interpolating polynomial through (k delta, psi)
    vander = np.vander(rhos, len(rhos), increasing=True)
    coeffs = np.linalg.solve(vander, samples)
    d_rho = coeffs[1]
    cols = [d_rho]
    for j in range(basis.shape[1]):
        e = np.zeros(basis.shape[1])
        e[j] = step
        ders = []
        for r in rhos[:3]:
            ders.append((-psi(r, 2 * e) + 8 * psi(r, e) - 8 * psi(r, -e) + psi(r, -2 * e)) / (12 * step))
        lim, _ = richardson(ders, rhos[:3])
        cols.append(lim)
    return np.column_stack(cols)


def rank_compare(f: RayMap, omega, min_h: float = 1e-6) -> RankReport:
    """Compare the rank of the sc-differential block matrix with that of T(iota o f)."""
    omega = np.asarray(omega, dtype=float)
    omega = omega / np.linalg.norm(omega)
    m = sc_matrix(f, omega)
    if np.linalg.norm(m[:, 0]) < min_h:
        raise PreconditionError(f"rho|f| tends to zero along direction {omega.tolist()}")
    t = tpsi_matrix(f, omega)
    r1, s1 = _rank(m)
    r2, s2 = _rank(t)
    return RankReport(r1, r2, s1, s2)


def iota_inv_map(d: int) -> RayMap:
    """f = iota^{-1} on the ball, valid in the collar |y| >= 2/3."""

    def value(y):
        s = np.linalg.norm(y, axis=-1, keepdims=True)
        return y / (s * (1.0 - s))

    def jacobian(y):
        y = np.asarray(y, float)
        s = float(np.linalg.norm(y))
        u = y / s
        g = 1.0 / (s * (1.0 - s))
        dg = -(1.0 - 2.0 * s) / (s * (1.0 - s)) ** 2
        return g * np.eye(d) + dg * np.outer(y, u)

    return RayMap(value, jacobian, d, "ball", "iota_inv")


# ---------------------------------------------------------------------------
# compactified cotangent points and contact forms


@dataclass(frozen=True)
class CompactPoint:
    """(rho_X, base, rho_Xi, fiber): base is x or a unit x-hat, fiber is xi or a unit xi-hat."""

    face: str
    rho_x: float
    base: tuple
    rho_xi: float
    fiber: tuple

    def __post_init__(self):
        if self.face not in FACES:
            raise GeometryError(f"unknown face {self.face!r}")
        at_e = self.face in ("e", "psie")
        at_psi = self.face in ("psi", "psie")
        if (self.rho_x == 0) != at_e or (self.rho_xi == 0) != at_psi:
            raise GeometryError("face tag inconsistent with the vanishing bdfs")
        if at_e and abs(np.linalg.norm(self.base) - 1) > 1e-9:
            raise GeometryError("base direction must be a unit vector on the e-face")
        if at_psi and abs(np.linalg.norm(self.fiber) - 1) > 1e-9:
            raise GeometryError("fiber direction must be a unit vector on the psi-face")

    @classmethod
    def from_euclidean(cls, x, xi) -> "CompactPoint":
        x = tuple(float(v) for v in x)
        xi = tuple(float(v) for v in xi)
        return cls("interior", 1.0 / float(ex.japanese_bracket(np.array(x))), x,
                   1.0 / float(ex.japanese_bracket(np.array(xi))), xi)

    def array(self) -> np.ndarray:
        return np.concatenate([[self.rho_x], self.base, [self.rho_xi], self.fiber])

    def compactified(self) -> tuple[np.ndarray, np.ndarray]:
        """Both factors in the closed unit ball."""
        b = np.asarray(self.base) if self.rho_x == 0 else iota(np.asarray(self.base))
        f = np.asarray(self.fiber) if self.rho_xi == 0 else iota(np.asarray(self.fiber))
        return b, f


@dataclass(frozen=True)
class TangentSample:
    point: CompactPoint
    d_base: tuple
    d_fiber: tuple
    d_rho: float = 0.0
    d_tau: float = 0.0
    tau: float = 1.0
    chart: int = 1
    """Blow-up chart: +1 for tau = rho_Xi/rho_X, -1 for tau = rho_X/rho_Xi."""


def blowup_chart(rho_x: float, rho_xi: float) -> tuple[int, float, float]:
    """Chart selection by the larger bdf: returns (chart sign, rho, tau)."""
    if rho_x >= rho_xi:
        return 1, rho_x, rho_xi / rho_x
    return -1, rho_xi, rho_x / rho_xi


def contact_eval(form: str, sample: TangentSample) -> float:
    p = sample.point
    base = np.asarray(p.base)
    fiber = np.asarray(p.fiber)
    db = np.asarray(sample.d_base)
    df = np.asarray(sample.d_fiber)
    if form == "alpha_psi":
        if p.face not in ("psi", "psie"):
            raise GeometryError("alpha_psi needs a psi-face sample")
        return float(fiber @ db)
    if form == "alpha_e":
        if p.face not in ("e", "psie"):
            raise GeometryError("alpha_e needs an e-face sample")
        return float(-base @ df)
    if form == "sc_alpha_psi":
        if p.face != "interior":
            raise GeometryError("sc_alpha_psi is evaluated in the Euclidean chart")
        return float(fiber @ db)
    if form == "sc_alpha_e":
        if p.face != "interior":
            raise GeometryError("sc_alpha_e is evaluated in the Euclidean chart")
        return float(-base @ df)
    if form == "alpha_psie":
        if p.face != "psie":
            raise GeometryError("alpha_psie needs a corner sample in blow-up coordinates")
        if sample.tau <= 0:
            raise GeometryError("tau must be positive on the interior of the front face")
        return float(0.5 * (fiber @ db - base @ df + sample.chart * (base @ fiber) * sample.d_tau / sample.tau))
    raise GeometryError(f"unknown form {form!r}")
