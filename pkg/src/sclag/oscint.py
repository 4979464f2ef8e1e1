"""Regularized oscillatory integrals, stationary phase and a localized-decay wavefront probe.

Integrals  I = int int e^{i phi(x,t)} a(x,t) f(x) m_eps(t) dt dx  are computed by
tensor Gauss-Legendre panels whose node counts resolve the sampled phase
frequencies.  Summation is pairwise (numpy) in a fixed order, so results are
bit-reproducible for a fixed configuration.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import expr as ex
from . import sgsymbols as sg
from .geometry import CompactPoint
from .sgsymbols import smooth_step

NODES_PER_PERIOD = 8
BLOCK_ENTRIES = 1 << 20
PANEL_NODES = 16
FLOOR = 1e-13
REGULAR_EXPONENT = 4.0
SINGULAR_EXPONENT = 1.5


class OscError(ValueError):
    pass


# ---------------------------------------------------------------------------
# regularizers


@dataclass(frozen=True)
class ChiProfile:
    """chi(u) = 1 on [0, flat], 0 beyond ``support``; C-infinity transition of the given kind."""

    kind: str = "exp"
    flat: float = 2.0
    support: float = 4.0

    def __post_init__(self):
        if self.kind not in ("exp", "tanh", "gaussian"):
            raise OscError(f"unknown profile kind {self.kind!r}")
        if not 0 < self.flat < self.support:
            raise OscError("need 0 < flat < support")

    def _u(self, u):
        return (np.asarray(u, float) - self.flat) / (self.support - self.flat)

    def value(self, u):
        w = self._u(u)
        if self.kind == "exp":
            return 1.0 - smooth_step(w)
        if self.kind == "tanh":
            return 1.0 - _tanh_step(w)
        return np.where(np.asarray(u) <= self.flat, 1.0, np.exp(-np.maximum(w, 0) ** 2 * 4))

    def derivative(self, u, order: int):
        w = self._u(u)
        scale = (self.support - self.flat) ** order
        if self.kind == "exp":
            return -smooth_step(w, order) / scale
        if self.kind == "tanh":
            return -_tanh_step(w, order) / scale
        v = np.maximum(w, 0)
        g = np.exp(-4 * v * v)
        d1 = -8 * v * g
        d2 = (-8 + 64 * v * v) * g
        out = d1 if order == 1 else d2
        return np.where(np.asarray(u) <= self.flat, 0.0, out) / scale

    def as_dict(self) -> dict:
        return {"kind": self.kind, "flat": self.flat, "support": self.support}


def _tanh_step(w, order: int = 0, h: float = 1e-4):
    """0.5 (1 + tanh((2w - 1) / (w (1 - w)))) on (0,1); derivatives by central differences."""

    def base(v):
        v = np.asarray(v, float)
        out = np.where(v >= 1, 1.0, 0.0)
        inside = (v > 0) & (v < 1)
        vi = np.where(inside, v, 0.5)
        val = 0.5 * (1 + np.tanh((2 * vi - 1) / (vi * (1 - vi))))
        return np.where(inside, val, out)

    if order == 0:
        return base(w)
    if order == 1:
        return (base(w + h) - base(w - h)) / (2 * h)
    if order == 2:
        return (base(w + h) - 2 * base(w) + base(w - h)) / (h * h)
    raise OscError("profile derivatives up to order 2")


@dataclass
class Regularizer:
    profile: ChiProfile
    eps: float
    checks: dict = field(default_factory=dict)

    def __call__(self, ts):
        return self.profile.value(self.eps * ex.japanese_bracket(np.asarray(ts, float)))

    @property
    def fiber_radius(self) -> float:
        """Largest |t| with m_eps(t) != 0."""
        return math.sqrt(max((self.profile.support / self.eps) ** 2 - 1.0, 0.0))


def _approx_one_constants(profile: ChiProfile, eps: float, n: int = 4000) -> list[float]:
    """sup |(rho d_rho)^k m_eps| for k = 1, 2 with rho = 1/<t> and m_eps = chi(eps/rho)."""
    rho = np.geomspace(1e-7, 1.0, n)
    u = eps / rho
    c1 = profile.derivative(u, 1)
    c2 = profile.derivative(u, 2)
    k1 = np.abs(u * c1)
    k2 = np.abs(u * c1 + u * u * c2)
    return [float(k1.max()), float(k2.max())]


def make_regularizer(profile: ChiProfile, eps: float, eps_check: Sequence[float] = (0.5, 0.1, 0.02, 0.004)) -> Regularizer:
    """m_eps(t) = chi(eps <t>) with checks of the uniform symbol bounds and pointwise convergence."""
    if eps <= 0:
        raise OscError("eps must be positive")
    u = np.linspace(0, 1e4, 200001)
    vals = profile.value(u)
    if np.any(np.abs(vals[u <= profile.flat * 0.999] - 1.0) > 0):
        raise OscError("chi must equal 1 near 0")
    if np.any(vals[u >= profile.support] != 0) or profile.kind == "gaussian":
        tail = u[vals != 0].max()
        raise OscError(f"chi is not compactly supported (nonzero up to u = {tail:.3g})")
    consts = [_approx_one_constants(profile, e) for e in eps_check]
    spread = [max(c[k] for c in consts) / max(min(c[k] for c in consts), 1e-300) for k in range(2)]
    if max(spread) > 1.5:
        raise OscError(f"derivative bounds are not uniform in eps (spread {max(spread):.3g})")
    pts = np.array([[0.0], [1.0], [10.0], [100.0]])
    conv = [float(np.max(np.abs(profile.value(e * ex.japanese_bracket(pts)) - 1))) for e in (1e-3, 1e-5)]
    if conv[-1] > 0:
        raise OscError("m_eps does not tend to 1 at fixed points")
    checks = {"bound_constants": max(consts), "uniformity_spread": spread, "pointwise_deviation": conv}
    return Regularizer(profile, float(eps), checks)


# ---------------------------------------------------------------------------
# test densities and quadrature


@dataclass
class TestDensity:
    """f(x) = window(x) e^{-i k.x}; the window is negligible outside the box center +- radius."""

    window: Callable
    center: np.ndarray
    radius: np.ndarray
    frequency: np.ndarray

    @classmethod
    def from_expr(cls, g: ex.Expr, space: ex.VarSpace, center, radius, frequency=None) -> "TestDensity":
        zero_t = np.zeros(space.s)

        def window(xs):
            return np.broadcast_to(ex.evaluate(g, xs, zero_t), np.shape(xs)[:-1])

        d = space.d
        k = np.zeros(d) if frequency is None else np.asarray(frequency, float)
        return cls(window, np.broadcast_to(np.asarray(center, float), (d,)).copy(),
                   np.broadcast_to(np.asarray(radius, float), (d,)).copy(), k)

    @classmethod
    def gaussian(cls, center, width, radius_factor: float = 9.0, frequency=None) -> "TestDensity":
        c = np.atleast_1d(np.asarray(center, float))
        w = float(width)

        def window(xs):
            r2 = np.sum((np.asarray(xs) - c) ** 2, axis=-1)
            return np.exp(-r2 / (2 * w * w))

        k = np.zeros_like(c) if frequency is None else np.asarray(frequency, float)
        return cls(window, c, np.full_like(c, radius_factor * w), k)

    def __call__(self, xs):
        xs = np.asarray(xs, float)
        return self.window(xs) * np.exp(-1j * (xs @ self.frequency))


def compact_bump(r2):
    """exp(1 - 1/(1 - r^2)) for r < 1, else 0."""
    r2 = np.asarray(r2, float)
    out = np.zeros_like(r2)
    inside = r2 < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
    return out


@dataclass
class QuadratureConfig:
    eps_list: tuple = (0.25, 0.125)
    tolerance: float = 1e-6
    min_nodes: int = 32
    max_nodes: int = 200000
    refine: float = 1.5
    fiber_box: tuple | None = None
    x_chunk: int = 4096
    threads: int | None = None
    max_evaluations: float = 2e8

    def __post_init__(self):
        eps = list(self.eps_list)
        if any(b >= a for a, b in zip(eps, eps[1:])) or any(e <= 0 for e in eps):
            raise OscError("eps list must be strictly decreasing and positive")


def gauss_legendre_panels(lo: float, hi: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    panels = max(1, math.ceil(n / PANEL_NODES))
    gx, gw = np.polynomial.legendre.leggauss(PANEL_NODES)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
    weights = (half[:, None] * gw[None, :]).ravel()
    return nodes, weights


def _tensor(nodes_w: Sequence[tuple]) -> tuple[np.ndarray, np.ndarray]:
    grids = np.meshgrid(*[n for n, _ in nodes_w], indexing="ij")
    wgrids = np.meshgrid(*[w for _, w in nodes_w], indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    wts = np.prod(np.stack([w.ravel() for w in wgrids], axis=-1), axis=-1)
    return pts, wts


def _frequency_bounds(phase, lo_x, hi_x, lo_t, hi_t, k, n: int = 4096, seed: int = 0):
    """Sampled max |d phase| per axis (x axes include the density frequency)."""
    rng = np.random.default_rng(seed)
    d, s = len(lo_x), len(lo_t)
    xs = lo_x + (hi_x - lo_x) * rng.random((n, d))
    ts = lo_t + (hi_t - lo_t) * rng.random((n, s))
    corners_x = np.array(np.meshgrid(*zip(lo_x, hi_x))).reshape(d, -1).T
    corners_t = np.array(np.meshgrid(*zip(lo_t, hi_t))).reshape(s, -1).T
    cx = np.repeat(corners_x, len(corners_t), axis=0)
    ct = np.tile(corners_t, (len(corners_x), 1))
    xs = np.vstack([xs, cx])
    ts = np.vstack([ts, ct])
    ok = phase.accept(xs, ts)
    xs, ts = xs[ok], ts[ok]
    gx = np.abs(phase.grad_x(xs, ts) - k)
    gt = np.abs(phase.grad_t(xs, ts))
    return gx.max(axis=0), gt.max(axis=0)


def _node_count(length: float, freq: float, factor: float, cfg: QuadratureConfig) -> int:
    n = NODES_PER_PERIOD * length * freq / (2 * math.pi)
    n = max(cfg.min_nodes, int(math.ceil(n * factor)))
    if n > cfg.max_nodes:
        raise OscError(f"oscillation needs {n} nodes on one axis (limit {cfg.max_nodes})")
    return n


@dataclass
class OscResult:
    value: complex
    error: float
    per_eps: list
    nodes: list
    evaluations: int
    converged: bool

    def summary(self) -> dict:
        return {"value": [self.value.real, self.value.imag], "error": self.error, "converged": self.converged,
                "per_eps": [[v.real, v.imag] for v in self.per_eps], "nodes": self.nodes,
                "evaluations": self.evaluations}


def _amplitude_values(a, xs, ts):
    if isinstance(a, sg.Amplitude):
        return ex.evaluate(a.expr, xs, ts)
    return a(xs, ts)


def _threads(cfg: QuadratureConfig) -> int:
    if cfg.threads:
        return int(cfg.threads)
    env = os.environ.get("SCLAG_THREADS")
    return int(env) if env else 1


def _integrate_once(phase, a, f: TestDensity, reg: Regularizer | None, cfg: QuadratureConfig, factor: float,
                    localizer: Callable | None = None):
    d, s = phase.space.d, phase.space.s
    lo_x = f.center - f.radius
    hi_x = f.center + f.radius
    if cfg.fiber_box is not None:
        lo_t = np.broadcast_to(np.asarray(cfg.fiber_box[0], float), (s,)).copy()
        hi_t = np.broadcast_to(np.asarray(cfg.fiber_box[1], float), (s,)).copy()
    elif reg is not None:
        lo_t, hi_t = -np.full(s, reg.fiber_radius), np.full(s, reg.fiber_radius)
    else:
        raise OscError("need a regularizer or an explicit fiber box")
    if reg is not None:
        r = reg.fiber_radius
        lo_t, hi_t = np.maximum(lo_t, -r), np.minimum(hi_t, r)
    fx, ft = _frequency_bounds(phase, lo_x, hi_x, lo_t, hi_t, f.frequency)
    nx = [_node_count(hi_x[i] - lo_x[i], fx[i], factor, cfg) for i in range(d)]
    nt = [_node_count(hi_t[j] - lo_t[j], ft[j], factor, cfg) for j in range(s)]
    xs_n, wx = _tensor([gauss_legendre_panels(lo_x[i], hi_x[i], nx[i]) for i in range(d)])
    ts_n, wt = _tensor([gauss_legendre_panels(lo_t[j], hi_t[j], nt[j]) for j in range(s)])
    evaluations = len(xs_n) * len(ts_n)
    if evaluations > cfg.max_evaluations:
        raise OscError(f"quadrature needs {evaluations:.3g} evaluations (limit {cfg.max_evaluations:.3g})")
    mt = reg(ts_n) if reg is not None else np.ones(len(ts_n))
    keep_t = mt != 0
    ts_n, wt, mt = ts_n[keep_t], wt[keep_t], mt[keep_t]
    fvals = f(xs_n)
    keep_x = fvals != 0
    xs_n, wx, fvals = xs_n[keep_x], wx[keep_x], fvals[keep_x]
    chunk = max(1, min(cfg.x_chunk, BLOCK_ENTRIES // max(len(ts_n), 1)))
    starts = list(range(0, len(xs_n), chunk))

    def block(start):
        xb = xs_n[start:start + chunk]
        X = xb[:, None, :]
        T = ts_n[None, :, :]
        ph = np.broadcast_to(phase.value(X, T), (len(xb), len(ts_n)))
        am = np.broadcast_to(_amplitude_values(a, X, T), ph.shape)
        integrand = np.exp(1j * ph) * am * mt[None, :]
        if localizer is not None:
            integrand = integrand * localizer(X, T)
        acc = phase.accept(X, T)
        integrand = np.where(acc, integrand, 0)
        inner = np.sum(integrand * wt[None, :], axis=1)
        return np.sum(inner * fvals[start:start + chunk] * wx[start:start + chunk])

    threads = _threads(cfg)
    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(block, starts))
    else:
        parts = [block(st) for st in starts]
    return complex(np.sum(np.array(parts))), nx + nt, evaluations


def evaluate(phase, a, f: TestDensity, cfg: QuadratureConfig | None = None,
             profile: ChiProfile | None = None, localizer: Callable | None = None) -> OscResult:
    """Regularized integral with an eps sweep and one node refinement as error estimate."""
    cfg = cfg or QuadratureConfig()
    profile = profile or ChiProfile()
    per_eps, nodes, total = [], [], 0
    for eps in cfg.eps_list:
        reg = make_regularizer(profile, eps) if cfg.fiber_box is None else Regularizer(profile, eps)
        val, n, ev = _integrate_once(phase, a, f, reg, cfg, 1.0, localizer)
        per_eps.append(val)
        nodes.append(n)
        total += ev
    fine, n_fine, ev = _integrate_once(phase, a, f, reg, cfg, cfg.refine, localizer)
    total += ev
    spread = abs(per_eps[-1] - per_eps[-2]) if len(per_eps) > 1 else 0.0
    err = spread + abs(fine - per_eps[-1])
    converged = err <= cfg.tolerance * (1 + abs(fine))
    return OscResult(fine, float(err), per_eps, nodes + [n_fine], total, bool(converged))


def fiber_quadrature(fn: Callable, lo: float, hi: float, freq: float, min_nodes: int = 64) -> complex:
    """1-D Gauss-Legendre integral of a complex function with a known frequency bound."""
    n = max(min_nodes, int(math.ceil(NODES_PER_PERIOD * (hi - lo) * freq / (2 * math.pi))))
    nodes, w = gauss_legendre_panels(lo, hi, n)
    return complex(np.sum(fn(nodes) * w))


# ---------------------------------------------------------------------------
# stationary phase


@dataclass
class StationaryPhase:
    value: complex
    signature: int
    det: float
    maslov: complex

    def summary(self) -> dict:
        return {"value": [self.value.real, self.value.imag], "signature": self.signature, "det": self.det}


def stationary_phase_eval(hessian: np.ndarray, amplitude_value: complex, phase_value: float = 0.0,
                          lam: float = 1.0, weights: tuple | None = None) -> StationaryPhase:
    """Leading term |det(lam H)/2pi|^{-1/2} e^{i pi sgn/4} e^{i lam phi0} a(p).

    ``weights`` = (rho_X, rho_Y, r) multiplies by rho_X^{r/2} rho_Y^{-r/2} (boundary form).
    """
    h = np.atleast_2d(np.asarray(hessian, float)) * lam
    w = np.linalg.eigvalsh(0.5 * (h + h.T))
    if np.any(np.abs(w) < 1e-12 * max(1.0, np.max(np.abs(w)))):
        raise OscError("degenerate Hessian")
    sig = int(np.sum(w > 0) - np.sum(w < 0))
    det = float(np.prod(w))
    maslov = complex(np.exp(1j * math.pi * sig / 4))
    val = abs(det / (2 * math.pi) ** len(w)) ** -0.5 * maslov * np.exp(1j * lam * phase_value) * amplitude_value
    if weights is not None:
        rho_x, rho_y, r = weights
        val *= rho_x ** (r / 2) * rho_y ** (-r / 2)
    return StationaryPhase(complex(val), sig, det, maslov)


def gaussian_model_exact(lam: float, b: float = 1.0) -> complex:
    """int e^{i lam t^2/2} e^{-b t^2} dt in closed form."""
    return complex(np.sqrt(math.pi / (b - 0.5j * lam)))


def gaussian_model_quadrature(lam: float, b: float = 1.0) -> complex:
    half = math.sqrt(40.0 / b)
    return fiber_quadrature(lambda t: np.exp(0.5j * lam * t * t - b * t * t), -half, half, abs(lam) * half)


# ---------------------------------------------------------------------------
# wavefront probe


@dataclass
class WfProbeResult:
    probe: CompactPoint
    exponent: float
    verdict: str
    magnitudes: list
    scales: list
    fit_residual: float

    def __post_init__(self):
        if self.verdict == "singular" and not self.exponent <= SINGULAR_EXPONENT:
            raise OscError("singular verdict needs a small decay exponent")

    def summary(self) -> dict:
        return {"face": self.probe.face, "base": list(self.probe.base), "fiber": list(self.probe.fiber),
                "exponent": self.exponent if math.isfinite(self.exponent) else "inf",
                "verdict": self.verdict, "magnitudes": self.magnitudes, "scales": self.scales}


def _fit_exponent(scales, mags, floor: float = FLOOR):
    mags = np.asarray(mags, float)
    if np.all(mags < floor):
        return math.inf, 0.0
    if mags[-1] < floor:
        return math.inf, 0.0
    slope, intercept = np.polyfit(np.log(scales), np.log(mags), 1)
    pred = slope * np.log(scales) + intercept
    resid = float(np.max(np.abs(pred - np.log(mags))))
    return float(-slope), resid


@dataclass
class ProbeConfig:
    scales: tuple = (32.0, 64.0, 128.0, 256.0)
    e_scales: tuple = (32.0, 64.0, 128.0, 256.0)
    window_radius: float = 0.5
    cone_ratio: float = 0.25
    sigma_psi: float = 0.035
    sigma_e: float = 0.06
    fit_residual_max: float = 2.0
    box_samples: int = 200000


def _phase_space_localizer(phase, lam: float, xi: np.ndarray, sigma: float):
    """Gaussian in g = grad_x phi / lam - xi, cut to zero at |g| = 8 sigma.

    Where the localizer vanishes the integrand is non-stationary in x with
    gradient at least 6 lam sigma, so the discarded part decays rapidly in lam.
    """

    def loc(X, T):
        g = phase.grad_x(X, T) / lam - xi
        v = np.sqrt(np.sum(g * g, axis=-1)) / sigma
        return np.exp(-0.5 * v * v) * (1.0 - smooth_step((v - 6.0) / 2.0))

    return loc


def wf_probe(phase, a, probe: CompactPoint, cfg: ProbeConfig | None = None,
             quad: QuadratureConfig | None = None, profile: ChiProfile | None = None) -> WfProbeResult:
    """Decay of a localized transform of I_phi(a) along the probe direction.

    psi face: window of radius r at the base point, frequency lam * xi_hat.
    e face:   window of radius cone_ratio * lam at lam * x_hat, fixed frequency xi,
              normalized by lam^{-d}.
    """
    cfg = cfg or ProbeConfig()
    quad = quad or QuadratureConfig(eps_list=(0.001,), refine=1.0)
    d = phase.space.d
    mags = []
    if probe.face == "psi":
        x0 = np.asarray(probe.base, float)
        xi = np.asarray(probe.fiber, float)
        scales = list(cfg.scales)
        r = cfg.window_radius
        for lam in scales:
            win = TestDensity(lambda xs, x0=x0: compact_bump(np.sum((xs - x0) ** 2, -1) / r ** 2),
                              x0, np.full(d, r), lam * xi)
            loc = _phase_space_localizer(phase, lam, xi, cfg.sigma_psi)
            mags.append(abs(_probe_integral(phase, a, win, quad, profile, loc, lam * (1 + np.linalg.norm(xi)), cfg)))
    elif probe.face == "e":
        w0 = np.asarray(probe.base, float)
        xi0 = np.asarray(probe.fiber, float)
        scales = list(cfg.e_scales)
        for lam in scales:
            rr = cfg.cone_ratio * lam
            c = lam * w0
            win = TestDensity(lambda xs, c=c, rr=rr: compact_bump(np.sum((xs - c) ** 2, -1) / rr ** 2),
                              c, np.full(d, rr), xi0)
            loc = _phase_space_localizer(phase, 1.0, xi0, cfg.sigma_e)
            val = _probe_integral(phase, a, win, quad, profile, loc, 1 + np.linalg.norm(xi0), cfg)
            mags.append(abs(val) * lam ** (-d))
    else:
        raise OscError("probe must lie on the psi or e face")
    exponent, resid = _fit_exponent(scales, mags)
    if exponent >= REGULAR_EXPONENT:
        verdict = "regular"
    elif exponent <= SINGULAR_EXPONENT and resid <= cfg.fit_residual_max:
        verdict = "singular"
    else:
        verdict = "inconclusive"
    return WfProbeResult(probe, exponent, verdict, [float(m) for m in mags], scales, resid)


def _probe_integral(phase, a, win: TestDensity, quad: QuadratureConfig, profile, loc, fiber_scale: float,
                    cfg: ProbeConfig) -> complex:
    box = _localized_fiber_box(phase, win, loc, fiber_scale, cfg.box_samples)
    if box is None:
        return 0.0
    qc = QuadratureConfig(eps_list=quad.eps_list, tolerance=quad.tolerance, min_nodes=quad.min_nodes,
                          max_nodes=quad.max_nodes, refine=quad.refine, fiber_box=box,
                          x_chunk=quad.x_chunk, threads=quad.threads, max_evaluations=quad.max_evaluations)
    reg = Regularizer(profile or ChiProfile(), qc.eps_list[-1])
    val, _, _ = _integrate_once(phase, a, win, reg, qc, 1.0, loc)
    return val


def _localized_fiber_box(phase, win: TestDensity, loc, fiber_scale: float, n: int, seed: int = 1):
    """Fiber box containing the localizer support over the window, found by uniform sampling."""
    rng = np.random.default_rng(seed)
    s = phase.space.s
    xs = win.center + win.radius * (2 * rng.random((n, len(win.center))) - 1)
    half = 2.0 * fiber_scale + 1.0
    ts = half * (2 * rng.random((n, s)) - 1)
    vals = loc(xs, ts) * phase.accept(xs, ts)
    hit = ts[vals > 0]
    if len(hit) == 0:
        return None
    lo, hi = hit.min(axis=0), hit.max(axis=0)
    pad = 0.1 * (hi - lo) + 0.5
    return np.maximum(lo - pad, -half), np.minimum(hi + pad, half)
