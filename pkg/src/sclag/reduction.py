"""Phase surgeries with amplitude transport, order bookkeeping and the equivalence decision.

A representation is u = factor * int e^{i phi} a dtheta with a unit-modulus
``factor`` carrying Maslov phases, so amplitudes stay real-valued.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy import integrate

from . import expr as ex
from . import sgsymbols as sg
from .phase import (ConeDomain, CriticalSample, FaceModel, PhaseError, PhaseFunction,
                    critical_solve, newton, sc_hessian, signature_rank, _lambda)

CUTOFF_WIDTH = Fraction(1, 10)
SPLIT_COND_MAX = 1e8


class SurgeryError(ValueError):
    pass


# ---------------------------------------------------------------------------
# orders


@dataclass(frozen=True)
class OrderRecord:
    m_e: Fraction
    m_psi: Fraction
    s: int
    e: int

    def __post_init__(self):
        object.__setattr__(self, "m_e", Fraction(self.m_e))
        object.__setattr__(self, "m_psi", Fraction(self.m_psi))

    @property
    def mu_e(self) -> Fraction:
        return self.m_e - Fraction(self.s, 2) + Fraction(self.e, 2)

    @property
    def mu_psi(self) -> Fraction:
        return self.m_psi + Fraction(self.s, 2) + Fraction(self.e, 2)

    def as_dict(self) -> dict:
        f = ex.fraction_str
        return {"m_e": f(self.m_e), "m_psi": f(self.m_psi), "s": self.s, "e": self.e,
                "mu_e": f(self.mu_e), "mu_psi": f(self.mu_psi)}


@dataclass(frozen=True)
class LagrangianOrder:
    m_psi: Fraction
    m_e: Fraction
    mu_psi: Fraction
    mu_e: Fraction

    @property
    def legendrian_order(self) -> Fraction:
        """e-order with the opposite sign convention used for Legendrian distributions."""
        return -self.m_e

    def as_dict(self) -> dict:
        f = ex.fraction_str
        return {"m_psi": f(self.m_psi), "m_e": f(self.m_e), "mu_psi": f(self.mu_psi), "mu_e": f(self.mu_e),
                "legendrian_order": f(self.legendrian_order)}


def order_normalize(m_e, m_psi, d: int, s: int, e: int) -> LagrangianOrder:
    """Lagrangian orders of int e^{i phi} a for an amplitude of order (m_e, m_psi)."""
    rec = OrderRecord(m_e, m_psi, s, e)
    q = Fraction(d, 4)
    return LagrangianOrder(rec.mu_psi - q, rec.mu_e + q, rec.mu_psi, rec.mu_e)


def amplitude_orders(lag_m_psi, lag_m_e, d: int, s: int, e: int) -> tuple[Fraction, Fraction]:
    """Inverse bookkeeping: amplitude (m_psi, m_e) realising given Lagrangian orders with s fibers, excess e."""
    q = Fraction(d, 4)
    return (Fraction(lag_m_psi) + q - Fraction(s, 2) - Fraction(e, 2),
            Fraction(lag_m_e) - q + Fraction(s, 2) - Fraction(e, 2))


# ---------------------------------------------------------------------------
# representations


@dataclass
class NumericAmplitude:
    fn: Callable
    space: ex.VarSpace
    order: sg.SGOrder
    convention: str = "scalar"

    def __call__(self, xs, ts):
        return self.fn(xs, ts)


@dataclass
class ReducedPhase:
    """phi_red(x, t') = phi(x, t', t''(x, t')) with t'' solved by Newton."""

    parent: PhaseFunction
    keep: tuple
    solve: tuple
    space: ex.VarSpace
    seed: np.ndarray
    domain: None = None

    def full_fiber(self, xs, ts):
        xs = np.asarray(xs, float)
        ts = np.asarray(ts, float)
        shape = np.broadcast_shapes(xs.shape[:-1], ts.shape[:-1])
        xs = np.broadcast_to(xs, shape + xs.shape[-1:])
        ts = np.broadcast_to(ts, shape + ts.shape[-1:])
        full = np.zeros(shape + (self.parent.space.s,))
        full[..., list(self.keep)] = ts
        full[..., list(self.solve)] = self.seed
        g_exprs = [self.parent.grad_t_exprs[j] for j in self.solve]
        h_exprs = [[ex.diff(g, ex.t(k + 1)) for k in self.solve] for g in g_exprs]
        for _ in range(60):
            g = np.stack([np.broadcast_to(ex.evaluate(e, xs, full), shape) for e in g_exprs], -1)
            if np.max(np.abs(g)) < 1e-13:
                break
            h = np.stack([np.stack([np.broadcast_to(ex.evaluate(e, xs, full), shape) for e in row], -1)
                          for row in h_exprs], -2)
            step = np.linalg.solve(h, g[..., None])[..., 0]
            full[..., list(self.solve)] -= step
        else:
            raise SurgeryError("implicit solve for the reduced fiber variables did not converge")
        return xs, full

    def value(self, xs, ts):
        xs, full = self.full_fiber(xs, ts)
        return self.parent.value(xs, full)

    def grad_x(self, xs, ts):
        xs, full = self.full_fiber(xs, ts)
        return self.parent.grad_x(xs, full)

    def grad_t(self, xs, ts):
        xs, full = self.full_fiber(xs, ts)
        return self.parent.grad_t(xs, full)[..., list(self.keep)]

    def accept(self, xs, ts):
        return np.ones(np.broadcast_shapes(np.shape(xs)[:-1], np.shape(ts)[:-1]), bool)


@dataclass
class SurgeryResult:
    phase: object
    amplitude: object
    order: OrderRecord
    order_delta: tuple
    maslov_factor: complex
    log: list = field(default_factory=list)
    phase_shift: ex.Expr | None = None

    def __post_init__(self):
        if abs(abs(self.maslov_factor) - 1) > 1e-12:
            raise SurgeryError("Maslov factor must have unit modulus")

    def summary(self) -> dict:
        phase_text = ex.to_text(self.phase.expr) if isinstance(self.phase, PhaseFunction) else "numeric"
        return {"phase": phase_text, "order": self.order.as_dict(),
                "order_delta": [ex.fraction_str(v) for v in self.order_delta],
                "maslov_factor": [self.maslov_factor.real, self.maslov_factor.imag], "log": self.log}


def _as_amplitude(a, space: ex.VarSpace) -> sg.Amplitude:
    if isinstance(a, sg.Amplitude):
        return a
    return sg.Amplitude(ex.as_expr(a), space, sg.SGOrder(0, 0))


# ---------------------------------------------------------------------------
# surgeries


def add_smooth(phi: PhaseFunction, r: ex.Expr, a: sg.Amplitude | None = None, e: int = 0,
               check_boundary: bool = True) -> SurgeryResult:
    """phi + r for bounded classical r; the amplitude is carried with the phase shift e^{-ir}."""
    rep = sg.verify_order(r, sg.SGOrder(0, 0), depth=2, space=phi.space)
    if not rep.passes:
        raise SurgeryError("perturbation is not bounded (order (0,0) check failed)")
    new = PhaseFunction(ex.add(phi.expr, r), phi.space, phi.domain)
    log = ["added bounded perturbation"]
    if check_boundary:
        dist = boundary_lambda_distance(phi, new)
        if dist > 1e-9:
            raise SurgeryError(f"boundary Lagrangian moved by {dist:.3g}")
        log.append(f"boundary lambda samples unchanged (max distance {dist:.2e})")
    a = _as_amplitude(a if a is not None else ex.ONE, phi.space)
    order = OrderRecord(a.order.m_e, a.order.m_psi, phi.space.s, e)
    return SurgeryResult(new, a, order, (Fraction(0), Fraction(0)), 1 + 0j, log, ex.neg(r))


def boundary_lambda_distance(phi1: PhaseFunction, phi2: PhaseFunction, faces=("psi", "e", "psie"),
                             count: int = 16) -> float:
    """Max distance between boundary lambda samples of phi1 and the face set of phi2."""
    worst = 0.0
    cm = critical_solve(phi1, faces=faces, count=count)
    for sample in cm.samples:
        q = _lambda(FaceModel(phi1, sample.face), sample.z)
        worst = max(worst, lambda_set_distance(phi2, sample.face, q))
    return worst


def lambda_set_distance(phi: PhaseFunction, face: str, point, n_seeds: int = 12) -> float:
    """Distance from a face point to Lambda_phi, solving the critical equations over the same base."""
    model = FaceModel(phi, face)
    d, s = phi.space.d, phi.space.s
    base = np.asarray(point.base, float)
    rng = np.random.default_rng(3)
    best = math.inf
    fixed = _FixedBase(model, base)
    for k in range(n_seeds):
        f0 = rng.normal(size=s) * 2
        if phi.domain is not None:
            f0[[j - 1 for j in phi.domain.bounded]] *= 0.05
        z, res, _, ok = newton(fixed, np.concatenate([base, f0]))
        if not ok:
            continue
        q = _lambda(model, z)
        dist = float(np.linalg.norm(np.asarray(q.fiber) - np.asarray(point.fiber))
                     + abs(q.rho_xi - point.rho_xi))
        best = min(best, dist)
    return best


class _FixedBase(FaceModel):
    """Face system with the base coordinates frozen (Newton in the fiber only)."""

    def __init__(self, model: FaceModel, base):
        self.__dict__.update(model.__dict__)
        self._base = np.asarray(base, float)

    def normalize(self, z):
        z = FaceModel.normalize(self, z)
        z[: self.d] = self._base
        return z

    def projector(self, z):
        p = FaceModel.projector(self, z)
        p[: self.d, :] = 0
        p[:, : self.d] = 0
        return p


def _bracket_of(indices, s: int) -> ex.Expr:
    """(1 + sum_{j in indices} t_j^2)^(1/2) as an expression."""
    if len(indices) == s:
        return ex.jbt()
    inner = ex.add(ex.ONE, *(ex.power(ex.t(j), Fraction(2)) for j in indices))
    return ex.power(inner, Fraction(1, 2))


def _replace_fiber_brackets(e: ex.Expr, s_old: int) -> ex.Expr:
    if isinstance(e, ex.Bracket) and e.block == "t":
        return _bracket_of(range(1, s_old + 1), s_old + 1)
    if isinstance(e, (ex.Norm, ex.NormProfile)) and e.block == "t":
        raise SurgeryError("smooth fiber norms cannot be lifted to a larger fiber block")
    if isinstance(e, ex.Add):
        return ex.add(*(_replace_fiber_brackets(t, s_old) for t in e.terms))
    if isinstance(e, ex.Mul):
        return ex.mul(*(_replace_fiber_brackets(f, s_old) for f in e.factors))
    if isinstance(e, ex.Pow):
        return ex.power(_replace_fiber_brackets(e.base, s_old), e.exponent)
    if isinstance(e, ex.Func):
        return ex.func(e.name, _replace_fiber_brackets(e.arg, s_old))
    return e


def increase_fiber(phi: PhaseFunction, a: sg.Amplitude | None = None, sign: int = 1, e: int = 0) -> SurgeryResult:
    """psi = phi + sign <x> tau^2 / <theta> on the cone |tau| < eps <theta>.

    The lifted amplitude is a * (<x>/(pi <theta>))^(1/2) * g(tau/<theta>) with a
    Gaussian profile g, and Maslov factor e^{-i sign pi/4}, so that integrating
    out tau returns a to leading order.
    """
    if sign not in (1, -1):
        raise SurgeryError("sign must be +1 or -1")
    s = phi.space.s
    space = ex.VarSpace(phi.space.d, s + 1)
    tau = ex.t(s + 1)
    bracket = _bracket_of(range(1, s + 1), s + 1)
    base = _replace_fiber_brackets(phi.expr, s)
    quad = ex.mul(ex.Const(Fraction(sign)), ex.jbx(), ex.power(tau, Fraction(2)), ex.power(bracket, Fraction(-1)))
    psi = ex.add(base, quad)
    bounded = tuple(phi.domain.bounded) + (s + 1,) if phi.domain else (s + 1,)
    new_phi = PhaseFunction(psi, space, ConeDomain(bounded))
    a = _as_amplitude(a if a is not None else ex.ONE, phi.space)
    width = CUTOFF_WIDTH
    profile = ex.exp(ex.mul(ex.Const(-1 / width ** 2), ex.power(tau, Fraction(2)), ex.power(bracket, Fraction(-2))))
    scale = ex.power(ex.mul(ex.jbx(), ex.power(bracket, Fraction(-1))), Fraction(1, 2))
    lifted = ex.mul(_replace_fiber_brackets(a.expr, s), scale, profile)
    amp = NumericScaled(sg.Amplitude(lifted, space, a.order.shift(Fraction(1, 2), Fraction(-1, 2)), a.convention),
                        1 / math.sqrt(math.pi))
    order = OrderRecord(amp.order.m_e, amp.order.m_psi, s + 1, e)
    factor = complex(np.exp(-1j * sign * math.pi / 4))
    log = [f"added fiber variable t{s + 1} with quadratic form sign {sign:+d}"]
    return SurgeryResult(new_phi, amp, order, (Fraction(1, 2), Fraction(-1, 2)), factor, log)


@dataclass
class NumericScaled:
    """Symbolic amplitude times a real constant that is not rational."""

    base: sg.Amplitude
    constant: float

    @property
    def expr(self):
        return self.base.expr

    @property
    def space(self):
        return self.base.space

    @property
    def order(self):
        return self.base.order

    @property
    def convention(self):
        return self.base.convention

    def __call__(self, xs, ts):
        return self.constant * np.asarray(ex.evaluate(self.base.expr, xs, ts))


@dataclass
class FiberSplit:
    keep: tuple
    solve: tuple
    eigenvalues: np.ndarray
    signature: int
    condition: float


def choose_split(phi: PhaseFunction, p0: CriticalSample) -> FiberSplit:
    """Pivoted eigen-decomposition of the sc fiber Hessian picks the variables to eliminate."""
    rec = sc_hessian(phi, p0)
    if rec.rank == 0:
        raise SurgeryError("fiber Hessian has rank 0; nothing to reduce")
    w, v = np.linalg.eigh(rec.matrix)
    cut = 1e-8 * max(1.0, float(np.max(np.abs(w))))
    nonzero = [k for k in range(len(w)) if abs(w[k]) > cut]
    chosen = []
    for k in sorted(nonzero, key=lambda k: -abs(w[k])):
        weights = np.abs(v[:, k]).copy()
        weights[chosen] = -1
        chosen.append(int(np.argmax(weights)))
    solve = tuple(sorted(chosen))
    keep = tuple(j for j in range(phi.space.s) if j not in solve)
    block = rec.matrix[np.ix_(solve, solve)]
    cond = float(np.linalg.cond(block))
    if not np.isfinite(cond) or cond > SPLIT_COND_MAX:
        raise SurgeryError(f"split ill-conditioned (condition number {cond:.3g})")
    sig, _ = signature_rank(block)
    return FiberSplit(keep, solve, np.linalg.eigvalsh(block), sig, cond)


def _det_expr(m):
    n = len(m)
    if n == 1:
        return m[0][0]
    terms = []
    for perm in itertools.permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        terms.append(ex.mul(ex.Const(Fraction((-1) ** inv)), *(m[i][perm[i]] for i in range(n))))
    return ex.add(*terms)


def _constant_solution(phi: PhaseFunction, split: FiberSplit, p0: CriticalSample, n: int = 12):
    """t'' values if they do not depend on (x, t') on random samples, else None."""
    red = ReducedPhase(phi, split.keep, split.solve, ex.VarSpace(phi.space.d, max(1, len(split.keep))),
                       np.asarray(p0.z[phi.space.d:][list(split.solve)]))
    rng = np.random.default_rng(17)
    xs = rng.normal(size=(n, phi.space.d)) * 3
    ts = rng.normal(size=(n, len(split.keep))) * 3
    if phi.domain is not None:
        keep_domain = [split.keep.index(j - 1) for j in phi.domain.bounded if (j - 1) in split.keep]
        ts[:, keep_domain] *= 0.05
    try:
        _, full = red.full_fiber(xs, ts)
    except (SurgeryError, np.linalg.LinAlgError):
        return red, None
    vals = full[:, list(split.solve)]
    if np.max(np.abs(vals - vals[0])) < 1e-12:
        return red, vals[0]
    return red, None


def _reindex_fiber(e: ex.Expr, keep: tuple, values: dict) -> ex.Expr:
    mapping = {ex.t(j + 1): ex.Const(Fraction(values[j]).limit_denominator(10 ** 9)) for j in values}
    mapping.update({ex.t(j + 1): ex.t(k + 1) for k, j in enumerate(keep)})
    return ex.substitute(e, mapping)


def reduce_fiber(phi: PhaseFunction, a, p0: CriticalSample, e: int = 0) -> SurgeryResult:
    """Eliminate the non-degenerate fiber directions at p0 by stationary phase."""
    split = choose_split(phi, p0)
    r = len(split.solve)
    if not split.keep:
        raise SurgeryError("all fiber variables are non-degenerate; the reduced phase has no fiber")
    carried = 1.0
    if isinstance(a, NumericScaled):
        a, carried = a.base, a.constant
    a = _as_amplitude(a, phi.space)
    s_new = len(split.keep)
    space = ex.VarSpace(phi.space.d, s_new)
    red, const = _constant_solution(phi, split, p0)
    factor = complex(np.exp(1j * math.pi * split.signature / 4))
    order = OrderRecord(a.order.m_e - Fraction(r, 2), a.order.m_psi + Fraction(r, 2), s_new, e)
    log = [f"eliminated fiber variables {[j + 1 for j in split.solve]} (signature {split.signature:+d})"]
    if const is not None and not any(isinstance(n, (ex.Bracket, ex.Norm, ex.NormProfile))
                                     for n in _nodes(phi.expr) if getattr(n, "block", None) == "t"):
        values = {j: float(v) for j, v in zip(split.solve, const)}
        new_phi = PhaseFunction(_reindex_fiber(phi.expr, split.keep, values), space,
                                _reduced_domain(phi.domain, split))
        hess = [[ex.diff(ex.diff(phi.expr, ex.t(i + 1)), ex.t(j + 1)) for j in split.solve] for i in split.solve]
        det = _reindex_fiber(_det_expr(hess), split.keep, values)
        amp_expr = ex.mul(ex.power(ex.mul(ex.Const(Fraction(int(np.sign(np.prod(split.eigenvalues))))), det),
                                   Fraction(-1, 2)),
                          _reindex_fiber(a.expr, split.keep, values))
        base_amp = sg.Amplitude(amp_expr, space, sg.SGOrder(order.m_e, order.m_psi), a.convention)
        amp = NumericScaled(base_amp, carried * (2 * math.pi) ** (r / 2))
        log.append("reduced phase in closed form")
    else:
        red.space = space
        new_phi = red

        def b(xs, ts, red=red, hess_idx=split.solve):
            xs, full = red.full_fiber(xs, ts)
            h = np.stack([np.stack([np.broadcast_to(
                ex.evaluate(ex.diff(ex.diff(phi.expr, ex.t(i + 1)), ex.t(j + 1)), xs, full), xs.shape[:-1])
                for j in hess_idx], -1) for i in hess_idx], -2)
            return carried * (2 * math.pi) ** (r / 2) * np.abs(np.linalg.det(h)) ** -0.5 * np.broadcast_to(
                ex.evaluate(a.expr, xs, full), xs.shape[:-1])

        amp = NumericAmplitude(b, space, sg.SGOrder(order.m_e, order.m_psi), a.convention)
        log.append("reduced phase evaluated through the implicit function theorem")
    return SurgeryResult(new_phi, amp, order, (Fraction(-r, 2), Fraction(r, 2)), factor, log)


def _reduced_domain(domain, split: FiberSplit):
    if domain is None:
        return None
    kept = tuple(split.keep.index(j - 1) + 1 for j in domain.bounded if (j - 1) in split.keep)
    return ConeDomain(kept, domain.ratio) if kept else None


def _nodes(e: ex.Expr):
    stack = [e]
    while stack:
        n = stack.pop()
        yield n
        if isinstance(n, ex.Add):
            stack.extend(n.terms)
        elif isinstance(n, ex.Mul):
            stack.extend(n.factors)
        elif isinstance(n, ex.Pow):
            stack.append(n.base)
        elif isinstance(n, ex.Func):
            stack.append(n.arg)


def fibration_split(phi: PhaseFunction, n: int = 24) -> tuple:
    """Fiber indices (0-based) on which phi does not depend (checked symbolically and on samples)."""
    rng = np.random.default_rng(23)
    xs = rng.normal(size=(n, phi.space.d)) * 3
    ts = rng.normal(size=(n, phi.space.s)) * 3
    if phi.domain is not None:
        ts[:, [j - 1 for j in phi.domain.bounded]] *= 0.05
    free = []
    for j, g in enumerate(phi.grad_t_exprs):
        if ex.is_zero(g) or np.max(np.abs(np.broadcast_to(ex.evaluate(g, xs, ts), (n,)))) < 1e-14:
            free.append(j)
    return tuple(free)


def _drop_fiber(e: ex.Expr, drop: tuple, keep: tuple) -> ex.Expr:
    if any(isinstance(n, (ex.Bracket, ex.Norm, ex.NormProfile)) and n.block == "t" for n in _nodes(e)):
        raise SurgeryError("phase uses full-fiber brackets; cannot restrict to a sub-block")
    mapping = {ex.t(j + 1): ex.ZERO for j in drop}
    mapping.update({ex.t(j + 1): ex.t(k + 1) for k, j in enumerate(keep)})
    return ex.substitute(e, mapping)


def eliminate_excess(phi: PhaseFunction, a: sg.Amplitude, excess: int, quad_limit: int = 200) -> SurgeryResult:
    """Integrate the amplitude over the excess fibers on which phi is constant."""
    if excess <= 0:
        raise SurgeryError("phase has no excess")
    free = fibration_split(phi)
    if len(free) < excess:
        raise SurgeryError("fibration split not found on samples")
    drop = free[-excess:]
    keep = tuple(j for j in range(phi.space.s) if j not in drop)
    if not keep:
        raise SurgeryError("no fiber variables would remain")
    space = ex.VarSpace(phi.space.d, len(keep))
    new_phi = PhaseFunction(_drop_fiber(phi.expr, drop, keep), space, _reduced_domain(
        phi.domain, FiberSplit(keep, drop, np.zeros(0), 0, 1.0)))
    a = _as_amplitude(a, phi.space)
    limits = _fiber_limits(phi.domain, drop, keep)

    def b(xs, ts):
        xs = np.asarray(xs, float)
        ts = np.asarray(ts, float)
        shape = np.broadcast_shapes(xs.shape[:-1], ts.shape[:-1])
        xs = np.broadcast_to(xs, shape + xs.shape[-1:]).reshape(-1, xs.shape[-1])
        ts = np.broadcast_to(ts, shape + ts.shape[-1:]).reshape(-1, ts.shape[-1])
        out = np.empty(len(xs))
        for k in range(len(xs)):
            out[k] = _fiber_integral(a, xs[k], ts[k], drop, keep, limits, quad_limit)
        return out.reshape(shape)

    order = OrderRecord(a.order.m_e, a.order.m_psi + excess, len(keep), 0)
    amp = NumericAmplitude(b, space, sg.SGOrder(order.m_e, order.m_psi), a.convention)
    log = [f"integrated out fiber variables {[j + 1 for j in drop]}"]
    return SurgeryResult(new_phi, amp, order, (Fraction(0), Fraction(excess)), 1 + 0j, log)


def _fiber_limits(domain, drop, keep):
    def limits(t_keep):
        if domain is None:
            return -np.inf, np.inf
        bounded = [j - 1 for j in domain.bounded]
        rest = [t_keep[keep.index(j)] for j in keep if j not in bounded]
        lim = float(domain.ratio) * math.sqrt(1 + sum(v * v for v in rest))
        return -lim, lim
    return limits


def _fiber_integral(a, x, t_keep, drop, keep, limits, quad_limit):
    if len(drop) != 1:
        raise SurgeryError("fiber integration is implemented for excess 1")
    lo, hi = limits(t_keep)
    full = np.zeros(len(drop) + len(keep))
    full[list(keep)] = t_keep

    def f(y):
        full[drop[0]] = y
        return float(ex.evaluate(a.expr, x, full))

    val, err = integrate.quad(f, lo, hi, limit=quad_limit, epsabs=1e-13, epsrel=1e-11)
    if not np.isfinite(val):
        raise SurgeryError("fiber integration diverged")
    return val


# ---------------------------------------------------------------------------
# equivalence


@dataclass
class EquivalenceVerdict:
    equivalent: bool | None
    preconditions: dict
    signatures: tuple | None

    def summary(self) -> dict:
        return {"equivalent": self.equivalent, "preconditions": self.preconditions,
                "signatures": list(self.signatures) if self.signatures else None}


def equivalence_decide(phi1: PhaseFunction, p1: CriticalSample, phi2: PhaseFunction, p2: CriticalSample,
                       lambda_tol: float = 1e-8, patch_tol: float = 1e-6) -> EquivalenceVerdict:
    """Equivalent iff the sc fiber Hessian signatures agree (given matching Lambda germs)."""
    pre = {}
    pre["same_dimension"] = phi1.space.d == phi2.space.d
    pre["same_fiber_dimension"] = phi1.space.s == phi2.space.s
    pre["same_face"] = p1.face == p2.face
    cm1 = critical_solve(phi1, count=12)
    cm2 = critical_solve(phi2, count=12)
    pre["clean"] = cm1.clean and cm2.clean
    pre["equal_excess"] = cm1.excess == cm2.excess
    try:
        q1 = _lambda(FaceModel(phi1, p1.face), p1.z)
        q2 = _lambda(FaceModel(phi2, p2.face), p2.z)
        pre["lambda_match"] = bool(np.linalg.norm(q1.array() - q2.array()) < lambda_tol)
    except PhaseError:
        pre["lambda_match"] = False
    patch = 0.0
    for cm, other in ((cm1, phi2), (cm2, phi1)):
        for sample in cm.face_samples(p1.face)[:8]:
            q = _lambda(FaceModel(cm.phi, sample.face), sample.z)
            patch = max(patch, lambda_set_distance(other, sample.face, q))
    pre["patch_match"] = bool(patch < patch_tol)
    pre = {k: bool(v) for k, v in pre.items()}
    if not all(pre.values()):
        return EquivalenceVerdict(None, pre, None)
    s1 = sc_hessian(phi1, p1).signature
    s2 = sc_hessian(phi2, p2).signature
    return EquivalenceVerdict(s1 == s2, pre, (s1, s2))


def matched_pair(phi1: PhaseFunction, phi2: PhaseFunction, face: str = "psi", count: int = 12,
                 index: int = 0) -> tuple[CriticalSample, CriticalSample]:
    """A critical sample of phi1 on ``face`` and the phi2 sample nearest to it on Lambda."""
    cands1 = critical_solve(phi1, faces=(face,), count=count).face_samples(face)
    cands2 = critical_solve(phi2, faces=(face,), count=count).face_samples(face)
    if not cands1 or not cands2:
        raise SurgeryError(f"no critical samples on the {face} face")
    p1 = cands1[min(index, len(cands1) - 1)]
    q1 = _lambda(FaceModel(phi1, face), p1.z).array()
    p2 = min(cands2, key=lambda p: float(np.linalg.norm(_lambda(FaceModel(phi2, face), p.z).array() - q1)))
    return p1, p2
