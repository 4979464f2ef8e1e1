"""SG amplitude orders, principal symbols, principal parts and their transformation laws.

Orders are exact rationals.  Symbol estimates are sampled on a product grid of
log-spaced radii and sphere directions.  Leading homogeneous components are
extracted symbolically from the expression tree when possible and always
cross-checked against numerical ray limits.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import expr as ex
from .geometry import ScMapSpec, richardson, sphere_directions

CONVENTIONS = ("scalar", "half_density")


class SymbolError(ValueError):
    pass


class NonClassicalError(SymbolError):
    pass


class NotSymbolic(SymbolError):
    """Raised when the leading term cannot be read off the expression tree."""


@dataclass(frozen=True)
class SGOrder:
    m_e: Fraction
    m_psi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "m_e", Fraction(self.m_e))
        object.__setattr__(self, "m_psi", Fraction(self.m_psi))

    def __add__(self, other: "SGOrder") -> "SGOrder":
        return SGOrder(self.m_e + other.m_e, self.m_psi + other.m_psi)

    def shift(self, de, dpsi) -> "SGOrder":
        return SGOrder(self.m_e + Fraction(de), self.m_psi + Fraction(dpsi))

    def as_tuple(self) -> tuple[str, str]:
        return ex.fraction_str(self.m_e), ex.fraction_str(self.m_psi)


@dataclass(frozen=True)
class Amplitude:
    expr: ex.Expr
    space: ex.VarSpace
    order: SGOrder
    convention: str = "scalar"

    def __post_init__(self):
        if self.convention not in CONVENTIONS:
            raise SymbolError(f"unknown density convention {self.convention!r}")

    def __call__(self, xs, ts):
        return ex.evaluate(self.expr, xs, ts)


# ---------------------------------------------------------------------------
# sampling grid


@dataclass(frozen=True)
class SymbolGrid:
    radii_x: tuple
    radii_t: tuple
    dirs_x: np.ndarray = field(compare=False)
    dirs_t: np.ndarray = field(compare=False)

    @classmethod
    def standard(cls, space: ex.VarSpace, n_radii: int = 11, n_dirs: int = 24, r_max: float = 1e5) -> "SymbolGrid":
        radii = tuple(np.geomspace(1.0, r_max, n_radii))
        return cls(radii, radii, sphere_directions(space.d, n_dirs), sphere_directions(space.s, n_dirs))

    def points(self):
        """Arrays xs, ts of shape (nrx, nrt, ndx, ndt, ·)."""
        rx = np.asarray(self.radii_x)[:, None, None, None, None]
        rt = np.asarray(self.radii_t)[None, :, None, None, None]
        dx = self.dirs_x[None, None, :, None, :]
        dt = self.dirs_t[None, None, None, :, :]
        xs = rx * dx + 0 * rt
        ts = rt * dt + 0 * rx
        shape = np.broadcast_shapes(xs.shape[:-1], ts.shape[:-1])
        return (np.broadcast_to(xs, shape + (xs.shape[-1],)), np.broadcast_to(ts, shape + (ts.shape[-1],)))


@dataclass
class OrderReport:
    passes: bool
    constant: float
    violations: list
    checked: int

    def summary(self) -> dict:
        return {"passes": self.passes, "constant": self.constant, "violations": self.violations[:5],
                "derivatives_checked": self.checked}


def multi_indices(space: ex.VarSpace, depth: int):
    """Ordered variable tuples (x block first) for all derivatives of total order <= depth."""
    variables = space.variables()
    out = [()]
    for k in range(1, depth + 1):
        out.extend(itertools.combinations_with_replacement(variables, k))
    return out


def _growth_violation(q: np.ndarray, floor: np.ndarray, radii_x, radii_t, slope_tol: float):
    """Look for growth of the estimate ratio q[i, j] (max over directions) along either radius."""
    lx = np.log(np.asarray(radii_x))
    lt = np.log(np.asarray(radii_t))
    outer = max(3, len(lx) // 2)
    worst = (0.0, None)
    for axis, logs in ((0, lx), (1, lt)):
        qq = np.moveaxis(q, axis, 0)[-outer:]
        ff = np.moveaxis(floor, axis, 0)[-outer:]
        for col in range(qq.shape[1]):
            vals, fl = qq[:, col], ff[:, col]
            if np.any(vals <= 100 * fl) or np.any(vals <= 0):
                continue
            slope = np.polyfit(logs[-outer:], np.log(vals), 1)[0]
            if slope > worst[0]:
                worst = (float(slope), (axis, col))
    return worst if worst[0] > slope_tol else None


def magnitude(e: ex.Expr, xs, ts):
    """Sum of absolute values of the summands; 1e-15 times this bounds round-off in evaluating e."""
    if isinstance(e, ex.Add):
        return sum(magnitude(term, xs, ts) for term in e.terms)
    if isinstance(e, ex.Mul):
        out = 1.0
        for f in e.factors:
            out = out * magnitude(f, xs, ts)
        return out
    if isinstance(e, ex.Pow) and e.exponent > 0:
        return magnitude(e.base, xs, ts) ** float(e.exponent)
    return np.abs(ex.evaluate(e, xs, ts, strict=False))


def verify_order(a, order: SGOrder | None = None, depth: int = 2, grid: SymbolGrid | None = None,
                 space: ex.VarSpace | None = None, slope_tol: float = 0.1) -> OrderReport:
    """Check |d_x^alpha d_t^beta a| <= C <x>^(m_e-|alpha|) <t>^(m_psi-|beta|) on the grid."""
    if isinstance(a, Amplitude):
        e, space, order = a.expr, a.space, order or a.order
    else:
        e = a
        if space is None or order is None:
            raise SymbolError("expression input needs space and order")
    if depth > 3:
        raise SymbolError("derivative depth is limited to 3")
    grid = grid or SymbolGrid.standard(space)
    xs, ts = grid.points()
    bx = ex.japanese_bracket(xs)
    bt = ex.japanese_bracket(ts)
    indices = multi_indices(space, depth)
    with np.errstate(over="ignore", invalid="ignore"):
        return _verify_loop(e, order, grid, xs, ts, bx, bt, indices, slope_tol)


def _verify_loop(e, order, grid, xs, ts, bx, bt, indices, slope_tol):
    constant = 0.0
    violations = []
    for idx in indices:
        de = e
        for v in idx:
            de = ex.diff(de, v)
        na = sum(1 for v in idx if v.block == "x")
        nb = len(idx) - na
        bound = bx ** float(order.m_e - na) * bt ** float(order.m_psi - nb)
        vals = np.abs(np.broadcast_to(ex.evaluate(de, xs, ts), bound.shape))
        ratio = vals / bound
        if not np.all(np.isfinite(ratio)):
            violations.append({"derivative": [str(v) for v in idx], "reason": "non-finite value"})
            continue
        constant = max(constant, float(ratio.max()))
        q = ratio.max(axis=(2, 3))
        rounding = (1e-14 * np.broadcast_to(magnitude(de, xs, ts), bound.shape) / bound).max(axis=(2, 3))
        floor = np.maximum(rounding, 1e-13 * max(1.0, float(q.max())))
        found = _growth_violation(q, floor, grid.radii_x, grid.radii_t, slope_tol)
        if found:
            axis, col = found[1]
            violations.append({"derivative": [str(v) for v in idx], "growth_exponent": found[0],
                               "along": "x" if axis == 0 else "t"})
    return OrderReport(not violations, constant, violations, len(indices))


def verify_order_values(fn: Callable, order: SGOrder, space: ex.VarSpace, grid: SymbolGrid | None = None,
                        noise: Callable | None = None, slope_tol: float = 0.1) -> OrderReport:
    """Depth-0 estimate for a numerically defined function; ``noise`` gives a cancellation floor."""
    grid = grid or SymbolGrid.standard(space)
    xs, ts = grid.points()
    bound = ex.japanese_bracket(xs) ** float(order.m_e) * ex.japanese_bracket(ts) ** float(order.m_psi)
    ratio = np.abs(fn(xs, ts)) / bound
    fl = (np.abs(noise(xs, ts)) / bound) if noise else np.zeros_like(ratio)
    q = ratio.max(axis=(2, 3))
    floor = np.maximum(fl.max(axis=(2, 3)), 1e-13 * max(1.0, float(q.max())))
    found = _growth_violation(q, floor, grid.radii_x, grid.radii_t, slope_tol)
    viol = [] if not found else [{"derivative": [], "growth_exponent": found[0]}]
    return OrderReport(not viol, float(ratio.max()), viol, 1)


# ---------------------------------------------------------------------------
# leading homogeneous terms

NEG_INF = None


def _sample_scale_points(space: ex.VarSpace, block: str, n: int = 16, accept=None):
    """Points far out in the given block; ``accept(xs, ts)`` restricts them to a domain."""
    rng = np.random.default_rng(11)
    pool = 8 * n if accept is not None else n
    xs = rng.normal(size=(pool, space.d)) * 2
    ts = rng.normal(size=(pool, space.s)) * 2
    dirs = sphere_directions(space.d if block == "x" else space.s, pool)
    dirs = np.resize(dirs, (pool, dirs.shape[1]))
    if block == "x":
        xs = 10.0 * dirs
    else:
        ts = 10.0 * dirs
    if accept is not None:
        keep = np.asarray(accept(xs, ts), bool)
        if keep.sum() == 0:
            raise SymbolError("no sample point lies in the declared domain")
        xs, ts = xs[keep][:n], ts[keep][:n]
    return xs, ts


class _Leader:
    def __init__(self, space: ex.VarSpace, block: str, accept=None):
        self.space = space
        self.block = block
        self.memo: dict[int, tuple] = {}
        self.sample = _sample_scale_points(space, block, accept=accept)

    def _vanishes(self, c: ex.Expr, strict_nonzero: bool) -> bool:
        vals = np.abs(np.atleast_1d(ex.evaluate(c, *self.sample, strict=False)))
        if strict_nonzero:
            return bool(np.min(vals) <= 1e-9 * max(1.0, np.max(vals)))
        return bool(np.max(vals) <= 1e-12)

    def _negative(self, c: ex.Expr) -> bool:
        vals = np.atleast_1d(ex.evaluate(c, *self.sample, strict=False))
        return bool(np.max(vals) < 0)

    def lead(self, e: ex.Expr):
        key = id(e)
        if key in self.memo:
            return self.memo[key][1]
        out = self._lead(e)
        self.memo[key] = (e, out)
        return out

    def _lead(self, e: ex.Expr):
        b = self.block
        if isinstance(e, ex.Const):
            return (NEG_INF, ex.ZERO) if e.value == 0 else (Fraction(0), e)
        if isinstance(e, ex.Var):
            return (Fraction(1), e) if e.block == b else (Fraction(0), e)
        if isinstance(e, (ex.Bracket, ex.Norm)):
            if e.block == b:
                return Fraction(1), ex.Norm(b)
            return Fraction(0), e
        if isinstance(e, ex.NormProfile):
            if e.block != b:
                return Fraction(0), e
            if e.order == 0:
                return Fraction(2), e
            if e.order == 1:
                return Fraction(0), ex.ONE
            return NEG_INF, ex.ZERO
        if isinstance(e, ex.Add):
            parts = [self.lead(t) for t in e.terms]
            degs = [p[0] for p in parts if p[0] is not NEG_INF]
            if not degs:
                return NEG_INF, ex.ZERO
            top = max(degs)
            coeff = ex.add(*(p[1] for p in parts if p[0] == top))
            if self._vanishes(coeff, strict_nonzero=False):
                raise NotSymbolic("leading terms cancel")
            return top, coeff
        if isinstance(e, ex.Mul):
            parts = [self.lead(f) for f in e.factors]
            if any(p[0] is NEG_INF for p in parts):
                return NEG_INF, ex.ZERO
            return sum((p[0] for p in parts), Fraction(0)), ex.mul(*(p[1] for p in parts))
        if isinstance(e, ex.Pow):
            deg, c = self.lead(e.base)
            q = e.exponent
            if q.denominator == 1 and q >= 0:
                return (NEG_INF, ex.ZERO) if deg is NEG_INF else (deg * q, ex.power(c, q))
            if deg is NEG_INF or self._vanishes(c, strict_nonzero=True):
                raise NotSymbolic("power of a leading coefficient that vanishes somewhere")
            return deg * q, ex.power(c, q)
        if isinstance(e, ex.Func):
            deg, c = self.lead(e.arg)
            if e.name == "sqrt":
                if deg is NEG_INF or self._vanishes(c, strict_nonzero=True):
                    raise NotSymbolic("square root of a vanishing leading coefficient")
                return deg / 2, ex.sqrt(c)
            if deg is not NEG_INF and deg > 0:
                if e.name == "exp" and self._negative(c):
                    return NEG_INF, ex.ZERO
                raise NonClassicalError(f"{e.name} of a growing argument has no boundary limit")
            if e.name == "exp":
                return (Fraction(0), ex.exp(c)) if deg == 0 else (Fraction(0), ex.ONE)
            if e.name == "cos":
                return (Fraction(0), ex.cos(c)) if deg == 0 else (Fraction(0), ex.ONE)
            if e.name == "sin":
                if deg is NEG_INF:
                    return NEG_INF, ex.ZERO
                if deg == 0:
                    coeff = ex.sin(c)
                    if self._vanishes(coeff, strict_nonzero=False):
                        raise NotSymbolic("sine of a leading term vanishes")
                    return Fraction(0), coeff
                return deg, c
        raise NotSymbolic(f"no leading-term rule for {type(e).__name__}")


def leading_term(e: ex.Expr, space: ex.VarSpace, block: str, accept=None):
    """(degree, coefficient) with e(x, R eta) = R^degree (coefficient(x, eta) + o(1)) for the t block.

    The coefficient is written with smooth norms so that it is exactly
    homogeneous of the returned degree outside radius 3.
    """
    return _Leader(space, block, accept).lead(e)


def component_expr(e: ex.Expr, space: ex.VarSpace, block: str, degree: Fraction, accept=None):
    """Homogeneous component of the given degree (zero when the actual degree is lower)."""
    deg, coeff = leading_term(e, space, block, accept)
    if deg is NEG_INF or deg < degree:
        return ex.ZERO
    if deg > degree:
        raise SymbolError(f"leading degree {deg} exceeds the declared order {degree}")
    return coeff


# numerical limits -----------------------------------------------------------


def _scaled_limit(fn, xs, ts, block: str, degree: float, radii=(1e4, 2e4, 4e4, 8e4)):
    """lim R^-degree fn(...) along the block direction, with a stability test."""
    xs = np.asarray(xs, float)
    ts = np.asarray(ts, float)
    vals = []
    for r in radii:
        if block == "x":
            nx = np.linalg.norm(xs, axis=-1, keepdims=True)
            vals.append(r ** -degree * fn(r * xs / nx, ts))
        else:
            nt = np.linalg.norm(ts, axis=-1, keepdims=True)
            vals.append(r ** -degree * fn(xs, r * ts / nt))
    steps = [1.0 / r for r in radii]
    first, _ = richardson(vals[:3], steps[:3])
    second, _ = richardson(vals[1:], steps[1:])
    scale = np.maximum(np.abs(second), 1.0)
    if np.any(np.abs(first - second) > 1e-6 * scale):
        raise NonClassicalError("ray limit is not stable under doubling")
    return second


@dataclass
class PrincipalParts:
    amplitude: Amplitude
    sigma_e: ex.Expr | None
    sigma_psi: ex.Expr | None
    sigma_psie: ex.Expr | None
    eps: Fraction = Fraction(1, 2)

    @property
    def symbolic(self) -> bool:
        return None not in (self.sigma_e, self.sigma_psi, self.sigma_psie)

    def _hom(self, block: str, degree: Fraction, inner: Callable):
        def fn(xs, ts):
            xs = np.asarray(xs, float)
            ts = np.asarray(ts, float)
            v = xs if block == "x" else ts
            r = ex.smooth_norm(v)
            return r ** float(degree) * _scaled_limit(inner, xs, ts, block, float(degree))
        return fn

    def numeric_e(self):
        a = self.amplitude
        return self._hom("x", a.order.m_e, a)

    def numeric_psi(self):
        a = self.amplitude
        return self._hom("t", a.order.m_psi, a)

    def numeric_psie(self):
        a = self.amplitude
        inner = self._hom("t", a.order.m_psi, a)
        return self._hom("x", a.order.m_e, inner)

    def evaluate(self, which: str, xs, ts):
        """Value of a component; symbolic when available, otherwise by ray limits."""
        e = {"e": self.sigma_e, "psi": self.sigma_psi, "psie": self.sigma_psie}[which]
        if e is not None:
            return ex.evaluate(e, xs, ts, strict=False)
        return {"e": self.numeric_e, "psi": self.numeric_psi, "psie": self.numeric_psie}[which]()(xs, ts)


def principal_components(a: Amplitude, eps: Fraction = Fraction(1, 2)) -> PrincipalParts:
    """sigma^e, sigma^psi and sigma^psie of a classical amplitude."""
    space, order = a.space, a.order
    comps = {}
    for name, fn in (("e", lambda e: component_expr(e, space, "x", order.m_e)),
                     ("psi", lambda e: component_expr(e, space, "t", order.m_psi))):
        try:
            comps[name] = fn(a.expr)
        except NotSymbolic:
            comps[name] = None
    try:
        comps["psie"] = component_expr(comps["psi"], space, "x", order.m_e) if comps["psi"] is not None else None
    except NotSymbolic:
        comps["psie"] = None
    parts = PrincipalParts(a, comps["e"], comps["psi"], comps["psie"], Fraction(eps))
    _cross_check(parts)
    return parts


def _cross_check(parts: PrincipalParts, n: int = 6) -> None:
    """Symbolic components must agree with the numerical ray limits (also tests classicality)."""
    a = parts.amplitude
    rng = np.random.default_rng(5)
    xs = rng.normal(size=(n, a.space.d)) * 3
    ts = rng.normal(size=(n, a.space.s)) * 3
    far_x = 50 * xs / np.linalg.norm(xs, axis=-1, keepdims=True)
    far_t = 50 * ts / np.linalg.norm(ts, axis=-1, keepdims=True)
    checks = (("e", parts.sigma_e, parts.numeric_e(), far_x, ts),
              ("psi", parts.sigma_psi, parts.numeric_psi(), xs, far_t),
              ("psie", parts.sigma_psie, parts.numeric_psie(), far_x, far_t))
    for name, sym, num, px, pt in checks:
        numeric = num(px, pt)
        if sym is None:
            continue
        symbolic = np.broadcast_to(ex.evaluate(sym, px, pt, strict=False), numeric.shape)
        if np.any(np.abs(symbolic - numeric) > 1e-6 * np.maximum(1.0, np.abs(numeric))):
            raise SymbolError(f"symbolic sigma^{name} disagrees with the numerical ray limit")


# ---------------------------------------------------------------------------
# cutoffs and principal part


def _f(u):
    u = np.asarray(u, float)
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos])
    return out


def smooth_step(u, order: int = 0):
    """C-infinity step equal to 0 for u <= 0 and 1 for u >= 1, with derivatives up to order 2."""
    u = np.asarray(u, float)
    f, g = _f(u), _f(1.0 - u)
    with np.errstate(divide="ignore", invalid="ignore"):
        f1 = np.where(u > 0, f / np.where(u > 0, u, 1) ** 2, 0.0)
        g1 = -np.where(u < 1, g / np.where(u < 1, 1 - u, 1) ** 2, 0.0)
        f2 = np.where(u > 0, f * (1 - 2 * u) / np.where(u > 0, u, 1) ** 4, 0.0)
        w = 1.0 - u
        g2 = np.where(u < 1, g * (1 - 2 * w) / np.where(u < 1, w, 1) ** 4, 0.0)
    den = f + g
    if order == 0:
        return f / den
    num = f1 * g - f * g1
    if order == 1:
        return num / den ** 2
    if order == 2:
        dnum = f2 * g - f * g2
        dden = 2 * den * (f1 + g1)
        return (dnum * den ** 2 - num * dden) / den ** 4
    raise SymbolError("smooth_step derivatives are available up to order 2")


@dataclass(frozen=True)
class RadialCutoff:
    """chi(rho) with rho = 1/|v|: equal to 1 for rho < eps/4 and 0 for rho > eps/2.

    As a function of r = |v| it switches on between 2/eps and 4/eps.
    """

    eps: Fraction = Fraction(1, 2)

    @property
    def r0(self) -> float:
        return 2.0 / float(self.eps)

    @property
    def r1(self) -> float:
        return 4.0 / float(self.eps)

    def radial(self, r, order: int = 0):
        w = self.r1 - self.r0
        return smooth_step((np.asarray(r) - self.r0) / w, order) / w ** order

    def __call__(self, v):
        return self.radial(np.linalg.norm(v, axis=-1))

    def derivative(self, v, indices: Sequence[int]):
        """Partial derivative in the listed components of v (at most two)."""
        v = np.asarray(v, float)
        r = np.linalg.norm(v, axis=-1)
        rs = np.where(r > 0, r, 1.0)
        if len(indices) == 0:
            return self.radial(r)
        c1 = self.radial(r, 1)
        if len(indices) == 1:
            return c1 * v[..., indices[0]] / rs
        if len(indices) == 2:
            i, j = indices
            c2 = self.radial(r, 2)
            vi, vj = v[..., i], v[..., j]
            return c2 * vi * vj / rs ** 2 + c1 * ((1.0 if i == j else 0.0) / rs - vi * vj / rs ** 3)
        raise SymbolError("cutoff derivatives are available up to order 2")


@dataclass
class PrincipalPart:
    """a_p = chi(rho_X) sigma^e + chi(rho_Y) sigma^psi - chi(rho_X) chi(rho_Y) sigma^psie."""

    parts: PrincipalParts
    cutoff: RadialCutoff

    def terms(self):
        p = self.parts
        return [((True, False), p.sigma_e, 1.0), ((False, True), p.sigma_psi, 1.0),
                ((True, True), p.sigma_psie, -1.0)]

    def derivative(self, idx: Sequence[ex.Var], xs, ts):
        """Leibniz rule over the cutoff factors; sigma derivatives are symbolic."""
        if not self.parts.symbolic:
            if idx:
                raise NotSymbolic("derivatives of a_p need symbolic components")
            return self._numeric_value(xs, ts)
        total = 0.0
        n = len(idx)
        for (use_x, use_t), sigma, sign in self.terms():
            for mask in itertools.product((0, 1, 2), repeat=n):
                # 0: derivative hits sigma, 1: hits chi_X, 2: hits chi_Y
                on_x = [idx[k].index - 1 for k in range(n) if mask[k] == 1]
                on_t = [idx[k].index - 1 for k in range(n) if mask[k] == 2]
                if any(idx[k].block != "x" for k in range(n) if mask[k] == 1):
                    continue
                if any(idx[k].block != "t" for k in range(n) if mask[k] == 2):
                    continue
                if (on_x and not use_x) or (on_t and not use_t):
                    continue
                d = sigma
                for k in range(n):
                    if mask[k] == 0:
                        d = ex.diff(d, idx[k])
                if ex.is_zero(d):
                    continue
                val = np.asarray(ex.evaluate(d, xs, ts, strict=False))
                if use_x:
                    val = val * self.cutoff.derivative(xs, on_x)
                if use_t:
                    val = val * self.cutoff.derivative(ts, on_t)
                total = total + sign * val
        return total

    def _numeric_value(self, xs, ts):
        p = self.parts
        cx, ct = self.cutoff(xs), self.cutoff(ts)
        total = np.zeros(np.broadcast_shapes(cx.shape, ct.shape))
        # components are only evaluated where their cutoff is nonzero
        for which, weight in (("e", cx + 0 * ct), ("psi", ct + 0 * cx), ("psie", -(cx * ct))):
            mask = weight != 0
            if np.any(mask):
                bx = np.broadcast_to(xs, mask.shape + (np.shape(xs)[-1],))[mask]
                bt = np.broadcast_to(ts, mask.shape + (np.shape(ts)[-1],))[mask]
                total[mask] += weight[mask] * p.evaluate(which, bx, bt)
        return total

    def __call__(self, xs, ts):
        return self.derivative((), xs, ts)

    def noise(self, xs, ts):
        """Magnitude scale of the summands, used as the cancellation floor of a - a_p."""
        p = self.parts
        acc = magnitude(p.amplitude.expr, xs, ts)
        if not p.symbolic:
            return 1e-15 * (acc + np.abs(self._numeric_value(xs, ts)))
        for (_, _), sigma, _ in self.terms():
            acc = acc + magnitude(sigma, xs, ts)
        return 1e-15 * acc


def principal_part(a: Amplitude, eps: Fraction = Fraction(1, 2)) -> PrincipalPart:
    """Cutoff assembly of the three components; ``eps`` selects the cutoff radius."""
    eps = Fraction(eps)
    if not 0 < eps < 1:
        raise SymbolError("cutoff parameter eps must lie in (0, 1)")
    return PrincipalPart(principal_components(a, eps), RadialCutoff(eps))


def principal_part_difference(ap1: PrincipalPart, ap2: PrincipalPart):
    """a_p for two cutoffs differ by lower order; returned as a numerical function."""
    return lambda xs, ts: ap1(xs, ts) - ap2(xs, ts)


def residual_check(ap: PrincipalPart, depth: int = 2, grid: SymbolGrid | None = None,
                   slope_tol: float = 0.1) -> OrderReport:
    """a - a_p must have order (m_e - 1, m_psi - 1); depth 0 only for numerically defined parts."""
    a = ap.parts.amplitude
    if not ap.parts.symbolic:
        depth = 0
    order = a.order.shift(-1, -1)
    grid = grid or SymbolGrid.standard(a.space)
    xs, ts = grid.points()
    bx = ex.japanese_bracket(xs)
    bt = ex.japanese_bracket(ts)
    noise_scale = ap.noise(xs, ts)
    constant, violations = 0.0, []
    indices = multi_indices(a.space, depth)
    for idx in indices:
        da = a.expr
        for v in idx:
            da = ex.diff(da, v)
        na = sum(1 for v in idx if v.block == "x")
        bound = bx ** float(order.m_e - na) * bt ** float(order.m_psi - (len(idx) - na))
        resid = np.broadcast_to(ex.evaluate(da, xs, ts), bound.shape) - ap.derivative(idx, xs, ts)
        ratio = np.abs(resid) / bound
        constant = max(constant, float(ratio.max()))
        q = ratio.max(axis=(2, 3))
        scale = noise_scale * 10 ** len(idx) + 1e-15 * np.broadcast_to(magnitude(da, xs, ts), bound.shape)
        floor = np.maximum((scale / bound).max(axis=(2, 3)), 1e-13)
        found = _growth_violation(q, floor, grid.radii_x, grid.radii_t, slope_tol)
        if found:
            violations.append({"derivative": [str(v) for v in idx], "growth_exponent": found[0]})
    return OrderReport(not violations, constant, violations, len(indices))


# ---------------------------------------------------------------------------
# transformation under product-form sc-maps


def pullback(e: ex.Expr, psi_x: ScMapSpec | None, psi_t: ScMapSpec | None, space: ex.VarSpace) -> ex.Expr:
    mapping, sizes = {}, {}
    if psi_x is not None:
        mapping.update({ex.x(i + 1): c for i, c in enumerate(psi_x.components)})
        sizes["x"] = space.d
    if psi_t is not None:
        # fiber map components are written in the x block of their own space; rename to t
        rename = {ex.x(j + 1): ex.t(j + 1) for j in range(space.s)}
        mapping.update({ex.t(j + 1): ex.substitute(c, rename, {"x": space.s}) for j, c in enumerate(psi_t.components)})
        sizes["t"] = space.s
    return ex.substitute(e, mapping, sizes)


@dataclass
class TransformReport:
    psi_residual: OrderReport
    e_residual: OrderReport
    part_residual: OrderReport

    @property
    def passes(self) -> bool:
        return self.psi_residual.passes and self.e_residual.passes and self.part_residual.passes


def transform_principal(a: Amplitude, psi_x: ScMapSpec | None = None, psi_t: ScMapSpec | None = None,
                        depth: int = 2, grid: SymbolGrid | None = None) -> TransformReport:
    """Residual-order checks for principal symbols and parts under Psi = Psi_X x Psi_Y."""
    for m in (psi_x, psi_t):
        if m is not None and m.chart != "euclidean":
            raise SymbolError("product-form maps must be given in the Euclidean chart")
    if psi_x is not None and psi_x.source_dim != a.space.d:
        raise SymbolError("base map has the wrong dimension")
    if psi_t is not None and psi_t.source_dim != a.space.s:
        raise SymbolError("fiber map has the wrong dimension")
    space, order = a.space, a.order
    pulled = Amplitude(pullback(a.expr, psi_x, psi_t, space), space, order, a.convention)
    p_orig = principal_components(a)
    p_pull = principal_components(pulled)
    if not (p_orig.symbolic and p_pull.symbolic):
        raise NotSymbolic("transformation check needs symbolic principal components")
    ap_pull = PrincipalPart(p_pull, RadialCutoff(p_pull.eps))
    ap_orig = PrincipalPart(p_orig, RadialCutoff(p_orig.eps))

    def mapped(xs, ts):
        xm = psi_x(xs) if psi_x is not None else xs
        tm = psi_t(ts) if psi_t is not None else ts
        return xm, tm

    def component_residual(which):
        def fn(xs, ts):
            return p_pull.evaluate(which, xs, ts) - p_orig.evaluate(which, *mapped(xs, ts))

        def noise(xs, ts):
            return 1e-15 * (np.abs(p_pull.evaluate(which, xs, ts)) + np.abs(p_orig.evaluate(which, *mapped(xs, ts))))
        return fn, noise

    # smooth norms do not survive substitution, so these residuals are sampled at depth 0
    rep_psi = verify_order_values(*_pair(component_residual("psi"), order.shift(0, -1), space, grid))
    rep_e = verify_order_values(*_pair(component_residual("e"), order.shift(-1, 0), space, grid))

    def diff_fn(xs, ts):
        return ap_pull(xs, ts) - ap_orig(*mapped(xs, ts))

    def noise(xs, ts):
        return ap_pull.noise(xs, ts) + ap_orig.noise(*mapped(xs, ts))

    rep_part = verify_order_values(diff_fn, order.shift(-1, -1), space, grid, noise)
    return TransformReport(rep_psi, rep_e, rep_part)


def _pair(fn_noise, order, space, grid):
    fn, noise = fn_noise
    return fn, order, space, grid, noise
