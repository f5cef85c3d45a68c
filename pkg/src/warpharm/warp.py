"""Warping functions on an interval and the ODEs for the base component phi.

A warp ``f`` is evaluated jointly with its first two derivatives.  Closed
forms cover constant, linear, cube-root and square-root-of-quadratic warps;
:func:`solve_warp` integrates ``y y'' + 2 y'^2 = eps`` numerically for the
rest.  The base component ``phi`` of ``V = phi(t) d/dt + V2`` solves

    phi'' + n (f'/f) phi' - n (f'/f)^2 phi = rhs * f'/f,

which is a Cauchy-Euler equation in ``s = f`` whenever ``f`` is linear.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    DomainCollapse,
    EmptyDomain,
    NonPositiveInitial,
    OutOfDomain,
    SingularWarp,
)

ODE_TOL_CLOSED = 1e-8
ODE_TOL_NUMERIC = 1e-6
F_MIN_TOL = 1e-6
DERIVATIVE_BLOWUP = 1e6
MAX_EXTENT = 1e3
# finite window used when a closed-form domain is unbounded and a grid is needed
DEFAULT_WINDOW = 10.0

INF = math.inf


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    closed_lo: bool = False
    closed_hi: bool = False

    def __post_init__(self):
        if not self.lo < self.hi:
            raise EmptyDomain(f"interval ({self.lo}, {self.hi}) is empty")

    def contains(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        left = t >= self.lo if self.closed_lo else t > self.lo
        right = t <= self.hi if self.closed_hi else t < self.hi
        return left & right

    def finite_window(self, center: float | None = None, half: float = DEFAULT_WINDOW):
        """A bounded, closed sub-interval usable for sampling.

        Open finite ends are usually zeros of the warp, so they are pulled
        inwards by ``min(1, 5% of the width)``.
        """
        lo, hi = self.lo, self.hi
        width = hi - lo
        pad = min(1.0, 0.05 * width) if math.isfinite(width) else 1.0
        if math.isfinite(lo) and not self.closed_lo:
            lo += pad
        if math.isfinite(hi) and not self.closed_hi:
            hi -= pad
        if math.isfinite(lo) and math.isfinite(hi):
            return lo, hi
        if center is None:
            center = lo if math.isfinite(lo) else (hi if math.isfinite(hi) else 0.0)
        if not math.isfinite(lo):
            lo = min(center, hi) - 2 * half if math.isfinite(hi) else center - half
        if not math.isfinite(hi):
            hi = max(center, lo) + 2 * half if math.isfinite(self.lo) else center + half
        return lo, hi

    def to_list(self):
        enc = lambda x: x if math.isfinite(x) else ("inf" if x > 0 else "-inf")  # noqa: E731
        return [enc(self.lo), enc(self.hi)]


REAL_LINE = Interval(-INF, INF)


class WarpFunction:
    """Positive function on an interval with ``eval`` returning (f, f', f'')."""

    kind: str = "abstract"
    # value of f f'' + (n-1) f'^2 the warp satisfies identically, if any
    epsilon: float | None = None
    natural_n: int = 3
    domain: Interval = REAL_LINE

    def _raw(self, t: np.ndarray):
        raise NotImplementedError

    def eval(self, t):
        t_arr = np.asarray(t, dtype=float)
        inside = self.domain.contains(t_arr)
        if not np.all(inside):
            bad = np.atleast_1d(t_arr)[~np.atleast_1d(inside)][0]
            raise OutOfDomain(f"t={bad!r} outside {self.kind} warp domain {self.domain.to_list()}")
        f, df, d2f = self._raw(t_arr)
        if np.ndim(t) == 0:
            return float(f), float(df), float(d2f)
        return f, df, d2f

    def params(self) -> dict:
        return {}

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params(), "domain": self.domain.to_list()}

    def sample_window(self, half: float = DEFAULT_WINDOW):
        return self.domain.finite_window(half=half)


@dataclass(frozen=True, eq=False)
class ConstantWarp(WarpFunction):
    c: float
    kind = "constant"
    epsilon = 0.0

    def __post_init__(self):
        if not self.c > 0:
            raise NonPositiveInitial(f"constant warp must be positive, got {self.c}")

    def _raw(self, t):
        z = np.zeros_like(t)
        return z + self.c, z, z

    def params(self):
        return {"c": self.c}


@dataclass(frozen=True, eq=False)
class LinearWarp(WarpFunction):
    """``f(t) = slope * t + offset`` restricted to where it is positive."""

    slope: float
    offset: float
    domain: Interval = field(init=False)
    kind = "linear"

    def __post_init__(self):
        a, b = self.slope, self.offset
        if a == 0:
            if not b > 0:
                raise EmptyDomain("linear warp with zero slope needs a positive offset")
            dom = REAL_LINE
        elif a > 0:
            dom = Interval(-b / a, INF)
        else:
            dom = Interval(-INF, -b / a)
        object.__setattr__(self, "domain", dom)

    @property
    def epsilon(self):
        return 2.0 * self.slope**2

    def _raw(self, t):
        z = np.zeros_like(t)
        return self.slope * t + self.offset, z + self.slope, z

    def params(self):
        return {"slope": self.slope, "offset": self.offset}


@dataclass(frozen=True, eq=False)
class CubeRootWarp(WarpFunction):
    """``f(t) = (3 e^{c1} t + c2)^{1/3}``, the general positive solution with eps = 0."""

    c1: float
    c2: float
    domain: Interval = field(init=False)
    kind = "cube_root"
    epsilon = 0.0

    def __post_init__(self):
        k = 3.0 * math.exp(self.c1)
        object.__setattr__(self, "domain", Interval(-self.c2 / k, INF))

    def _raw(self, t):
        k = math.exp(self.c1)
        u = 3.0 * k * t + self.c2
        return np.cbrt(u), k * u ** (-2.0 / 3.0), -2.0 * k * k * u ** (-5.0 / 3.0)

    def params(self):
        return {"c1": self.c1, "c2": self.c2}


def sqrt_quadratic_domain(kappa0: float, c1: float, c2: float) -> list[Interval]:
    """Maximal open intervals where ``2 kappa0 t^2 + c1 t + c2 > 0``."""
    a = 2.0 * kappa0
    if a == 0:
        if c1 > 0:
            return [Interval(-c2 / c1, INF)]
        if c1 < 0:
            return [Interval(-INF, -c2 / c1)]
        if c2 > 0:
            return [REAL_LINE]
        raise EmptyDomain(f"{c2} is not positive")
    disc = c1 * c1 - 4.0 * a * c2
    if disc < 0:
        if a > 0:
            return [REAL_LINE]
        raise EmptyDomain("quadratic is negative definite")
    # cancellation-free roots
    q = -0.5 * (c1 + math.copysign(math.sqrt(disc), c1))
    t1, t2 = sorted((q / a, c2 / q)) if q != 0 else (0.0, 0.0)
    if a > 0:
        # a root can overflow to -inf/inf for tiny a; that component is then empty
        parts = [Interval(lo, hi) for lo, hi in ((-INF, t1), (t2, INF)) if lo < hi]
        if not parts:
            raise EmptyDomain("quadratic has no positive component")
        return parts
    if t1 == t2:
        raise EmptyDomain("quadratic is nonpositive everywhere")
    return [Interval(t1, t2)]


def printed_sqrt_quadratic_domain(kappa0: float, c1: float, c2: float) -> str | None:
    """The interval rule as printed in the source's bullet list, kept for comparison.

    Returns a human-readable interval string, or None when no printed bullet applies.
    """
    if kappa0 == 0:
        if c1 > 0:
            return f"]-inf, {-c2 / c1:g}]"
        if c1 < 0:
            return f"[{-c2 / c1:g}, +inf["
        return None
    disc = c1 * c1 - 8.0 * c2 * kappa0
    if disc < 0 and kappa0 > 0:
        return "R"
    if disc >= 0:
        r = math.sqrt(disc)
        t1, t2 = sorted(((-c1 - r) / (4 * kappa0), (-c1 + r) / (4 * kappa0)))
        if kappa0 > 0:
            return f"[{t1:g}, {t2:g}["
        return f"]-inf, {t1:g}[ U ]{t2:g}, +inf["
    return None


@dataclass(frozen=True, eq=False)
class SqrtQuadraticWarp(WarpFunction):
    """``f(t) = sqrt(2 kappa0 t^2 + c1 t + c2)``.

    Satisfies ``f f'' + f'^2 = 2 kappa0``, i.e. the warp equation of a
    two-dimensional fibre, hence ``natural_n = 2``.  When the positivity set
    has two components, ``component`` selects one (default: the right one).
    """

    kappa0: float
    c1: float
    c2: float
    component: int = -1
    domain: Interval = field(init=False)
    kind = "sqrt_quadratic"
    natural_n = 2

    def __post_init__(self):
        parts = sqrt_quadratic_domain(self.kappa0, self.c1, self.c2)
        object.__setattr__(self, "domain", parts[self.component])

    @property
    def epsilon(self):
        return 2.0 * self.kappa0

    @property
    def components(self) -> list[Interval]:
        return sqrt_quadratic_domain(self.kappa0, self.c1, self.c2)

    def _raw(self, t):
        q = 2.0 * self.kappa0 * t * t + self.c1 * t + self.c2
        dq = 4.0 * self.kappa0 * t + self.c1
        f = np.sqrt(q)
        df = dq / (2.0 * f)
        # (f^2)'' = 4 kappa0 = 2 f'^2 + 2 f f''
        d2f = (2.0 * self.kappa0 - df * df) / f
        return f, df, d2f

    def params(self):
        return {"kappa0": self.kappa0, "c1": self.c1, "c2": self.c2, "component": self.component}


@dataclass(frozen=True, eq=False)
class FunctionWarp(WarpFunction):
    """Caller-supplied warp with explicit derivatives (e.g. ``f = t^2`` in tests)."""

    f: Callable
    df: Callable
    d2f: Callable
    domain: Interval = REAL_LINE
    name: str = "function"
    kind = "function"

    def _raw(self, t):
        return (np.asarray(self.f(t), float) + 0 * t, np.asarray(self.df(t), float) + 0 * t,
                np.asarray(self.d2f(t), float) + 0 * t)

    def params(self):
        return {"name": self.name}


@dataclass(frozen=True)
class CollapseInfo:
    t_star: float
    reason: str


@dataclass(frozen=True, eq=False, kw_only=True)
class NumericWarp(WarpFunction):
    """Numerical solution of ``y y'' + 2 y'^2 = eps`` through ``(t0, f0, df0)``."""

    eps: float
    t0: float
    f0: float
    df0: float
    domain: Interval
    _pieces: tuple = field(repr=False)
    collapse_lo: CollapseInfo | None = None
    collapse_hi: CollapseInfo | None = None
    max_drift: float = 0.0
    kind = "epsilon_numeric"

    @property
    def epsilon(self):
        return self.eps

    @property
    def first_integral(self) -> float:
        """``y^4 y'^2 - (eps/2) y^4`` at the initial point."""
        return self.f0**4 * (self.df0**2 - 0.5 * self.eps)

    def _raw(self, t):
        flat = np.atleast_1d(t).astype(float)
        y = np.empty_like(flat)
        dy = np.empty_like(flat)
        for mask, sol in ((flat >= self.t0, self._pieces[1]), (flat < self.t0, self._pieces[0])):
            if mask.any():
                if sol is None:
                    raise OutOfDomain("no backward solution")
                y[mask], dy[mask] = sol(flat[mask])
        d2y = (self.eps - 2.0 * dy * dy) / y
        shape = np.shape(t)
        return y.reshape(shape), dy.reshape(shape), d2y.reshape(shape)

    def params(self):
        out = {"epsilon": self.eps, "t0": self.t0, "f0": self.f0, "df0": self.df0,
               "max_first_integral_drift": self.max_drift}
        for side, info in (("lo", self.collapse_lo), ("hi", self.collapse_hi)):
            if info is not None:
                out[f"collapse_{side}"] = {"t_star": info.t_star, "reason": info.reason}
        return out


def _first_integral(eps, y, dy):
    y4 = y**4
    return y4 * dy * dy - 0.5 * eps * y4


def solve_warp(
    epsilon: float,
    t0: float,
    f0: float,
    df0: float,
    bounds: tuple[float, float] | None = None,
    *,
    rtol: float = 1e-12,
    atol: float = 1e-14,
    f_min_tol: float = F_MIN_TOL,
    max_extent: float = MAX_EXTENT,
    strict: bool = False,
) -> NumericWarp:
    """Integrate ``y y'' + 2 y'^2 = epsilon`` forwards and backwards from ``t0``.

    Marching stops at the requested ``bounds``, at ``|t - t0| = max_extent``,
    when ``y`` falls to ``f_min_tol`` or when ``|y'|`` exceeds
    ``DERIVATIVE_BLOWUP``.  Early stops are recorded on the result; with
    ``strict=True`` they raise :class:`DomainCollapse` instead.
    """
    if not f0 > 0:
        raise NonPositiveInitial(f"f0 must be positive, got {f0}")
    lo_req, hi_req = bounds if bounds is not None else (t0 - max_extent, t0 + max_extent)
    lo_req, hi_req = max(lo_req, t0 - max_extent), min(hi_req, t0 + max_extent)
    if not lo_req <= t0 <= hi_req:
        raise OutOfDomain(f"t0={t0} outside requested bounds ({lo_req}, {hi_req})")

    def rhs(_t, s):
        y, dy = s
        return (dy, (epsilon - 2.0 * dy * dy) / y)

    def hit_floor(_t, s):
        return s[0] - f_min_tol

    def blow_up(_t, s):
        return DERIVATIVE_BLOWUP - abs(s[1])

    hit_floor.terminal = blow_up.terminal = True
    invariant0 = _first_integral(epsilon, f0, df0)
    scale = max(1.0, abs(invariant0))

    pieces, ends, collapses, drift = [], [], [], 0.0
    for end in (lo_req, hi_req):
        if end == t0:
            pieces.append(None)
            ends.append(t0)
            collapses.append(None)
            continue
        res = solve_ivp(rhs, (t0, end), (f0, df0), method="DOP853", rtol=rtol, atol=atol,
                        dense_output=True, events=(hit_floor, blow_up))
        t_end = float(res.t[-1])
        info = None
        if res.status == 1:
            reason = "f reached f_min_tol" if res.t_events[0].size else "|f'| exceeded blow-up bound"
            info = CollapseInfo(t_end, reason)
        elif res.status != 0:
            info = CollapseInfo(t_end, f"integrator stopped: {res.message}")
        if info is not None and strict:
            raise DomainCollapse(info.t_star, info.reason)
        drift = max(drift, float(np.max(np.abs(_first_integral(epsilon, *res.y) - invariant0))) / scale)
        dense = res.sol
        pieces.append(lambda tt, d=dense: d(tt))
        ends.append(t_end)
        collapses.append(info)

    lo, hi = ends
    if lo == hi:
        raise DomainCollapse(t0, "no room to integrate")
    domain = Interval(lo, hi, closed_lo=collapses[0] is None and pieces[0] is not None,
                      closed_hi=collapses[1] is None and pieces[1] is not None)
    if pieces[0] is None:
        domain = Interval(lo, hi, closed_lo=True, closed_hi=domain.closed_hi)
        pieces[0] = pieces[1]
    if pieces[1] is None:
        domain = Interval(lo, hi, closed_lo=domain.closed_lo, closed_hi=True)
        pieces[1] = pieces[0]
    return NumericWarp(
        eps=float(epsilon), t0=float(t0), f0=float(f0), df0=float(df0), domain=domain,
        _pieces=tuple(pieces), collapse_lo=collapses[0], collapse_hi=collapses[1], max_drift=drift,
    )


def warp_residual(w: WarpFunction, t, epsilon: float | None = None, n: int | None = None):
    """``f f'' + (n-1) f'^2 - epsilon``; ``n`` defaults to the warp's natural fibre dimension."""
    n = w.natural_n if n is None else n
    eps = w.epsilon if epsilon is None else epsilon
    if eps is None:
        raise ValueError(f"{w.kind} warp has no intrinsic epsilon; pass one")
    f, df, d2f = w.eval(t)
    return f * d2f + (n - 1) * df * df - eps


# ---------------------------------------------------------------- phi -----


class PhiSolution:
    kind = "abstract"
    rhs_coeff: float = 0.0
    n: int = 3
    domain: Interval = REAL_LINE

    def eval(self, t):
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class AffinePhi(PhiSolution):
    g1: float
    g2: float
    rhs_coeff: float = 0.0
    n: int = 3
    kind = "affine"

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        out = (self.g1 * t + self.g2, self.g1 + 0 * t, 0 * t)
        return tuple(float(x) for x in out) if out[0].ndim == 0 else out

    def to_dict(self):
        return {"kind": self.kind, "g1": self.g1, "g2": self.g2, "rhs_coeff": self.rhs_coeff}


@dataclass(frozen=True, eq=False)
class EulerPhi(PhiSolution):
    """``phi = c1 s + c2 s^{-n} + K s ln s`` with ``s = slope t + offset``."""

    c1: float
    c2: float
    slope: float
    offset: float
    rhs_coeff: float = 0.0
    n: int = 3
    kind = "closed_euler"

    @property
    def particular(self) -> float:
        return self.rhs_coeff / ((self.n + 1) * self.slope)

    @property
    def domain(self):
        return LinearWarp(self.slope, self.offset).domain

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        a, n, K = self.slope, self.n, self.particular
        s = a * t + self.offset
        if np.any(s <= 0):
            raise OutOfDomain("s = slope t + offset must be positive")
        ls = np.log(s)
        phi = self.c1 * s + self.c2 * s ** (-n) + K * s * ls
        dphi = a * (self.c1 - n * self.c2 * s ** (-n - 1) + K * (ls + 1.0))
        d2phi = a * a * (n * (n + 1) * self.c2 * s ** (-n - 2) + K / s)
        out = (phi, dphi, d2phi)
        return tuple(float(x) for x in out) if t.ndim == 0 else out

    def to_dict(self):
        return {"kind": self.kind, "c1": self.c1, "c2": self.c2, "slope": self.slope,
                "offset": self.offset, "rhs_coeff": self.rhs_coeff, "n": self.n,
                "particular_coeff": self.particular}


@dataclass(frozen=True, eq=False, kw_only=True)
class NumericPhi(PhiSolution):
    t0: float
    phi0: float
    dphi0: float
    domain: Interval
    _dense: Callable = field(repr=False)
    rhs_coeff: float = 0.0
    n: int = 3
    kind = "numeric"

    @property
    def sample_domain(self) -> Interval:
        """Integrated range minus a margin where phi'' is differenced centrally."""
        m = 2 * PHI_FD_STEP
        return Interval(self.domain.lo + m, self.domain.hi - m, True, True)

    def _d2(self, t):
        """phi'' by differencing the dense phi'.

        Interior points use Richardson-extrapolated central differences; points
        within ``h`` of an end use a one-sided five-point stencil.
        """
        h = PHI_FD_STEP
        g = lambda x: self._dense(x)[1]  # noqa: E731
        out = np.empty_like(t)
        room_lo, room_hi = t - self.domain.lo, self.domain.hi - t
        central = (room_lo >= h) & (room_hi >= h)
        tc = t[central]
        d_h = (g(tc + h) - g(tc - h)) / (2 * h)
        d_h2 = (g(tc + h / 2) - g(tc - h / 2)) / h
        out[central] = (4.0 * d_h2 - d_h) / 3.0
        side = ~central
        if side.any():
            ts = t[side]
            sgn = np.where(room_lo[side] < h, 1.0, -1.0)
            coeffs = (-25.0, 48.0, -36.0, 16.0, -3.0)
            acc = sum(c * g(ts + k * sgn * h) for k, c in enumerate(coeffs))
            out[side] = sgn * acc / (12.0 * h)
        return out

    def eval(self, t):
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        if not np.all((t_arr >= self.domain.lo) & (t_arr <= self.domain.hi)):
            raise OutOfDomain("t outside the integrated phi range")
        phi, dphi = self._dense(t_arr)
        d2phi = self._d2(t_arr)
        if np.ndim(t) == 0:
            return float(phi[0]), float(dphi[0]), float(d2phi[0])
        return phi, dphi, d2phi

    def to_dict(self):
        return {"kind": self.kind, "t0": self.t0, "phi0": self.phi0, "dphi0": self.dphi0,
                "rhs_coeff": self.rhs_coeff, "n": self.n, "domain": self.domain.to_list()}


def _is_constant(w: WarpFunction) -> bool:
    return isinstance(w, ConstantWarp) or (isinstance(w, LinearWarp) and w.slope == 0)


def solve_phi(
    w: WarpFunction,
    rhs_coeff: float = 0.0,
    c1: float | None = None,
    c2: float | None = None,
    *,
    t0: float | None = None,
    phi0: float = 0.0,
    dphi0: float = 1.0,
    n: int = 3,
    span: tuple[float, float] | None = None,
    rtol: float = 1e-12,
    atol: float = 1e-13,
) -> PhiSolution:
    """Solve the phi equation for the warp ``w`` with forcing ``rhs_coeff * f'/f``.

    ``(c1, c2)`` select a closed-form solution (affine ``c1 t + c2`` for a
    constant warp, ``c1 s + c2 s^{-n}`` plus the particular part for a linear
    one).  Otherwise initial data ``phi(t0) = phi0, phi'(t0) = dphi0`` is used.
    """
    closed = c1 is not None and c2 is not None
    if _is_constant(w):
        # f' = 0 kills every term except phi''
        if closed:
            return AffinePhi(c1, c2, rhs_coeff, n)
        t0 = 0.0 if t0 is None else t0
        return AffinePhi(dphi0, phi0 - dphi0 * t0, rhs_coeff, n)
    if isinstance(w, LinearWarp):
        a, b = w.slope, w.offset
        if closed:
            return EulerPhi(c1, c2, a, b, rhs_coeff, n)
        if t0 is None:
            t0 = float(np.mean(w.sample_window()))
        s0 = a * t0 + b
        K = rhs_coeff / ((n + 1) * a)
        # phi = c1 s + c2 s^-n + K s ln s ; match value and derivative at t0
        m = np.array([[s0, s0 ** (-n)], [a, -n * a * s0 ** (-n - 1)]])
        rhs = np.array([phi0 - K * s0 * math.log(s0), dphi0 - a * K * (math.log(s0) + 1.0)])
        k1, k2 = np.linalg.solve(m, rhs)
        return EulerPhi(float(k1), float(k2), a, b, rhs_coeff, n)

    lo, hi = span if span is not None else w.sample_window()
    if t0 is None:
        t0 = 0.5 * (lo + hi)
    if not lo <= t0 <= hi:
        raise OutOfDomain(f"t0={t0} outside ({lo}, {hi})")
    probe = np.linspace(lo, hi, 257)
    f_probe = w.eval(probe)[0]
    if np.any(f_probe <= 0):
        raise SingularWarp("warp vanishes inside the phi integration range")

    def rhs(t, s):
        f, df, _ = w.eval(t)
        q = df / f
        return (s[1], rhs_coeff * q - n * q * s[1] + n * q * q * s[0])

    sols = {}
    for end in (lo, hi):
        if end == t0:
            continue
        res = solve_ivp(rhs, (t0, end), (phi0, dphi0), method="DOP853", rtol=rtol, atol=atol,
                        dense_output=True)
        if res.status != 0:
            raise SingularWarp(f"phi integration failed: {res.message}")
        sols[end] = res.sol

    def dense(t):
        t = np.asarray(t, dtype=float)
        out = np.empty((2,) + t.shape)
        for end, sol in sols.items():
            mask = (t <= t0) if end < t0 else (t >= t0)
            if mask.any():
                out[:, mask] = sol(t[mask])
        return out

    return NumericPhi(t0=t0, phi0=phi0, dphi0=dphi0, domain=Interval(lo, hi, True, True), _dense=dense,
                      rhs_coeff=rhs_coeff, n=n)


# numeric phi'' uses central differences only this far inside the integrated range
PHI_FD_STEP = 1e-3


def phi_residual(w: WarpFunction, sol: PhiSolution, rhs_coeff: float, t, n: int = 3):
    """``phi'' + n (f'/f) phi' - n (f'/f)^2 phi - rhs_coeff f'/f``."""
    f, df, _ = w.eval(t)
    phi, dphi, d2phi = sol.eval(t)
    q = df / f
    return d2phi + n * q * dphi - n * q * q * phi - rhs_coeff * q


def warp_grid_csv(w: WarpFunction, ts) -> str:
    ts = np.asarray(ts, dtype=float)
    f, df, d2f = w.eval(ts)
    return _csv(("t", "f", "df", "d2f"), zip(ts, f, df, d2f))


def phi_grid_csv(sol: PhiSolution, ts) -> str:
    ts = np.asarray(ts, dtype=float)
    phi, dphi, _ = sol.eval(ts)
    return _csv(("t", "phi", "dphi"), zip(ts, phi, dphi))


def _csv(header, rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\r\n")
    wr.writerow(header)
    for row in rows:
        wr.writerow([repr(float(x)) for x in row])
    return buf.getvalue()
