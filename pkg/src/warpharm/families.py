"""Non-left-invariant fibre fields on coordinate charts of three Lie groups.

A :class:`ChartField` stores the frame coefficients ``a_j(x, y, z)`` of
``V2 = sum_j a_j e_j`` as sympy expressions, so every PDE residual below is
evaluated from exact derivatives.  The fibre condition for harmonicity is

    rough_laplacian(V2) = sigma V2,   div V2 = kappa (constant),

with ``sigma = f f'' + 2 f'^2``.  For a field written in a left-invariant
frame ``e_i`` with connection table ``gamma``,

    rough_laplacian(V2) = sum_j [ a_j rough_laplacian(e_j) + (Delta a_j) e_j
                                  - 2 sum_i e_i(a_j) nabla_{e_i} e_j ],
    Delta a = sum_i ( (nabla_{e_i} e_i) a - e_i e_i a ).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from . import lie3
from .errors import BadParams, BadRegime, OutOfDomain
from .lie3 import NonUnimodularAlgebra, UnimodularAlgebra

X, Y, Z = sp.symbols("x y z", real=True)
COORDS = (X, Y, Z)


@dataclass(frozen=True)
class FrameChart:
    """Left-invariant orthonormal frame on a chart of a 3-dimensional group."""

    name: str
    algebra: object
    # frame[i][k] = coefficient of d/dx_k in e_i, as sympy expressions
    frame: tuple
    positive_y: bool = False

    def apply(self, i: int, expr):
        return sum(c * sp.diff(expr, q) for c, q in zip(self.frame[i], COORDS))

    def contains(self, point) -> bool:
        return (not self.positive_y) or point[1] > 0


def r3_chart() -> FrameChart:
    one, zero = sp.Integer(1), sp.Integer(0)
    return FrameChart("R3", UnimodularAlgebra((0, 0, 0)),
                      ((one, zero, zero), (zero, one, zero), (zero, zero, one)))


def h3_chart() -> FrameChart:
    """Metric dx^2 + (dy - x dz)^2 + dz^2 with e1 = d/dx, e2 = d/dy, e3 = d/dz + x d/dy."""
    one, zero = sp.Integer(1), sp.Integer(0)
    return FrameChart("H3", UnimodularAlgebra((0, -1, 0)),
                      ((one, zero, zero), (zero, one, zero), (zero, X, one)))


def rxh2_chart(alpha: float) -> FrameChart:
    """Metric (dx^2 + dy^2)/(alpha y^2) + dz^2 with e1 = sqrt(alpha) y d/dy, e2 = sqrt(alpha) y d/dx."""
    if not alpha > 0:
        raise BadParams(f"alpha must be positive, got {alpha}")
    r = sp.sqrt(sp.nsimplify(alpha))
    zero = sp.Integer(0)
    return FrameChart("RxH2", NonUnimodularAlgebra(math.sqrt(alpha), 0.0, 0.0),
                      ((zero, r * Y, zero), (r * Y, zero, zero), (zero, zero, sp.Integer(1))), positive_y=True)


@dataclass(frozen=True)
class Candidate:
    label: str
    exprs: tuple
    residual: float


@dataclass(frozen=True, eq=False)
class ChartField:
    chart: FrameChart
    coeffs: tuple  # sympy expressions a_1, a_2, a_3
    params: dict
    sigma: float | None
    kappa: float
    branch: str
    rejected: tuple = ()
    printed: dict = field(default_factory=dict)

    @property
    def chart_id(self) -> str:
        return self.chart.name

    def coefficient_funcs(self):
        return sp.lambdify(COORDS, list(self.coeffs), "numpy")

    def coord_components(self, point) -> np.ndarray:
        """Coordinate components of ``V2`` at ``point``."""
        if not self.chart.contains(point):
            raise OutOfDomain(f"{point} outside the {self.chart.name} chart")
        subs = dict(zip(COORDS, map(float, point)))
        vec = [sum(self.coeffs[i] * self.chart.frame[i][k] for i in range(3)) for k in range(3)]
        return np.array([float(sp.N(v.subs(subs))) for v in vec])

    def coord_function(self):
        """Fast numeric ``point -> coordinate components of V2``."""
        fn = sp.lambdify(COORDS, self.coord_expr(), "numpy")
        return lambda p: np.array([float(v) for v in np.broadcast_arrays(*fn(*map(float, p)))])

    def coord_expr(self):
        return [sp.simplify(sum(self.coeffs[i] * self.chart.frame[i][k] for i in range(3))) for k in range(3)]

    def to_dict(self) -> dict:
        return {
            "chart": self.chart_id,
            "components": [str(c) for c in self.coeffs],
            "params": {k: (v if isinstance(v, (int, float, str)) or v is None else str(v))
                       for k, v in self.params.items()},
            "sigma": self.sigma,
            "kappa": self.kappa,
            "branch": self.branch,
            "rejected": [{"label": c.label, "components": [str(e) for e in c.exprs], "residual": c.residual}
                         for c in self.rejected],
            "printed": self.printed,
        }


# ------------------------------------------------------------- residuals --


def _frame_laplacian(chart: FrameChart, coeffs):
    """Exact rough Laplacian of sum a_j e_j as frame coefficients (sympy)."""
    tbl = lie3.connection(chart.algebra)
    g = tbl.gamma
    lap_basis = [lie3.rough_laplacian(tbl, e) for e in np.eye(3)]
    out = [sp.Integer(0)] * 3
    for j, a in enumerate(coeffs):
        lap_a = 0
        for i in range(3):
            nee = g[i, i]  # nabla_{e_i} e_i in frame coefficients
            lap_a += sum(float(nee[k]) * chart.apply(k, a) for k in range(3)) - chart.apply(i, chart.apply(i, a))
        for k in range(3):
            out[k] += float(lap_basis[j][k]) * a
        out[j] += lap_a
        for i in range(3):
            ea = chart.apply(i, a)
            for k in range(3):
                if g[i, j, k] != 0:
                    out[k] += -2.0 * float(g[i, j, k]) * ea
    return out


def _frame_divergence(chart: FrameChart, coeffs):
    tbl = lie3.connection(chart.algebra)
    div_e = [lie3.divergence(tbl, e) for e in np.eye(3)]
    return sum(chart.apply(j, a) + float(div_e[j]) * a for j, a in enumerate(coeffs))


def frame_residual_exprs(field_: ChartField, sigma: float):
    """``rough_laplacian(V2) - sigma V2`` and ``div V2 - kappa`` as sympy expressions."""
    lap = _frame_laplacian(field_.chart, field_.coeffs)
    vert = [sp.expand(lap[k] - sigma * field_.coeffs[k]) for k in range(3)]
    div = sp.expand(_frame_divergence(field_.chart, field_.coeffs) - field_.kappa)
    return vert, div


def family_pde_residual(field_: ChartField, eps: float, point) -> dict:
    """Fibre-side residuals of ``field_`` at ``point`` for warp constant ``eps``.

    Returns the frame-formula channels (``vertical``: 3-vector, ``divergence``)
    together with the per-chart scalar conditions.
    """
    if not field_.chart.contains(point):
        raise OutOfDomain(f"{point} outside the {field_.chart.name} chart")
    subs = dict(zip(COORDS, map(float, point)))
    ev = lambda e: float(sp.N(sp.sympify(e).subs(subs)))  # noqa: E731
    vert, div = frame_residual_exprs(field_, eps)
    out = {"vertical": [ev(v) for v in vert], "divergence": ev(div)}
    a1, a2, a3 = field_.coeffs
    name = field_.chart.name
    if name == "R3":
        lap = -(sp.diff(a1, X, 2) + sp.diff(a1, Y, 2) + sp.diff(a1, Z, 2))
        out["laplace_eigen"] = ev(lap - eps * a1)
        out["a_x_minus_kappa"] = ev(sp.diff(a1, X) - field_.kappa)
    elif name == "H3":
        e3 = lambda u: sp.diff(u, Z) + X * sp.diff(u, Y)  # noqa: E731
        lap = -(sp.diff(a1, X, 2) + sp.diff(a1, Y, 2) + e3(e3(a1)))
        out["a_x_minus_kappa"] = ev(sp.diff(a1, X) - field_.kappa)
        out["a_y"] = ev(sp.diff(a1, Y))
        out["a_z_plus_x_a_y"] = ev(e3(a1))
        out["laplace_eigen"] = ev(lap - (eps - 0.5) * a1)
    elif name == "RxH2":
        alpha = field_.params["alpha"]
        out["c_ode"] = ev(Y**2 * sp.diff(a3, Y, 2) + (eps / alpha) * a3)
        out["b_ode"] = ev(Y**2 * sp.diff(a2, Y, 2) - (1.0 - eps / alpha) * a2)
    return out


def _plug_back(chart: FrameChart, coeffs, sigma: float, kappa: float, samples) -> float:
    """Max frame residual of a candidate over sample points."""
    tmp = ChartField(chart, tuple(coeffs), {}, sigma, kappa, "candidate")
    vert, div = frame_residual_exprs(tmp, sigma)
    f = sp.lambdify(COORDS, vert + [div], "numpy")
    worst = 0.0
    for p in samples:
        val = np.abs(np.asarray(f(*p), dtype=complex))
        worst = max(worst, float(np.max(val)) if np.all(np.isfinite(val)) else math.inf)
    return worst


def _samples(positive_y: bool, count: int = 12, seed: int = 0):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1.5, 1.5, size=(count, 3))
    if positive_y:
        pts[:, 1] = rng.uniform(0.2, 3.0, size=count)
    return [tuple(p) for p in pts]


PLUG_BACK_TOL = 1e-9


def _arbitrate(chart, candidates, sigma, kappa):
    """Score each (label, exprs) candidate by plug-back and keep the best."""
    scored = [Candidate(lbl, tuple(ex), _plug_back(chart, ex, sigma, kappa, _samples(chart.positive_y)))
              for lbl, ex in candidates]
    scored.sort(key=lambda c: c.residual)
    best = scored[0]
    if best.residual > PLUG_BACK_TOL * max(1.0, abs(sigma)):
        raise BadRegime(f"no candidate satisfies the fibre equations (best {best.label}: {best.residual:.3g})")
    return best, tuple(scored[1:])


# ------------------------------------------------------------------- R3 --

P1_PRINTED = {
    "example": "eps > 0: a = cos(v1 y + v2 z) + sin(v1 y + v2 z), v1^2 + v2^2 = eps; "
               "eps < 0: a = exp(v1 y + v2 z), v1^2 + v2^2 = -eps",
    "proposition": "eps < 0: trig form with v1^2 + v2^2 = -eps; eps > 0: exp form with v1^2 + v2^2 = eps",
}


def build_r3_family(eps: float, v1: float = 0.0, v2: float = 0.0, kappa1: float = 0.0,
                    b: str | sp.Expr = "0") -> ChartField:
    """``V2 = a(x, y, z) d/dx`` on flat R^3.

    For ``eps != 0`` the trigonometric and exponential forms are both built
    with ``v1^2 + v2^2 = |eps|`` and the one solving ``Delta a = eps a``
    (positive Laplacian ``-sum d^2``) is kept.  For ``eps = 0`` the field is
    ``kappa1 x + b(y, z)`` with ``b`` harmonic.
    """
    chart = r3_chart()
    zero = sp.Integer(0)
    if eps == 0:
        bexpr = sp.sympify(b, locals={"y": Y, "z": Z})
        if bexpr.free_symbols - {Y, Z}:
            raise BadParams("b may depend on y and z only")
        if sp.simplify(sp.diff(bexpr, Y, 2) + sp.diff(bexpr, Z, 2)) != 0:
            raise BadParams(f"b = {bexpr} is not harmonic")
        a = sp.nsimplify(kappa1) * X + bexpr
        return ChartField(chart, (a, zero, zero), {"eps": 0.0, "kappa1": kappa1, "b": str(bexpr)}, 0.0,
                          float(kappa1), "harmonic", (), P1_PRINTED)
    if abs(v1 * v1 + v2 * v2 - abs(eps)) > 1e-12:
        raise BadParams(f"v1^2 + v2^2 = {v1 * v1 + v2 * v2!r} must equal |eps| = {abs(eps)!r}")
    arg = sp.Float(v1) * Y + sp.Float(v2) * Z
    cands = [("trig", (sp.cos(arg) + sp.sin(arg), zero, zero)), ("exp", (sp.exp(arg), zero, zero))]
    best, rest = _arbitrate(chart, cands, eps, 0.0)
    return ChartField(chart, best.exprs, {"eps": eps, "v1": v1, "v2": v2}, eps, 0.0, best.label, rest, P1_PRINTED)


# ------------------------------------------------------------------- H3 --


def build_h3_family(kappa: float, kappa_prime: float) -> ChartField:
    """``V2 = (kappa x + kappa') e1`` on the Heisenberg chart; warp constant 1/2, phi forcing 2 kappa."""
    chart = h3_chart()
    a = sp.nsimplify(kappa) * X + sp.nsimplify(kappa_prime)
    zero = sp.Integer(0)
    return ChartField(chart, (a, zero, zero), {"kappa": kappa, "kappa_prime": kappa_prime}, 0.5, float(kappa),
                      "linear", (), {"warp_constant": "1/2", "phi_forcing": "2 kappa"})


# ----------------------------------------------------------------- RxH2 --

P3_PRINTED = {
    "c": {"log": "c = y^(1/2)(k1 + k2 ln y) if alpha = 4 eps",
          "power": "c = k1 y^(1/2 + sqrt(1-4 alpha)/2) + k2 y^(1/2 - sqrt(1-4 alpha)/2) if 4 eps < alpha",
          "oscillatory": "c = y^(1/2)(k1 cos(y sqrt(4 alpha - 1)) + k2 sin(y sqrt(4 alpha - 1))) if alpha < 4 eps"},
    "b": {"log": "b = y^(1/2)(k1 + k2 ln y) if 4 eps = 5 alpha",
          "power": "b = k1 y^(1/2 + sqrt(1-4 alpha)/2) + k2 y^(1/2 - sqrt(1-4 alpha)/2) if 5 alpha < 4 eps",
          "oscillatory": "b = y^(1/2)(k1 cos(y sqrt(4 alpha - 1)) + k2 sin(y sqrt(4 alpha - 1))) if 4 eps < 5 alpha"},
    "odes": "y^2 b'' = (eps - alpha) b, y^2 c'' = alpha c",
}

REGIME_TOL = 1e-12


def euler_regime(rho: float) -> str:
    """Regime of ``y^2 u'' = rho u``: power, log or oscillatory."""
    d = 1.0 + 4.0 * rho
    if abs(d) <= REGIME_TOL:
        return "log"
    return "power" if d > 0 else "oscillatory"


def _exact(value: float):
    """A short rational when it reproduces ``value`` exactly, else the binary rational."""
    nice = sp.nsimplify(value, rational=True)
    return nice if float(nice) == value else sp.Rational(value)


def euler_solution(rho: float, k1: float, k2: float, regime: str | None = None):
    """General solution of ``y^2 u'' = rho u`` with exact sympy exponents."""
    actual = euler_regime(rho)
    if regime is not None and regime != actual:
        raise BadRegime(f"requested {regime} branch but 1 + 4 rho = {1 + 4 * rho:g} gives {actual}")
    k1, k2 = sp.Float(k1), sp.Float(k2)
    half = sp.Rational(1, 2)
    d = _exact(1.0 + 4.0 * rho)
    if actual == "log":
        return Y**half * (k1 + k2 * sp.log(Y)), actual
    if actual == "power":
        s = sp.sqrt(d) / 2
        return k1 * Y ** (half + s) + k2 * Y ** (half - s), actual
    w = sp.sqrt(-d) / 2
    return Y**half * (k1 * sp.cos(w * sp.log(Y)) + k2 * sp.sin(w * sp.log(Y))), actual


def _printed_euler(alpha: float, regime: str, k1: float, k2: float):
    """The printed catalogue form for a regime, with its printed exponent."""
    k1, k2 = sp.Float(k1), sp.Float(k2)
    half = sp.Rational(1, 2)
    a = sp.nsimplify(alpha, rational=True)
    if regime == "log":
        return Y**half * (k1 + k2 * sp.log(Y))
    if regime == "power":
        s = sp.sqrt(1 - 4 * a) / 2
        return k1 * Y ** (half + s) + k2 * Y ** (half - s)
    w = sp.sqrt(4 * a - 1)
    return Y**half * (k1 * sp.cos(w * Y) + k2 * sp.sin(w * Y))


def _arbitrate_component(chart, slot, readings, printed_expr, sigma, name):
    """Plug each candidate for one coefficient into the frame equations; best first."""
    zero = sp.Integer(0)
    scored = []
    for label, expr in list(readings) + [(f"{name}:printed", printed_expr)]:
        coeffs = [zero, zero, zero]
        coeffs[slot] = expr
        scored.append(Candidate(label, tuple(coeffs), _plug_back(chart, coeffs, sigma, 0.0, _samples(True))))
    scored.sort(key=lambda c: c.residual)
    return scored


def build_rxh2_family(alpha: float, eps: float, b_coeffs=(0.0, 0.0), c_coeffs=(0.0, 0.0),
                      b_branch: str | None = None, c_branch: str | None = None) -> ChartField:
    """``V2 = b(y) e2 + c(y) e3`` on R x H^2 with curvature ``-alpha``.

    Each coefficient solves an Euler equation ``y^2 u'' = rho u``.  Several
    readings of ``rho`` are built (``+-alpha`` and ``+-(eps - alpha)`` alongside
    the frame-derived ``-eps/alpha`` for ``c`` and ``1 - eps/alpha`` for ``b``)
    together with the printed catalogue form; plug-back into the frame
    equations picks the survivor.
    """
    if not alpha > 0:
        raise BadParams(f"alpha must be positive, got {alpha}")
    chart = rxh2_chart(alpha)
    rho = {"c": -eps / alpha, "b": 1.0 - eps / alpha}
    readings = {
        "c": [("-eps/alpha", rho["c"]), ("+alpha", alpha), ("-alpha", -alpha)],
        "b": [("1-eps/alpha", rho["b"]), ("+(eps-alpha)", eps - alpha), ("-(eps-alpha)", alpha - eps)],
    }
    coeffs = {"b": b_coeffs, "c": c_coeffs}
    wanted = {"b": b_branch, "c": c_branch}
    chosen, rejected, regimes = {}, [], {}
    tol = PLUG_BACK_TOL * max(1.0, abs(eps), alpha)
    for name, slot in (("b", 1), ("c", 2)):
        regimes[name] = euler_regime(rho[name])
        if wanted[name] is not None and wanted[name] != regimes[name]:
            raise BadRegime(f"{name}: requested {wanted[name]} branch but 1 + 4 rho = "
                            f"{1 + 4 * rho[name]:g} gives {regimes[name]}")
        built = [(f"{name}:rho={lbl}", euler_solution(r, *coeffs[name])[0]) for lbl, r in readings[name]]
        printed = _printed_euler(alpha, regimes[name], *coeffs[name])
        scored = _arbitrate_component(chart, slot, built, printed, eps, name)
        if scored[0].residual > tol:
            raise BadRegime(f"{name}: no candidate satisfies the fibre equations ({scored[0].residual:.3g})")
        chosen[name] = scored[0]
        rejected.extend(c for c in scored[1:] if c.residual > tol)
    zero = sp.Integer(0)
    params = {"alpha": alpha, "eps": eps, "b_coeffs": list(b_coeffs), "c_coeffs": list(c_coeffs),
              "rho_b": rho["b"], "rho_c": rho["c"],
              "b_reading": chosen["b"].label, "c_reading": chosen["c"].label}
    exprs = (zero, chosen["b"].exprs[1], chosen["c"].exprs[2])
    return ChartField(chart, exprs, params, eps, 0.0, f"b:{regimes['b']},c:{regimes['c']}",
                      tuple(rejected), P3_PRINTED)


def euler_ode_residual(expr, rho: float, ys) -> np.ndarray:
    """``y^2 u'' - rho u`` at ``ys`` from exact derivatives."""
    f = sp.lambdify(Y, Y**2 * sp.diff(expr, Y, 2) - rho * expr, "numpy")
    return np.broadcast_to(np.asarray(f(np.asarray(ys, float)), dtype=complex), np.shape(ys))


def build_family(name: str, **params) -> ChartField:
    builders = {"R3": build_r3_family, "H3": build_h3_family, "RxH2": build_rxh2_family}
    if name not in builders:
        raise BadParams(f"unknown family {name!r}")
    return builders[name](**params)


def default_fiber_points(cf: ChartField, per_axis: int = 3) -> list:
    xs = np.linspace(-1.0, 1.0, per_axis)
    ys = np.linspace(0.5, 2.0, per_axis) if cf.chart.positive_y else xs
    return [(float(x), float(y), float(z)) for x in xs for y in ys for z in xs]


def section_residual(cf: ChartField, warp, phi, ts, points, n: int = 3) -> dict:
    """Max residual of each harmonic-section channel for ``phi d/dt + V2`` with an arbitrary warp.

    The fibre channel is ``(rough_laplacian V2 - sigma(t) V2) / f^2`` with
    ``sigma = f f'' + 2 f'^2`` evaluated on the warp, so a warp whose constant
    differs from ``cf.sigma`` shows up there.
    """
    from .warp import phi_residual

    ts = np.asarray(ts, dtype=float)
    for pt in points:
        if not cf.chart.contains(pt):
            raise OutOfDomain(f"{pt} outside the {cf.chart.name} chart")
    lap_exprs, div_expr = frame_residual_exprs(cf, 0.0)
    lap_fn = sp.lambdify(COORDS, lap_exprs, "numpy")
    div_fn = sp.lambdify(COORDS, div_expr, "numpy")
    coef_fn = cf.coefficient_funcs()
    f, df, d2f = warp.eval(ts)
    f, df, d2f = np.atleast_1d(f), np.atleast_1d(df), np.atleast_1d(d2f)
    sigma = f * d2f + (n - 1) * df * df
    vert = 0.0
    div = 0.0
    for pt in points:
        lap = np.array(np.broadcast_arrays(*lap_fn(*pt)), dtype=float).reshape(3)
        a = np.array(np.broadcast_arrays(*coef_fn(*pt)), dtype=float).reshape(3)
        r = (lap[None, :] - sigma[:, None] * a[None, :]) / (f * f)[:, None]
        vert = max(vert, float(np.max(np.abs(r))))
        div = max(div, abs(float(div_fn(*pt))))
    horiz = float(np.max(np.abs(phi_residual(warp, phi, 2.0 * cf.kappa, ts, n))))
    return {"horizontal": horiz, "vertical": vert, "divergence": div}
