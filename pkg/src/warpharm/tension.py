"""Horizontal tension ``S(V)`` on ``I x_f G`` and harmonic-map decisions.

For ``V = phi(t) d/dt + V2`` with ``V2`` independent of ``t``:

    horizontal = n phi^2 f' f'' / f^2 + |V2|^2 f' f'' + div(V2) phi f'' / f
    vertical   = S_F(V2) / f^2 - f' phi f'' V2 / f^2 + phi' f'' V2 / f
                 + f'^2 div(V2) V2 / f^2 - f'^2 nabla_{V2} V2 / f^2
                 + (n - 1) phi f'^3 V2 / f^3 + phi f' sum_i R(e_i, V2) e_i / f^3

Every fibre quantity is tensorial, so the same expression serves
left-invariant fields and the chart families (evaluated pointwise).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from . import lie3
from .errors import BadParams, EmptyDomain
from .families import COORDS, ChartField, build_h3_family, build_rxh2_family, family_pde_residual
from .harmonicity import (
    CLOSED_TOL,
    AbstractFiber,
    HarmonicityProblem,
    HarmonicityReport,
    chebyshev_points,
    check,
)
from .lie3 import NonUnimodularAlgebra, UnimodularAlgebra
from .warp import AffinePhi, ConstantWarp, EulerPhi, LinearWarp, phi_residual

TERM_NAMES = (
    "h_phi2", "h_norm", "h_div",
    "v_fiber_s", "v_phi_f2", "v_dphi_f2", "v_div", "v_nabla_vv", "v_phi_f1_cubed", "v_curvature_trace",
)
ZERO_TOL = 1e-9


@dataclass(frozen=True)
class FiberTerms:
    """Pointwise fibre quantities entering the tension formula."""

    v: np.ndarray
    norm2: float
    s: np.ndarray
    div: float
    nabla_vv: np.ndarray
    curv_trace: np.ndarray

    @classmethod
    def left_invariant(cls, alg, v) -> "FiberTerms":
        tbl = lie3.connection(alg)
        v = np.asarray(v, dtype=float)
        return cls(v, float(v @ v), lie3.fiber_s(tbl, v), lie3.divergence(tbl, v),
                   lie3.covariant_derivative(tbl, v, v), lie3.curvature_trace(tbl, v))

    @classmethod
    def at_point(cls, chart_field: ChartField, point) -> "FiberTerms":
        ev = _chart_evaluator(chart_field)
        a, da = ev(point)
        tbl = lie3.connection(chart_field.chart.algebra)
        # nabla_{e_i} V2 = sum_j (e_i(a_j) e_j + a_j nabla_{e_i} e_j)
        nab = da + np.einsum("j,ijk->ik", a, tbl.gamma)
        basis = np.eye(3)
        s = sum(lie3.curvature(tbl, nab[i], a, basis[i]) for i in range(3))
        return cls(a, float(a @ a), s, float(np.trace(nab)), a @ nab, lie3.curvature_trace(tbl, a))


_EVALUATORS: dict[int, tuple] = {}


def _chart_evaluator(cf: ChartField):
    """Numeric ``(a_j, e_i(a_j))`` at a chart point, from exact derivatives."""
    key = id(cf)
    hit = _EVALUATORS.get(key)
    if hit is not None and hit[0] is cf:
        return hit[1]
    exprs = list(cf.coeffs) + [cf.chart.apply(i, a) for i in range(3) for a in cf.coeffs]
    fn = sp.lambdify(COORDS, exprs, "numpy")

    def evaluate(point):
        vals = np.array([complex(v) for v in np.broadcast_arrays(*fn(*map(float, point)))], dtype=complex)
        vals = vals.real.astype(float)
        return vals[:3], vals[3:].reshape(3, 3)

    _EVALUATORS[key] = (cf, evaluate)
    return evaluate


def tension_terms(f, df, d2f, phi, dphi, n: int, ft: FiberTerms) -> dict:
    """Each summand of the tension, broadcast over arrays of ``t``."""
    f, df, d2f, phi, dphi = (np.atleast_1d(np.asarray(x, dtype=float)) for x in (f, df, d2f, phi, dphi))
    col = lambda c, vec: np.multiply.outer(c, vec)  # noqa: E731
    return {
        "h_phi2": n * phi**2 * df * d2f / f**2,
        "h_norm": ft.norm2 * df * d2f,
        "h_div": ft.div * phi * d2f / f,
        "v_fiber_s": col(1 / f**2, ft.s),
        "v_phi_f2": col(-df * phi * d2f / f**2, ft.v),
        "v_dphi_f2": col(dphi * d2f / f, ft.v),
        "v_div": col(df**2 * ft.div / f**2, ft.v),
        "v_nabla_vv": col(-(df**2) / f**2, ft.nabla_vv),
        "v_phi_f1_cubed": col((n - 1) * phi * df**3 / f**3, ft.v),
        "v_curvature_trace": col(phi * df / f**3, ft.curv_trace),
    }


@dataclass
class TensionValue:
    ts: np.ndarray
    horizontal: np.ndarray
    vertical: np.ndarray
    terms: dict = field(default_factory=dict)

    @property
    def max_abs(self) -> float:
        return float(max(np.max(np.abs(self.horizontal)), np.max(np.abs(self.vertical))))

    def breakdown(self) -> dict:
        return {k: float(np.max(np.abs(v))) for k, v in self.terms.items()}

    def to_dict(self, rows: bool = False) -> dict:
        out = {"max_abs": self.max_abs, "terms": self.breakdown()}
        if rows:
            out["rows"] = [{"t": float(t), "horizontal": float(h), "vertical": [float(x) for x in v]}
                           for t, h, v in zip(self.ts, self.horizontal, self.vertical)]
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["t", "horizontal", "vertical_1", "vertical_2", "vertical_3"])
        for t, h, v in zip(self.ts, self.horizontal, self.vertical):
            w.writerow([repr(float(t)), repr(float(h))] + [repr(float(x)) for x in v])
        return buf.getvalue()


def _assemble(ts, terms) -> TensionValue:
    h = sum(v for k, v in terms.items() if k.startswith("h_"))
    vert = sum(v for k, v in terms.items() if k.startswith("v_"))
    return TensionValue(np.atleast_1d(ts), h, vert, terms)


def s_of_v(p: HarmonicityProblem, t) -> TensionValue:
    """Tension ``S(V)`` for a left-invariant fibre field at ``t`` (scalar or array)."""
    if isinstance(p.fiber, AbstractFiber):
        raise BadParams("the tension needs a concrete Milnor fibre")
    f, df, d2f = p.warp.eval(t)
    phi, dphi, _ = p.phi.eval(t)
    ft = FiberTerms.left_invariant(p.fiber, p.field)
    return _assemble(t, tension_terms(f, df, d2f, phi, dphi, p.n, ft))


def chart_s_of_v(cf: ChartField, warp, phi, t, point, n: int = 3) -> TensionValue:
    f, df, d2f = warp.eval(t)
    ph, dph, _ = phi.eval(t)
    return _assemble(t, tension_terms(f, df, d2f, ph, dph, n, FiberTerms.at_point(cf, point)))


@dataclass
class HarmonicMapReport:
    harmonicity: HarmonicityReport
    tension: TensionValue
    tol: float
    case_id: str | None = None

    @property
    def max_tension(self) -> float:
        return self.tension.max_abs

    @property
    def max_residual(self) -> float:
        return max(self.harmonicity.max_abs, self.max_tension)

    @property
    def verdict(self) -> bool:
        return bool(self.harmonicity.max_abs < self.tol and self.max_tension < self.tol)

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "verdict": self.verdict,
            "tol": self.tol,
            "harmonicity_max": self.harmonicity.max_abs,
            "tension_max": self.max_tension,
            "tension_terms": self.tension.breakdown(),
            "harmonicity": self.harmonicity.to_dict(rows=False),
        }


def harmonic_map_check(p: HarmonicityProblem, samples: int = 256, tol: float | None = None,
                       window=None, case_id: str | None = None) -> HarmonicMapReport:
    """Both harmonic-map conditions: the harmonic-section system and ``S(V) = 0``."""
    rep = check(p, samples=samples, tol=tol, window=window, case_id=case_id)
    return HarmonicMapReport(rep, s_of_v(p, rep.ts), rep.tol, case_id)


# ------------------------------------------------- unimodular catalogue --


@dataclass(frozen=True)
class HarmonicMapCase:
    case_id: str
    group: str
    v2: tuple
    printed_slope: float
    required_slope: float
    phi_printed: str
    phi_required: str
    domain_printed: str
    notes: str = ""

    @property
    def phi_must_vanish(self) -> bool:
        return self.phi_required == "0"

    def to_dict(self) -> dict:
        return {"case_id": self.case_id, "group": self.group, "v2": list(self.v2),
                "printed_slope": self.printed_slope, "required_slope": self.required_slope,
                "phi_printed": self.phi_printed, "phi_required": self.phi_required,
                "domain_printed": self.domain_printed, "notes": self.notes}

    def problem(self, alg, beta: float = 1.0, sign: int = 1, c1: float = 1.0, c2: float = 0.5,
                printed: bool = True) -> HarmonicityProblem:
        """Instantiate ``f`` and ``phi`` from the printed (or the required) slope."""
        slope = self.printed_slope if printed else self.required_slope
        if slope == 0:
            return HarmonicityProblem(alg, self.v2, ConstantWarp(beta), AffinePhi(c1, c2))
        if not printed and self.phi_must_vanish:
            c1 = c2 = 0.0
        w = LinearWarp(sign * slope, beta)
        return HarmonicityProblem(alg, self.v2, w, EulerPhi(c1, c2, sign * slope, beta))


def _required_slope(alg, v) -> float:
    """Slope of a linear warp forced by harmonicity: ``2 f'^2 = <rough_laplacian V2, V2>``."""
    sigma = float(lie3.rough_laplacian(lie3.connection(alg), v) @ v)
    return math.sqrt(max(sigma, 0.0) / 2.0)


def classify_harmonic_maps_unimodular(alg: UnimodularAlgebra, v2, tol: float = ZERO_TOL) -> list[HarmonicMapCase]:
    v = np.asarray(v2, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > 1e-9:
        from .errors import NotUnit

        raise NotUnit(f"|V2| = {np.linalg.norm(v):.12g}")
    lam = np.asarray(alg.lam, dtype=float)
    nz = np.abs(lam) > tol
    vt = tuple(float(x) for x in v)
    if not nz.any():
        return [HarmonicMapCase("1", "R3", vt, 0.0, 0.0, "g1 t + g2", "g1 t + g2", "R")]
    if nz.sum() == 1:
        k = int(np.argmax(nz))
        mu = alg.mu[k]
        printed = abs(mu)
        req = _required_slope(alg, v)
        euler = "c1 s + c2 s^-3"
        along = abs(abs(v[k]) - 1.0) < tol
        across = abs(v[k]) < tol
        dom = f"]-beta/{printed:g}, +inf[ (sign +1)"
        if along:
            return [HarmonicMapCase("2", "H3", vt, printed, req, euler, euler, dom, "V2 along the centre")]
        if across:
            return [HarmonicMapCase("2", "H3", vt, printed, req, euler, "0", dom,
                                    "V2 orthogonal to the centre: the curvature term survives unless phi = 0")]
        return []
    if nz.all() and np.ptp(lam) < tol:
        printed = abs(lam[0]) / math.sqrt(2.0)
        req = _required_slope(alg, v)
        euler = "c1 s + c2 s^-3"
        return [HarmonicMapCase("3", "SU2", vt, printed, req, euler, euler,
                                f"]-beta/{printed:g}, +inf[ (sign +1)",
                                "printed slope lambda1/sqrt2; harmonicity forces lambda1/2")]
    return []


# ---------------------------------------------- non-unimodular systems --


def _printed_nonunimodular_channels(case_id: str, alg: NonUnimodularAlgebra, v, f, df, d2f, phi, dphi, d2phi):
    """The printed per-case systems, evaluated literally."""
    al, be, de = alg.alpha, alg.beta, alg.delta
    a, b, c = v
    q = df / f
    ode = d2phi + 3 * q * dphi - 3 * q * q * phi
    ch = {}
    if case_id in ("1", "2"):
        ch["warp"] = f * d2f + 2 * df - 2 * al**2
        ch["f2_factor"] = d2f * (3 * df * phi**2 + f**2 * df - 2 * a * al * f * phi)
        if case_id == "1":
            ch["coupled"] = 4 * df**3 * a * phi + dphi * f * (a * al**2 - 2 * df**2) - (2 * al**3 * f + 2 * al * f * df**2)
            ch["phi"] = ode + 4 * a * al * q
        else:
            ch["coupled"] = (-(al**3) - al * df**2 + 4 * d2f * f * dphi - a * phi * df * d2f
                             + phi * df / f * (al**2 + 2 * df**2))
            ch["phi"] = ode + 2 * a * al * q
        return ch
    ch["algebraic_b"] = np.full_like(f, b * (be**2 - de**2) - be * (al + de) * c)
    ch["algebraic_c"] = np.full_like(f, c * (be**2 - al**2) + be * (al + de) * b)
    ch["warp"] = f * d2f + 2 * df - (al**2 + de**2)
    ch["f2_factor"] = d2f * (3 * df * phi**2 + f**2 * df - a * (al + de) * f * phi)
    ch["e1"] = (-(al**3) * (a * a + b * b) - de**3 * (a * a + c * c) + be * b * c * (al**2 - de**2)
                - a * df * d2f * phi + a * f * d2f * dphi - a * a * df**2 * (al + de)
                - df**2 * (b * b * al + c * c * de) + phi * df / f * a * (2 * df**2 + al**2 + de**2))
    ch["e2"] = (a * (al**2 * c * be - al * de**2 + al * be**2 - de * be**2 * b) - b * df * phi * d2f
                + f * dphi * d2f * b - a * b * df**2 * (al + de) + a * df**2 * (c * be + b * al)
                + phi * df / f * (2 * b * df**2 + b * al**2 + b * al * de - c * al * be + c * be * de))
    ch["e3"] = (a * (-(de**2) * b * be - al**2 * de * c - al * be**2 * c + de * be**2 * c) - c * df * phi * d2f
                + f * dphi * d2f * c - a * c * df**2 * (al + de) - a * df**2 * (b * be - c * de)
                + phi * df / f * (2 * c * df**2 + c * de**2 + c * al * de - b * al * be + b * be * de))
    ch["phi"] = ode + 2 * a * (al + de) * q
    return ch


def nonunimodular_case(alg: NonUnimodularAlgebra, v, tol: float = ZERO_TOL) -> tuple[str | None, str]:
    al, de = alg.alpha, alg.delta
    a = v[0]
    along = abs(abs(a) - 1.0) < tol
    if abs(al - de) < tol and de > tol:
        return ("1", "") if along else (None, "case 1 needs V2 = +-e1")
    if al > tol and abs(de) < tol:
        return ("2", "") if along else (None, "case 2 needs V2 = +-e1")
    if al > de + tol and abs(de) > tol:
        return ("3", "") if abs(a) > tol else (None, "rejected: case 3 needs a != 0")
    return None, "no case applies"


@dataclass
class NonUnimodularMapReport:
    case_id: str | None
    status: str
    derived: HarmonicMapReport
    printed_channels: dict

    @property
    def verdict(self) -> bool:
        return self.derived.verdict

    @property
    def printed_max(self) -> float:
        return max(self.printed_channels.values(), default=math.nan)

    def to_dict(self) -> dict:
        return {"case_id": self.case_id, "status": self.status, "verdict": self.verdict,
                "printed_channels": self.printed_channels, "printed_max": self.printed_max,
                "derived": self.derived.to_dict()}


def classify_harmonic_maps_nonunimodular(alg: NonUnimodularAlgebra, v2, warp, phi, samples: int = 64,
                                         tol: float | None = None) -> NonUnimodularMapReport:
    """Pointwise evaluation of the derived harmonic-map system and the printed case systems."""
    v = np.asarray(v2, dtype=float)
    p = HarmonicityProblem(alg, v, warp, phi)
    derived = harmonic_map_check(p, samples=samples, tol=tol)
    case_id, reason = nonunimodular_case(alg, v)
    printed = {}
    if case_id is not None:
        ts = derived.harmonicity.ts
        f, df, d2f = warp.eval(ts)
        ph, dph, d2ph = phi.eval(ts)
        printed = {k: float(np.max(np.abs(x)))
                   for k, x in _printed_nonunimodular_channels(case_id, alg, v, f, df, d2f, ph, dph, d2ph).items()}
    status = "evaluated" if case_id is not None else reason
    return NonUnimodularMapReport(case_id, status, derived, printed)


# --------------------------------------------------- impossibility scan --

SCAN_STATEMENT = "grid evidence, not proof"
SCAN_FIBER_POINTS = (-1.0, 0.0, 1.0)
SCAN_Y_POINTS = (0.5, 1.0, 2.0)


@dataclass
class ScanReport:
    family: str
    rows: list
    margin: float
    statement: str = SCAN_STATEMENT

    @property
    def min_residual(self) -> float:
        return min(r["residual"] for r in self.rows)

    @property
    def passed(self) -> bool:
        return bool(self.min_residual >= self.margin)

    def to_dict(self) -> dict:
        return {"family": self.family, "statement": self.statement, "margin": self.margin,
                "min_residual": self.min_residual, "passed": self.passed, "rows": self.rows}


def _conforming(cf: ChartField):
    sigma = cf.sigma
    if sigma is None or sigma <= 0:
        raise BadParams("the scan needs a positive warp constant")
    slope = math.sqrt(sigma / 2.0)
    w = LinearWarp(slope, 1.0)
    return w, EulerPhi(1.0, 0.5, slope, 1.0, rhs_coeff=2.0 * cf.kappa)


def family_map_residual(cf: ChartField, t_samples: int = 9, points=None) -> dict:
    """Max harmonic-section and tension residuals of a chart family with a conforming linear warp."""
    w, ph = _conforming(cf)
    lo, hi = w.sample_window()
    ts = chebyshev_points(max(lo, 0.0), min(hi, 4.0), t_samples)
    if points is None:
        ys = SCAN_Y_POINTS if cf.chart.positive_y else SCAN_FIBER_POINTS
        points = [(x, y, z) for x in SCAN_FIBER_POINTS for y in ys for z in SCAN_FIBER_POINTS]
    harm = float(np.max(np.abs(phi_residual(w, ph, 2.0 * cf.kappa, ts))))
    ten = 0.0
    for pt in points:
        res = family_pde_residual(cf, cf.sigma, pt)
        harm = max(harm, float(np.max(np.abs(res["vertical"]))), abs(res["divergence"]))
        ten = max(ten, chart_s_of_v(cf, w, ph, ts, pt).max_abs)
    return {"harmonicity": harm, "tension": ten}


def impossibility_scan(family: str, grid: list[dict], check_tol: float = CLOSED_TOL) -> ScanReport:
    """Harmonic-map residual over a parameter grid; each row should stay above ``10 check_tol``."""
    rows = []
    for params in grid:
        if family == "H3":
            if params.get("kappa", 0.0) == 0.0:
                continue  # left-invariant: harmonic maps exist there
            cf = build_h3_family(**params)
        elif family == "RxH2":
            cf = build_rxh2_family(**params)
            if all(c == 0 for c in cf.coeffs):
                continue
        else:
            raise BadParams(f"no impossibility statement for family {family!r}")
        r = family_map_residual(cf)
        rows.append({"params": {k: (list(v) if isinstance(v, tuple) else v) for k, v in params.items()},
                     "branch": cf.branch, "harmonicity": r["harmonicity"], "tension": r["tension"],
                     "residual": max(r["harmonicity"], r["tension"])})
    if not rows:
        raise EmptyDomain("scan grid is empty after exclusions")
    return ScanReport(family, rows, 10.0 * check_tol)


def default_grid(family: str) -> list[dict]:
    if family == "H3":
        return [{"kappa": k, "kappa_prime": kp} for k in (-2.0, -1.0, 1.0, 2.0) for kp in (-1.0, 0.0, 1.0)]
    if family == "RxH2":
        # log branch for c: alpha = 4 eps
        return [{"alpha": 1.0, "eps": 0.25, "b_coeffs": (0.0, 0.0), "c_coeffs": (k1, k2)}
                for k1 in (-1.0, 1.0) for k2 in (-1.0, 1.0)]
    raise BadParams(f"no default grid for {family!r}")
