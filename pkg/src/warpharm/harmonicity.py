"""Harmonicity of ``V = phi(t) d/dt + V2`` on ``I x_f G``.

With base ``(I, dt^2)`` and an ``n``-dimensional fibre the field is harmonic
exactly when

    phi'' + n (f'/f) phi' - n (f'/f)^2 phi - 2 div(V2) f'/f = 0,
    (1/f^2) [ rough_laplacian(V2) - (f f'' + (n-1) f'^2) V2 ] = 0.

For left-invariant ``V2`` the second line says ``V2`` is an eigenvector of the
rough-Laplacian matrix with eigenvalue ``f f'' + 2 f'^2``, which forces that
quantity to be a constant ``eps``; classification is done on that eigen
problem rather than on printed case lists.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import lie3
from .errors import EmptyDomain, NoCase
from .lie3 import NonUnimodularAlgebra, UnimodularAlgebra
from .warp import (
    Interval,
    PhiSolution,
    SqrtQuadraticWarp,
    WarpFunction,
    solve_phi,
)

CLOSED_TOL = 1e-9
NUMERIC_TOL = 1e-6
DEFAULT_SAMPLES = 256
COMPONENT_TOL = 1e-9

_CLOSED_WARPS = {"constant", "linear", "cube_root", "sqrt_quadratic"}
_CLOSED_PHIS = {"affine", "closed_euler"}


@dataclass(frozen=True)
class AbstractFiber:
    """Fibre known only through ``kappa0 = <rough_laplacian V2, V2>`` and ``kappa1 = div V2``.

    The caller asserts that ``V2`` is a unit eigenfield, i.e. that the rough
    Laplacian of ``V2`` equals ``kappa0 V2`` with ``kappa0`` constant.
    """

    kappa0: float
    kappa1: float
    family: str = "abstract"


@dataclass(frozen=True, eq=False)
class HarmonicityProblem:
    fiber: object
    field: np.ndarray
    warp: WarpFunction
    phi: PhiSolution
    n: int = 3

    def __post_init__(self):
        v = np.asarray(getattr(self.field, "coeffs", self.field), dtype=float).reshape(-1)
        object.__setattr__(self, "field", v)
        if isinstance(self.fiber, AbstractFiber):
            return
        if self.n != 3:
            raise ValueError("Milnor fibres are three-dimensional")
        if v.shape != (3,):
            raise ValueError("V2 needs three coefficients")

    @property
    def table(self):
        return lie3.connection(self.fiber)

    @property
    def divergence(self) -> float:
        if isinstance(self.fiber, AbstractFiber):
            return self.fiber.kappa1
        return lie3.divergence(self.table, self.field)

    @property
    def rhs_coeff(self) -> float:
        """Forcing constant of the phi equation, ``2 div V2``."""
        return 2.0 * self.divergence

    def laplacian(self) -> np.ndarray:
        if isinstance(self.fiber, AbstractFiber):
            return self.fiber.kappa0 * self.field
        return lie3.rough_laplacian(self.table, self.field)

    def window(self) -> tuple[float, float]:
        lo, hi = self.warp.sample_window()
        pdom = getattr(self.phi, "sample_domain", self.phi.domain)
        if isinstance(pdom, Interval) and (math.isfinite(pdom.lo) or math.isfinite(pdom.hi)):
            plo, phi_ = pdom.finite_window()
            lo, hi = max(lo, plo), min(hi, phi_)
        if not lo < hi:
            raise EmptyDomain("warp and phi domains do not overlap")
        return lo, hi

    def is_closed_form(self) -> bool:
        return self.warp.kind in _CLOSED_WARPS and self.phi.kind in _CLOSED_PHIS


def assemble_system(p: HarmonicityProblem, t):
    """Horizontal scalar and vertical fibre vector of the harmonicity system at ``t``."""
    f, df, d2f = p.warp.eval(t)
    phi, dphi, d2phi = p.phi.eval(t)
    n = p.n
    q = df / f
    horizontal = d2phi + n * q * dphi - n * q * q * phi - p.rhs_coeff * q
    sigma = f * d2f + (n - 1) * df * df
    lap = p.laplacian()
    vertical = (lap[None, :] - np.multiply.outer(np.atleast_1d(sigma), p.field)) / np.atleast_1d(f)[:, None] ** 2
    if np.ndim(t) == 0:
        return float(horizontal), vertical[0]
    return horizontal, vertical


def chebyshev_points(lo: float, hi: float, count: int = DEFAULT_SAMPLES) -> np.ndarray:
    if count < 2:
        raise ValueError("need at least two sample points")
    k = np.arange(count)
    return np.sort(0.5 * (lo + hi) + 0.5 * (hi - lo) * np.cos((2 * k + 1) * np.pi / (2 * count)))


@dataclass
class HarmonicityReport:
    ts: np.ndarray
    horizontal: np.ndarray
    vertical: np.ndarray
    tol: float
    case_id: str | None = None
    meta: dict = field(default_factory=dict)
    extra_channels: dict = field(default_factory=dict)

    @property
    def max_horizontal(self) -> float:
        return float(np.max(np.abs(self.horizontal)))

    @property
    def max_vertical(self) -> float:
        return float(np.max(np.abs(self.vertical)))

    @property
    def max_abs(self) -> float:
        return max(self.max_horizontal, self.max_vertical)

    @property
    def verdict(self) -> bool:
        return bool(self.max_abs < self.tol)

    def to_dict(self, rows: bool = True) -> dict:
        out = {
            "case_id": self.case_id,
            "max_abs": self.max_abs,
            "max_horizontal": self.max_horizontal,
            "max_vertical": self.max_vertical,
            "tol": self.tol,
            "verdict": self.verdict,
            "samples": int(len(self.ts)),
            **self.meta,
        }
        if self.extra_channels:
            out["channels"] = {k: float(np.max(np.abs(v))) for k, v in self.extra_channels.items()}
        if rows:
            out["rows"] = [
                {"t": float(t), "horizontal": float(h), "vertical": [float(x) for x in v]}
                for t, h, v in zip(self.ts, self.horizontal, self.vertical)
            ]
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        width = self.vertical.shape[1]
        w.writerow(["t", "horizontal"] + [f"vertical_{i + 1}" for i in range(width)])
        for t, h, v in zip(self.ts, self.horizontal, self.vertical):
            w.writerow([repr(float(t)), repr(float(h))] + [repr(float(x)) for x in v])
        return buf.getvalue()


def check(p: HarmonicityProblem, samples: int = DEFAULT_SAMPLES, tol: float | None = None,
          window: tuple[float, float] | None = None, case_id: str | None = None) -> HarmonicityReport:
    lo, hi = window if window is not None else p.window()
    ts = chebyshev_points(lo, hi, samples)
    h, v = assemble_system(p, ts)
    if tol is None:
        tol = CLOSED_TOL if p.is_closed_form() else NUMERIC_TOL
    meta = {"warp": p.warp.to_dict(), "phi": p.phi.to_dict(), "n": p.n,
            "window": [float(lo), float(hi)], "rhs_coeff": p.rhs_coeff}
    return HarmonicityReport(ts, h, v, tol, case_id, meta)


# --------------------------------------------------------- classification --


@dataclass(frozen=True)
class ClassificationCase:
    family: str
    case_id: str | None
    epsilon: float
    admissible: tuple
    admissible_text: str
    constraints: tuple = ()
    rhs_coeff: float = 0.0
    printed_epsilon: float | None = None
    notes: tuple = ()

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "case_id": self.case_id,
            "epsilon": self.epsilon,
            "admissible_basis": [list(map(float, b)) for b in self.admissible],
            "admissible": self.admissible_text,
            "constraints": list(self.constraints),
            "rhs_coeff": self.rhs_coeff,
            "printed_epsilon": self.printed_epsilon,
            "notes": list(self.notes),
        }


def _unit(v) -> np.ndarray:
    v = np.asarray(getattr(v, "coeffs", v), dtype=float)
    nrm = np.linalg.norm(v)
    if abs(nrm - 1.0) > 1e-9:
        from .errors import NotUnit

        raise NotUnit(f"V2 must be a unit vector, |V2| = {nrm!r}")
    return v


def _eigen_fit(L: np.ndarray, v: np.ndarray, tol: float):
    sigma = float(v @ L @ v)
    resid = float(np.linalg.norm(L @ v - sigma * v))
    scale = max(1.0, float(np.abs(L).max()))
    if resid > tol * scale:
        raise NoCase(f"V2={v.tolist()} is not an eigenvector of the rough Laplacian "
                     f"(best eps={sigma:g}, residual {resid:.3g})")
    # admissible unit fields share the eigenvalue
    _, s, vt = np.linalg.svd(L - sigma * np.eye(3))
    null = vt[s <= 1e-8 * scale]
    return sigma, _canonical_basis(null)


def _canonical_basis(rows: np.ndarray) -> tuple:
    """Reduced row echelon form of a spanning set, rows normalised to unit length."""
    m = np.array(rows, dtype=float)
    r = 0
    for col in range(3):
        if r == len(m):
            break
        piv = r + int(np.argmax(np.abs(m[r:, col])))
        if abs(m[piv, col]) < 1e-10:
            continue
        m[[r, piv]] = m[[piv, r]]
        m[r] /= m[r, col]
        for i in range(len(m)):
            if i != r:
                m[i] -= m[i, col] * m[r]
        r += 1
    m[np.abs(m) < 1e-13] = 0.0
    return tuple(row / np.linalg.norm(row) + 0.0 for row in m[:r])


def _span_text(basis) -> str:
    names = []
    for b in basis:
        nz = [i for i in range(3) if abs(b[i]) > 1e-12]
        if len(nz) == 1:
            names.append(f"e{nz[0] + 1}")
        else:
            names.append("(" + ", ".join(f"{x:.6g}" for x in b) + ")")
    if len(basis) == 1:
        return f"+-{names[0]}"
    return "unit vectors in span(" + ", ".join(names) + ")"


def _support(v):
    return tuple(bool(abs(x) > COMPONENT_TOL) for x in v)


def _unimodular_label(lam, v) -> str | None:
    """Case number of the unimodular summary statement this (lambda, V2) falls under."""
    l1, l2, l3 = lam
    a, b, c = _support(v)
    z = lambda x: abs(x) <= lie3.ZERO_TOL  # noqa: E731
    if z(l1) and z(l2) and z(l3):
        return "1"
    if l1 > 0 and z(l2) and z(l3):
        return "2"
    if l1 > 0 and z(l2) and l3 < 0:
        return "3(a)" if not b else ("3(b)" if not a and not c else None)
    if l1 > 0 and l2 > 0 and z(l3):
        return "4(a)" if not c else ("4(b)" if not a and not b else None)
    if l1 == l2 and l2 > 0 > l3:
        return "5(a)" if not c else ("5(b)" if not a and not b else None)
    if l1 == l2 == l3 and l1 > 0:
        return "7"
    if l1 == l2 and l2 > l3 > 0:
        return "9(a)" if not c else ("9(b)" if not a and not b else None)
    if l1 > l2 == l3:
        return "8(a)" if not a else ("8(b)" if not b and not c else None)
    if l1 > l2 > l3:
        return "6" if sum((a, b, c)) == 1 else None
    return None


def classify_unimodular(alg: UnimodularAlgebra, v2, tol: float = 1e-9) -> list[ClassificationCase]:
    v = _unit(v2)
    L = lie3.laplacian_matrix(lie3.connection(alg))
    sigma, basis = _eigen_fit(L, v, tol)
    label = _unimodular_label(alg.lam, v)
    notes = ()
    if label is None:
        notes = ("no numbered case of the printed summary covers this ordering of the constants",)
    return [ClassificationCase("unimodular", label, sigma, basis, _span_text(basis), (), 0.0, None, notes)]


def _nonunimodular_label(alg: NonUnimodularAlgebra, v) -> str | None:
    a, b, c = _support(v)
    al, de = alg.alpha, alg.delta
    if abs(al - de) <= lie3.ZERO_TOL:
        if a:
            return "1(a)"
        return "1(b)" if not (b and c) else "1(c)"
    if abs(de) <= lie3.ZERO_TOL:
        if not a:
            return "3(a)" if not b else ("3(b)" if not c else "3(c)")
        if not b and not c:
            return "3(d)"
        return "3(e)" if b and not c else None
    if a:
        return "2(a)"
    return "2(b)" if not b else ("2(c)" if not c else "2(d)")


# printed epsilon where the summary statement disagrees with the eigen system
def _printed_nonunimodular_epsilon(label, alg) -> float | None:
    if label == "1(b)":
        return 2.0 * alg.alpha**2
    return None


def classify_nonunimodular(alg: NonUnimodularAlgebra, v2, tol: float = 1e-9) -> list[ClassificationCase]:
    v = _unit(v2)
    tbl = lie3.connection(alg)
    L = lie3.laplacian_matrix(tbl)
    sigma, basis = _eigen_fit(L, v, tol)
    label = _nonunimodular_label(alg, v)
    al, be, de = alg.alpha, alg.beta, alg.delta
    a, b, c = v
    constraints = []
    if abs(a) > COMPONENT_TOL:
        constraints += [f"b(beta^2-delta^2) = beta(alpha+delta)c  [{b * (be**2 - de**2):.6g} = {be * (al + de) * c:.6g}]",
                        f"c(beta^2-alpha^2) = -beta(alpha+delta)b  [{c * (be**2 - al**2):.6g} = {-be * (al + de) * b:.6g}]"]
    elif abs(b) > COMPONENT_TOL and abs(c) > COMPONENT_TOL:
        constraints.append(f"beta = bc(alpha-delta)  [{be:.6g} = {b * c * (al - de):.6g}]")
    elif abs(b) > COMPONENT_TOL or abs(c) > COMPONENT_TOL:
        constraints.append("beta = 0")
    printed = _printed_nonunimodular_epsilon(label, alg)
    notes = ()
    if printed is not None and abs(printed - sigma) > 1e-12:
        notes = (f"printed eps {printed:g} differs from the eigen system value {sigma:g}",)
    div = lie3.divergence(tbl, v)
    return [ClassificationCase("non_unimodular", label, sigma, basis, _span_text(basis), tuple(constraints),
                               2.0 * div, printed, notes)]


def classify(alg, v2, tol: float = 1e-9) -> list[ClassificationCase]:
    if isinstance(alg, UnimodularAlgebra):
        return classify_unimodular(alg, v2, tol)
    return classify_nonunimodular(alg, v2, tol)


# ------------------------------------------------------- two-dim fibre ----


def two_dim_fiber_check(kappa0: float, kappa1: float, c1: float, c2: float,
                        phi: PhiSolution | None = None, component: int = -1,
                        samples: int = DEFAULT_SAMPLES, tol: float = NUMERIC_TOL) -> HarmonicityReport:
    """Check ``f = sqrt(2 kappa0 t^2 + c1 t + c2)`` against the two-dimensional-fibre system.

    The verdict uses the harmonicity system with ``n = 2``.  Extra channels
    report the warp identity ``f f'' + f'^2 - 2 kappa0`` (which holds
    identically), the three-dimensional form ``f f'' + 2 f'^2 - 2 kappa0``,
    and the residual of the phi equation with coefficient 3 and forcing
    ``+2 kappa1 f'/f`` as stated alongside this warp.
    """
    w = SqrtQuadraticWarp(kappa0, c1, c2, component)
    if phi is None:
        phi = solve_phi(w, 2.0 * kappa1, n=2, span=w.sample_window())
    p = HarmonicityProblem(AbstractFiber(kappa0, kappa1), np.array([1.0]), w, phi, n=2)
    rep = check(p, samples=samples, tol=tol, case_id="two_dim_fiber")
    f, df, d2f = w.eval(rep.ts)
    ph, dph, d2ph = phi.eval(rep.ts)
    q = df / f
    rep.extra_channels = {
        "warp_identity_n2": f * d2f + df * df - 2.0 * kappa0,
        "warp_identity_as_n3": f * d2f + 2.0 * df * df - 2.0 * kappa0,
        "phi_printed_form": d2ph + 3 * q * dph - 3 * q * q * ph + 2.0 * kappa1 * q,
    }
    return rep
