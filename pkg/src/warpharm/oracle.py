"""Finite-difference geometry on coordinate charts.

Everything here is assembled from metric components alone: Christoffel
symbols by central differences of ``g``, curvature by central differences of
the Christoffel symbols, and covariant derivatives of vector fields by central
differences of their coordinate components.  Nothing is imported from the
closed-form modules, so agreement with them is a genuine cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import BadParams, OutOfDomain, SingularMetric

H_FIRST = 1e-4   # Christoffel symbols and first derivatives
H_SECOND = 1e-3  # curvature, rough Laplacian, tension
TOL_FIRST = 1e-6
TOL_SECOND = 1e-3

Field = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Chart:
    name: str
    dim: int
    metric: Callable[[np.ndarray], np.ndarray]
    inside: Callable[[np.ndarray], bool] = lambda p: True
    frame_order: tuple | None = None
    params: dict = field(default_factory=dict)
    frame_fn: Callable | None = None  # preferred orthonormal frame for reporting components

    def g(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if not self.inside(p):
            raise OutOfDomain(f"{p.tolist()} outside chart {self.name}")
        m = np.asarray(self.metric(p), dtype=float)
        if not np.all(np.isfinite(m)):
            raise SingularMetric(f"non-finite metric at {p.tolist()}")
        return m

    def require_interior(self, p, margin: float) -> None:
        p = np.asarray(p, dtype=float)
        for k in range(self.dim):
            for s in (-1.0, 1.0):
                q = p.copy()
                q[k] += s * margin
                if not self.inside(q):
                    raise OutOfDomain(f"{p.tolist()} is within {margin} of the boundary of {self.name}")


def flat_r3() -> Chart:
    return Chart("R3", 3, lambda p: np.eye(3))


def heisenberg() -> Chart:
    """``dx^2 + (dy - x dz)^2 + dz^2``."""
    def metric(p):
        x = p[0]
        return np.array([[1.0, 0.0, 0.0], [0.0, 1.0, -x], [0.0, -x, 1.0 + x * x]])
    return Chart("H3", 3, metric)


def rxh2(alpha: float) -> Chart:
    """``(dx^2 + dy^2) / (alpha y^2) + dz^2`` on ``y > 0``; frame built from (d/dy, d/dx, d/dz)."""
    def metric(p):
        s = 1.0 / (alpha * p[1] ** 2)
        return np.diag([s, s, 1.0])
    return Chart("RxH2", 3, metric, lambda p: p[1] > 0, frame_order=(1, 0, 2), params={"alpha": alpha})


def matrix_group_chart(name: str, basis) -> Chart:
    """Left-invariant metric making ``basis`` orthonormal, in coordinates of the second kind.

    ``x -> exp(x0 B0) exp(x1 B1) exp(x2 B2)``; the metric comes from the
    Maurer-Cartan form ``g^-1 dg`` expanded in ``basis``.
    """
    from scipy.linalg import expm

    mats = [np.asarray(b) for b in basis]
    flat = np.array([np.concatenate([m.real.ravel(), m.imag.ravel()]) for m in mats]).T

    def coeffs(m):
        v = np.concatenate([m.real.ravel(), m.imag.ravel()])
        return np.linalg.lstsq(flat, v, rcond=None)[0]

    def A(p):
        e2 = expm(-p[2] * mats[2])
        e1 = expm(-p[1] * mats[1])
        ad = lambda g, m: g @ m @ np.linalg.inv(g)  # noqa: E731
        cols = [coeffs(ad(e2 @ e1, mats[0])), coeffs(ad(e2, mats[1])), coeffs(mats[2])]
        return np.column_stack(cols)

    def metric(p):
        a = A(p)
        return a.T @ a

    return Chart(name, 3, metric, frame_fn=lambda p: np.linalg.inv(A(p)))


def su2(lam: float) -> Chart:
    """``[e2, e3] = lam e1`` cyclically with ``lam > 0``."""
    return su2_chart((lam, lam, lam))


_PAULI = [np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.array([[1, 0], [0, -1]])]


def su2_chart(lams) -> Chart:
    """All-positive unimodular constants: ``e_i = c_i (-i sigma_i / 2)`` with ``c_i = sqrt(lam_j lam_k)``."""
    l1, l2, l3 = map(float, lams)
    if min(l1, l2, l3) <= 0:
        raise ValueError("su2_chart needs positive constants")
    c = (math.sqrt(l2 * l3), math.sqrt(l3 * l1), math.sqrt(l1 * l2))
    return matrix_group_chart("SU2", [ci * (-0.5j) * s for ci, s in zip(c, _PAULI)])


def semidirect_chart(name: str, act: np.ndarray, acting: int) -> Chart:
    """``R x| R^2``: basis vector ``acting`` acts on the other two (cyclic order) by ``act``.

    Realised by 3x3 matrices ``[[A, u], [0, 0]]``.
    """
    act = np.asarray(act, dtype=float)
    gen = np.zeros((3, 3))
    gen[:2, :2] = act
    mats = [None, None, None]
    mats[acting] = gen
    others = [(acting + 1) % 3, (acting + 2) % 3]
    for slot, idx in enumerate(others):
        m = np.zeros((3, 3))
        m[slot, 2] = 1.0
        mats[idx] = m
    return matrix_group_chart(name, mats)


def heisenberg_matrix(lam: float = 1.0, center: int = 0) -> Chart:
    """``[e_j, e_k] = lam e_center`` for ``(center, j, k)`` cyclic."""
    lams = [0.0, 0.0, 0.0]
    lams[center] = lam
    return unimodular_chart(lams)


def unimodular_chart(lams) -> Chart:
    """Chart for ``[e2,e3]=l1 e1, [e3,e1]=l2 e2, [e1,e2]=l3 e3`` when one constant vanishes or all are positive."""
    lams = [float(x) for x in lams]
    zeros = [k for k in range(3) if lams[k] == 0.0]
    if len(zeros) == 3:
        return flat_r3()
    if zeros:
        k = zeros[-1]
        i, j = (k + 1) % 3, (k + 2) % 3
        # ad_{e_k} e_i = l_j e_j, ad_{e_k} e_j = -l_i e_i
        act = np.array([[0.0, -lams[i]], [lams[j], 0.0]])
        return semidirect_chart(f"unimodular{tuple(lams)}", act, k)
    if min(lams) <= 0:
        raise BadParams(f"no matrix chart for constants {tuple(lams)} (mixed or negative signs)")
    return su2_chart(lams)


def nonunimodular_chart(alpha: float, beta: float, delta: float) -> Chart:
    """``[e1,e2] = alpha e2 + beta e3``, ``[e1,e3] = -beta e2 + delta e3``."""
    act = np.array([[alpha, -beta], [beta, delta]])
    return semidirect_chart(f"nonunimodular{(alpha, beta, delta)}", act, 0)


def warped_chart(lo: float, hi: float, f: Callable[[float], float], fiber: Chart) -> Chart:
    """``dt^2 + f(t)^2 g_F`` on ``(lo, hi) x fibre``."""
    def metric(p):
        m = np.zeros((fiber.dim + 1, fiber.dim + 1))
        m[0, 0] = 1.0
        m[1:, 1:] = f(p[0]) ** 2 * fiber.metric(p[1:])
        return m

    def inside(p):
        return lo < p[0] < hi and fiber.inside(p[1:]) and f(p[0]) > 0

    order = None if fiber.frame_order is None else (0,) + tuple(1 + k for k in fiber.frame_order)
    return Chart(f"warped[{fiber.name}]", fiber.dim + 1, metric, inside, order,
                 {"interval": [lo, hi], "fiber": fiber.name, **fiber.params})


# ------------------------------------------------------------ primitives --


def _inverse(chart: Chart, p) -> tuple[np.ndarray, np.ndarray]:
    g = chart.g(p)
    w = np.linalg.eigvalsh(0.5 * (g + g.T))
    if w[0] <= 1e-14 * max(1.0, w[-1]):
        raise SingularMetric(f"metric not positive definite at {np.asarray(p).tolist()}")
    return g, np.linalg.inv(g)


def metric_derivatives(chart: Chart, p, h: float = H_FIRST) -> np.ndarray:
    """``dg[l, i, j] = d_l g_ij`` by central differences."""
    p = np.asarray(p, dtype=float)
    d = chart.dim
    out = np.empty((d, d, d))
    for l in range(d):
        e = np.zeros(d)
        e[l] = h
        out[l] = (chart.g(p + e) - chart.g(p - e)) / (2 * h)
    return out


def christoffel_fd(chart: Chart, p, h: float = H_FIRST) -> np.ndarray:
    """``Gamma[k, i, j]`` with ``nabla_{d_i} d_j = Gamma[k, i, j] d_k``."""
    p = np.asarray(p, dtype=float)
    chart.require_interior(p, 2 * h)
    _, ginv = _inverse(chart, p)
    dg = metric_derivatives(chart, p, h)
    # lower[l, i, j] = d_i g_jl + d_j g_il - d_l g_ij
    lower = np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg
    return 0.5 * np.einsum("kl,lij->kij", ginv, lower)


def gram_schmidt_frame(chart: Chart, p) -> np.ndarray:
    """Columns are a g-orthonormal frame from the coordinate vectors in the chart's column order."""
    g = chart.g(p)
    order = chart.frame_order or tuple(range(chart.dim))
    cols = []
    for k in order:
        v = np.zeros(chart.dim)
        v[k] = 1.0
        for u in cols:
            v = v - (u @ g @ v) * u
        cols.append(v / math.sqrt(v @ g @ v))
    return np.column_stack(cols)


def _d(fn: Field, p, direction, h: float) -> np.ndarray:
    """Directional derivative of a vector-valued function by central differences."""
    direction = np.asarray(direction, dtype=float)
    return (np.asarray(fn(p + h * direction)) - np.asarray(fn(p - h * direction))) / (2 * h)


def covariant_fd(chart: Chart, X: np.ndarray, Y: Field, p, h: float = H_FIRST) -> np.ndarray:
    """``(nabla_X Y)(p)`` for a vector ``X`` at ``p`` and a field ``Y``."""
    p = np.asarray(p, dtype=float)
    gam = christoffel_fd(chart, p, min(h, H_FIRST))
    return _d(Y, p, X, h) + np.einsum("kij,i,j->k", gam, X, np.asarray(Y(p)))


def frame_connection_fd(chart: Chart, frame: Callable, p, h: float = H_FIRST) -> np.ndarray:
    """``gamma[i, j, k] = g(nabla_{E_i} E_j, E_k)`` for the frame ``frame(p)`` (columns)."""
    p = np.asarray(p, dtype=float)
    E = frame(p)
    g = chart.g(p)
    d = chart.dim
    out = np.empty((d, d, d))
    for i in range(d):
        for j in range(d):
            v = covariant_fd(chart, E[:, i], lambda q, j=j: frame(q)[:, j], p, h)
            out[i, j] = E.T @ g @ v
    return out


def curvature_fd(chart: Chart, p, h: float = H_SECOND) -> np.ndarray:
    """``R[l, i, j, k]`` with ``R(d_i, d_j) d_k = R[l, i, j, k] d_l``."""
    p = np.asarray(p, dtype=float)
    chart.require_interior(p, 2 * h + 2 * H_FIRST)
    d = chart.dim
    gam = christoffel_fd(chart, p)
    dgam = np.empty((d, d, d, d))  # dgam[m] = d_m Gamma
    for m in range(d):
        e = np.zeros(d)
        e[m] = h
        dgam[m] = (christoffel_fd(chart, p + e) - christoffel_fd(chart, p - e)) / (2 * h)
    # R^l_ijk = d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik
    return (np.einsum("iljk->lijk", dgam) - np.einsum("jlik->lijk", dgam)
            + np.einsum("lim,mjk->lijk", gam, gam) - np.einsum("ljm,mik->lijk", gam, gam))


def curvature_apply(R: np.ndarray, X, Y, Z) -> np.ndarray:
    return np.einsum("lijk,i,j,k->l", R, X, Y, Z)


def rough_laplacian_fd(chart: Chart, V: Field, p, h: float = H_SECOND, frame: Callable | None = None) -> np.ndarray:
    """``sum_i (nabla_{nabla_{E_i} E_i} V - nabla_{E_i} nabla_{E_i} V)`` in coordinates."""
    p = np.asarray(p, dtype=float)
    frame = frame or (lambda q: gram_schmidt_frame(chart, q))
    chart.require_interior(p, 2 * h + 2 * H_FIRST)
    E = frame(p)
    out = np.zeros(chart.dim)
    for i in range(chart.dim):
        Ei = lambda q, i=i: frame(q)[:, i]  # noqa: E731
        nee = covariant_fd(chart, E[:, i], Ei, p, h)
        out += covariant_fd(chart, nee, V, p, h)
        inner = lambda q, i=i: covariant_fd(chart, frame(q)[:, i], V, q, H_FIRST)  # noqa: E731
        out -= covariant_fd(chart, E[:, i], inner, p, h)
    return out


def divergence_fd(chart: Chart, V: Field, p, h: float = H_FIRST) -> float:
    p = np.asarray(p, dtype=float)
    E = gram_schmidt_frame(chart, p)
    g = chart.g(p)
    return float(sum(E[:, i] @ g @ covariant_fd(chart, E[:, i], V, p, h) for i in range(chart.dim)))


def gradient_fd(chart: Chart, fn: Callable, p, h: float = H_FIRST) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    _, ginv = _inverse(chart, p)
    d = np.array([(fn(p + h * e) - fn(p - h * e)) / (2 * h) for e in np.eye(chart.dim)])
    return ginv @ d


@dataclass
class TensionFD:
    s_part: np.ndarray
    laplacian_part: np.ndarray
    point: np.ndarray
    h: float


def tension_fd(chart: Chart, V: Field, p, h: float = H_SECOND) -> TensionFD:
    """``S(V) = sum_i R(nabla_{E_i} V, V) E_i`` and the rough Laplacian, both in coordinates."""
    p = np.asarray(p, dtype=float)
    R = curvature_fd(chart, p, h)
    E = gram_schmidt_frame(chart, p)
    v = np.asarray(V(p), dtype=float)
    s = sum(curvature_apply(R, covariant_fd(chart, E[:, i], V, p, H_FIRST), v, E[:, i]) for i in range(chart.dim))
    return TensionFD(s, rough_laplacian_fd(chart, V, p, h), p, h)


def orthonormal_frame(chart: Chart, p) -> np.ndarray:
    return chart.frame_fn(np.asarray(p, dtype=float)) if chart.frame_fn else gram_schmidt_frame(chart, p)


def frame_components(chart: Chart, p, vec) -> np.ndarray:
    """Coefficients of a coordinate vector in the chart's reporting frame."""
    return np.linalg.solve(orthonormal_frame(chart, p), np.asarray(vec, dtype=float))


def richardson_ratio(estimate: Callable[[float], float], exact: float, h: float) -> float:
    """``err(h) / err(h/2)``; close to 4 for a second-order scheme."""
    e1 = abs(estimate(h) - exact)
    e2 = abs(estimate(h / 2) - exact)
    return e1 / e2 if e2 > 0 else math.inf


# ------------------------------------------------------ warped-product lemmas --


def _lift(fiber_field: Field, dim: int) -> Field:
    return lambda q: np.concatenate([[0.0], np.asarray(fiber_field(q[1:]), dtype=float)])


def _dt(q) -> np.ndarray:
    e = np.zeros(len(q))
    e[0] = 1.0
    return e


@dataclass
class LemmaReport:
    kind: str
    errors: dict
    points: list
    h: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(all(e < self.tol for e in self.errors.values()))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "errors": self.errors, "passed": self.passed, "h": self.h, "tol": self.tol,
                "points": [list(map(float, p)) for p in self.points]}


def heisenberg_frame(q) -> np.ndarray:
    """``e1 = d/dx, e2 = d/dy, e3 = d/dz + x d/dy`` as columns."""
    return np.array([[1.0, 0.0, 0.0], [0.0, 1.0, q[0]], [0.0, 0.0, 1.0]])


def _lemma_setup(f, fiber, frame, points):
    lo = min(p[0] for p in points) - 0.5
    hi = max(p[0] for p in points) + 0.5
    return warped_chart(lo, hi, f, fiber), [lambda q, i=i: frame(q)[:, i] for i in range(fiber.dim)]


def connection_lemma_check(f, df, fiber: Chart, frame: Callable, points, h: float = H_FIRST,
                           tol: float = TOL_SECOND, h_fn: Callable | None = None) -> LemmaReport:
    """The six warped-product connection identities over a one-dimensional base."""
    M, fields = _lemma_setup(f, fiber, frame, points)
    h_fn = h_fn or (lambda q: q[0] + q[1] ** 2 * q[2])
    errs = {f"connection_{k}": 0.0 for k in range(1, 7)}
    upd = lambda k, v: errs.__setitem__(k, max(errs[k], float(np.max(np.abs(v)))))  # noqa: E731
    for p in map(np.asarray, points):
        t, x = p[0], p[1:]
        ff, fp = f(t), df(t)
        upd("connection_1", gradient_fd(M, lambda q: f(q[0]), p) - np.r_[fp, 0, 0, 0][: M.dim])
        upd("connection_2", covariant_fd(M, _dt(p), _dt, p))
        gF = fiber.g(x)
        for a, Xa in enumerate(fields):
            X = np.r_[0.0, Xa(x)]
            upd("connection_4", covariant_fd(M, X, _dt, p) - (fp / ff) * X)
            upd("connection_5", covariant_fd(M, _dt(p), _lift(Xa, M.dim), p) - (fp / ff) * X)
            for Yb in fields:
                nabF = covariant_fd(fiber, Xa(x), Yb, x)
                rhs = np.r_[-ff * (Xa(x) @ gF @ Yb(x)) * fp, nabF]
                upd("connection_3", covariant_fd(M, X, _lift(Yb, M.dim), p) - rhs)
        gradF = gradient_fd(fiber, h_fn, x)
        upd("connection_6", gradient_fd(M, lambda q: h_fn(q[1:]), p) - np.r_[0.0, gradF / ff**2])
    return LemmaReport("connection", errs, [list(p) for p in points], h, tol)


def curvature_lemma_check(f, df, d2f, fiber: Chart, frame: Callable, points, h: float = H_SECOND,
                          tol: float = TOL_SECOND) -> LemmaReport:
    """The six warped-product curvature identities over a one-dimensional base."""
    M, fields = _lemma_setup(f, fiber, frame, points)
    errs = {f"curvature_{k}": 0.0 for k in range(1, 7)}
    upd = lambda k, v: errs.__setitem__(k, max(errs[k], float(np.max(np.abs(v)))))  # noqa: E731
    for p in map(np.asarray, points):
        t, x = p[0], p[1:]
        ff, fp, fpp = f(t), df(t), d2f(t)
        R = curvature_fd(M, p, h)
        RF = curvature_fd(fiber, x, h)
        gF = fiber.g(x)
        T = _dt(p)
        vecs = [Xa(x) for Xa in fields]
        lift = lambda v: np.r_[0.0, v]  # noqa: E731
        upd("curvature_1", curvature_apply(R, T, T, T))
        for X in vecs:
            upd("curvature_2", curvature_apply(R, T, T, lift(X)))
            upd("curvature_4", curvature_apply(R, lift(X), T, T) + (fpp / ff) * lift(X))
            for Y in vecs:
                upd("curvature_3", curvature_apply(R, lift(X), lift(Y), T))
                upd("curvature_5", curvature_apply(R, T, lift(X), lift(Y)) + ff * (X @ gF @ Y) * fpp * T)
                for Z in vecs:
                    rhs = lift(curvature_apply(RF, X, Y, Z)) + fp**2 * ((X @ gF @ Z) * lift(Y) - (Y @ gF @ Z) * lift(X))
                    upd("curvature_6", curvature_apply(R, lift(X), lift(Y), lift(Z)) - rhs)
    return LemmaReport("curvature", errs, [list(p) for p in points], h, tol)


def default_lemma_points(count: int = 10, seed: int = 7) -> list:
    rng = np.random.default_rng(seed)
    t = rng.uniform(1.0, 2.0, count)
    xyz = rng.uniform(-1.0, 1.0, (count, 3))
    return [[float(a), *map(float, b)] for a, b in zip(t, xyz)]


# ----------------------------------------------------- warped-field checks --


@dataclass
class WarpedFieldCheck:
    chart: str
    points: np.ndarray
    laplacian: np.ndarray  # rows: (d/dt coefficient, fibre-frame coefficients)
    s_part: np.ndarray | None
    h: float

    @property
    def max_laplacian(self) -> float:
        return float(np.max(np.abs(self.laplacian)))

    @property
    def max_s(self) -> float:
        return float(np.max(np.abs(self.s_part))) if self.s_part is not None else math.nan

    @property
    def max_abs(self) -> float:
        return self.max_laplacian if self.s_part is None else max(self.max_laplacian, self.max_s)

    def to_dict(self) -> dict:
        return {"chart": self.chart, "h": self.h, "samples": int(len(self.points)),
                "max_laplacian": self.max_laplacian,
                "max_s": None if self.s_part is None else self.max_s}


def warped_field_check(f: Callable, phi: Callable, fiber: Chart, fiber_field: Field, points, lo: float, hi: float,
                       h: float = H_SECOND, tension: bool = True) -> WarpedFieldCheck:
    """Rough Laplacian (and optionally ``S(V)``) of ``V = phi d/dt + V2`` on ``dt^2 + f^2 g_F``.

    Fibre parts are reported in the fibre chart's reporting frame.
    """
    f, phi = lru_cache(maxsize=4096)(f), lru_cache(maxsize=4096)(phi)
    M = warped_chart(lo, hi, lambda t: f(float(t)), fiber)
    V = lambda q: np.concatenate([[phi(float(q[0]))], np.asarray(fiber_field(q[1:]), dtype=float)])  # noqa: E731
    lap, ss = [], []
    for p in map(lambda q: np.asarray(q, dtype=float), points):
        to_frame = lambda v: np.r_[v[0], frame_components(fiber, p[1:], v[1:])]  # noqa: E731
        if tension:
            T = tension_fd(M, V, p, h)
            lap.append(to_frame(T.laplacian_part))
            ss.append(to_frame(T.s_part))
        else:
            lap.append(to_frame(rough_laplacian_fd(M, V, p, h)))
    return WarpedFieldCheck(M.name, np.asarray(points, dtype=float), np.array(lap),
                            np.array(ss) if tension else None, h)


def sample_grid(lo_hi: list[tuple[float, float]], per_axis: int = 5) -> list:
    axes = [np.linspace(a, b, per_axis) for a, b in lo_hi]
    mesh = np.meshgrid(*axes, indexing="ij")
    return [list(map(float, pt)) for pt in np.stack([m.ravel() for m in mesh], axis=1)]
