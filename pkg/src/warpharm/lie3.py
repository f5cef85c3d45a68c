"""Intrinsic geometry of 3-dimensional Lie groups with left-invariant metrics.

Everything is expressed in an orthonormal Milnor basis ``e1, e2, e3`` and
left-invariant fields are plain coefficient vectors ``(a, b, c)``.  The
Levi-Civita connection is stored as a full table ``gamma[i, j, k] =
<nabla_{e_i} e_j, e_k>`` next to the structure constants ``c[i, j, k]``
(``[e_i, e_j] = sum_k c[i, j, k] e_k``), so covariant derivatives and
curvature of left-invariant fields reduce to finite sums.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import AmbiguousSigns, InvalidAlgebra

ZERO_TOL = 1e-9

_BASIS = np.eye(3)


def _as_vec(v) -> np.ndarray:
    v = np.asarray(getattr(v, "coeffs", v), dtype=float)
    if v.shape != (3,):
        raise ValueError(f"expected 3 coefficients, got shape {v.shape}")
    return v


@dataclass(frozen=True)
class UnimodularAlgebra:
    """Brackets ``[e2,e3]=l1 e1, [e3,e1]=l2 e2, [e1,e2]=l3 e3``."""

    lam: tuple[float, float, float]

    def __post_init__(self):
        lam = tuple(float(x) for x in self.lam)
        if len(lam) != 3 or not all(np.isfinite(lam)):
            raise InvalidAlgebra(f"need three finite structure constants, got {self.lam!r}")
        object.__setattr__(self, "lam", lam)

    @property
    def family(self) -> str:
        return "unimodular"

    @property
    def mu(self) -> tuple[float, float, float]:
        return mu_constants(self)

    def brackets(self) -> np.ndarray:
        l1, l2, l3 = self.lam
        c = np.zeros((3, 3, 3))
        c[1, 2, 0], c[2, 1, 0] = l1, -l1
        c[2, 0, 1], c[0, 2, 1] = l2, -l2
        c[0, 1, 2], c[1, 0, 2] = l3, -l3
        return c


@dataclass(frozen=True)
class NonUnimodularAlgebra:
    """Brackets ``[e1,e2]=a e2 + b e3, [e1,e3]=-b e2 + d e3, [e2,e3]=0``.

    Requires ``alpha + delta > 0`` and ``alpha >= delta``.
    """

    alpha: float
    beta: float
    delta: float

    def __post_init__(self):
        a, b, d = float(self.alpha), float(self.beta), float(self.delta)
        if not all(np.isfinite((a, b, d))):
            raise InvalidAlgebra("structure constants must be finite")
        if not a + d > 0:
            raise InvalidAlgebra(f"alpha + delta must be > 0 (got {a + d:g})")
        if not a >= d:
            raise InvalidAlgebra(f"alpha >= delta required (got alpha={a:g}, delta={d:g})")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "delta", d)

    @property
    def family(self) -> str:
        return "non_unimodular"

    def brackets(self) -> np.ndarray:
        a, b, d = self.alpha, self.beta, self.delta
        c = np.zeros((3, 3, 3))
        c[0, 1] = (0.0, a, b)
        c[1, 0] = -c[0, 1]
        c[0, 2] = (0.0, -b, d)
        c[2, 0] = -c[0, 2]
        return c


@dataclass(frozen=True)
class LeftInvariantField:
    coeffs: np.ndarray
    unit: bool = False

    def __post_init__(self):
        v = np.array(self.coeffs, dtype=float)
        if v.shape != (3,):
            raise ValueError("a left-invariant field has exactly three coefficients")
        if self.unit and abs(v @ v - 1.0) > 1e-9:
            raise ValueError(f"field flagged unit has squared norm {v @ v!r}")
        v.setflags(write=False)
        object.__setattr__(self, "coeffs", v)


@dataclass(frozen=True, eq=False)
class ConnectionTable:
    gamma: np.ndarray
    brackets: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in ("gamma", "brackets"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (3, 3, 3):
                raise ValueError(f"{name} must have shape (3, 3, 3)")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


class GroupTag(str, enum.Enum):
    SU2_SO3 = "SU2_SO3"
    SL2R_O12 = "SL2R_O12"
    E2 = "E2"
    E11 = "E11"
    H3 = "H3"
    R3 = "R3"


# signs after normalisation (#positive, #negative, #zero) -> group
_TABLE1 = {
    (3, 0, 0): GroupTag.SU2_SO3,
    (2, 1, 0): GroupTag.SL2R_O12,
    (2, 0, 1): GroupTag.E2,
    (1, 1, 1): GroupTag.E11,
    (1, 0, 2): GroupTag.H3,
    (0, 0, 3): GroupTag.R3,
}

TABLE1_ROWS = [
    ("+,+,+", GroupTag.SU2_SO3, "SU(2) or SO(3)"),
    ("+,+,-", GroupTag.SL2R_O12, "SL(2,R) or O(1,2)"),
    ("+,+,0", GroupTag.E2, "E(2)"),
    ("+,0,-", GroupTag.E11, "E(1,1)"),
    ("+,0,0", GroupTag.H3, "H3"),
    ("0,0,0", GroupTag.R3, "R+R+R"),
]


def mu_constants(alg: UnimodularAlgebra) -> tuple[float, float, float]:
    half = 0.5 * sum(alg.lam)
    return tuple(half - l for l in alg.lam)


def group_type(alg: UnimodularAlgebra, zero_tol: float = ZERO_TOL) -> GroupTag:
    """Table 1 row for the sign pattern of the structure constants.

    The pattern is read up to permutation and an overall sign flip (reversing
    the orientation of the basis negates every constant).
    """
    lam = np.asarray(alg.lam)
    near = (np.abs(lam) > zero_tol) & (np.abs(lam) < 10 * zero_tol)
    if near.any():
        raise AmbiguousSigns(f"structure constants {alg.lam} too close to zero_tol={zero_tol:g}")
    pos = int(np.sum(lam > zero_tol))
    neg = int(np.sum(lam < -zero_tol))
    if neg > pos:
        pos, neg = neg, pos
    return _TABLE1[(pos, neg, 3 - pos - neg)]


def connection_unimodular(alg: UnimodularAlgebra) -> ConnectionTable:
    m1, m2, m3 = mu_constants(alg)
    g = np.zeros((3, 3, 3))
    g[0, 1, 2], g[0, 2, 1] = m1, -m1
    g[1, 0, 2], g[1, 2, 0] = -m2, m2
    g[2, 0, 1], g[2, 1, 0] = m3, -m3
    return ConnectionTable(g, alg.brackets())


def connection_nonunimodular(alg: NonUnimodularAlgebra) -> ConnectionTable:
    a, b, d = alg.alpha, alg.beta, alg.delta
    g = np.zeros((3, 3, 3))
    g[0, 1, 2], g[0, 2, 1] = b, -b
    g[1, 0, 1], g[1, 1, 0] = -a, a
    g[2, 0, 2], g[2, 2, 0] = -d, d
    return ConnectionTable(g, alg.brackets())


def connection(alg) -> ConnectionTable:
    if isinstance(alg, UnimodularAlgebra):
        return connection_unimodular(alg)
    if isinstance(alg, NonUnimodularAlgebra):
        return connection_nonunimodular(alg)
    raise TypeError(f"not a Milnor algebra: {alg!r}")


def koszul_connection(brackets: np.ndarray) -> ConnectionTable:
    """Connection from the Koszul formula for an orthonormal basis.

    ``<nabla_i e_j, e_k> = 1/2 (c_ijk - c_jki + c_kij)``.  Used as an
    independent check on the hand-written tables.
    """
    c = np.asarray(brackets, dtype=float)
    g = 0.5 * (c - np.transpose(c, (2, 0, 1)) + np.transpose(c, (1, 2, 0)))
    return ConnectionTable(g, c)


def covariant_derivative(tbl: ConnectionTable, X, Y) -> np.ndarray:
    return np.einsum("i,j,ijk->k", _as_vec(X), _as_vec(Y), tbl.gamma)


def bracket(tbl: ConnectionTable, X, Y) -> np.ndarray:
    return np.einsum("i,j,ijk->k", _as_vec(X), _as_vec(Y), tbl.brackets)


def curvature(tbl: ConnectionTable, X, Y, Z) -> np.ndarray:
    """``R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z``."""
    X, Y, Z = _as_vec(X), _as_vec(Y), _as_vec(Z)
    nd = lambda A, B: covariant_derivative(tbl, A, B)  # noqa: E731
    return nd(X, nd(Y, Z)) - nd(Y, nd(X, Z)) - nd(bracket(tbl, X, Y), Z)


def rough_laplacian(tbl: ConnectionTable, V) -> np.ndarray:
    V = _as_vec(V)
    out = np.zeros(3)
    for e in _BASIS:
        nee = covariant_derivative(tbl, e, e)
        out += covariant_derivative(tbl, nee, V)
        out -= covariant_derivative(tbl, e, covariant_derivative(tbl, e, V))
    return out


def laplacian_matrix(tbl: ConnectionTable) -> np.ndarray:
    """Matrix ``L`` with ``rough_laplacian(V) == L @ V``."""
    return np.column_stack([rough_laplacian(tbl, e) for e in _BASIS])


def divergence(tbl: ConnectionTable, V) -> float:
    V = _as_vec(V)
    return float(sum(covariant_derivative(tbl, e, V) @ e for e in _BASIS))


def fiber_s(tbl: ConnectionTable, V) -> np.ndarray:
    """``S(V) = sum_i R(nabla_{e_i} V, V) e_i`` for left-invariant ``V``."""
    V = _as_vec(V)
    return sum(curvature(tbl, covariant_derivative(tbl, e, V), V, e) for e in _BASIS)


def curvature_trace(tbl: ConnectionTable, V) -> np.ndarray:
    """``sum_i R(e_i, V) e_i`` (minus the Ricci endomorphism applied to V)."""
    V = _as_vec(V)
    return sum(curvature(tbl, e, V, e) for e in _BASIS)


# Closed forms kept only as cross-checks of the table-driven routines above.

def rough_laplacian_closed_form(alg, V) -> np.ndarray:
    a, b, c = _as_vec(V)
    if isinstance(alg, UnimodularAlgebra):
        m1, m2, m3 = mu_constants(alg)
        return np.array([(m2**2 + m3**2) * a, (m1**2 + m3**2) * b, (m1**2 + m2**2) * c])
    al, be, de = alg.alpha, alg.beta, alg.delta
    return np.array([
        a * (al**2 + de**2),
        b * (al**2 + be**2) - c * be * (al + de),
        c * (be**2 + de**2) + b * be * (al + de),
    ])


def nabla_vv_closed_form(alg, V) -> np.ndarray:
    a, b, c = _as_vec(V)
    if isinstance(alg, UnimodularAlgebra):
        m1, m2, m3 = mu_constants(alg)
        return np.array([b * c * (m2 - m3), a * c * (m3 - m1), a * b * (m1 - m2)])
    al, be, de = alg.alpha, alg.beta, alg.delta
    return np.array([b * b * al + c * c * de, -a * c * be - a * b * al, a * b * be - a * c * de])


def fiber_s_closed_form(alg, V) -> np.ndarray:
    a, b, c = _as_vec(V)
    if isinstance(alg, UnimodularAlgebra):
        m1, m2, m3 = mu_constants(alg)
        A1 = m2**2 * (m3 - m1) + m3**2 * (m1 - m2)
        A2 = m1**2 * (m2 - m3) + m3**2 * (m1 - m2)
        A3 = m1**2 * (m2 - m3) + m2**2 * (m3 - m1)
        return np.array([A1 * b * c, A2 * a * c, A3 * a * b])
    al, be, de = alg.alpha, alg.beta, alg.delta
    return np.array([
        -al**3 * (a * a + b * b) - de**3 * (a * a + c * c) + be * (al**2 - de**2) * b * c,
        a * (al**2 * be * c - al * de**2 * b + be**2 * (al - de) * b),
        a * (-be * de**2 * b - al**2 * de * c - be**2 * (al - de) * c),
    ])
