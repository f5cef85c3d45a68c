import math

import numpy as np
import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st

from warpharm.errors import DomainCollapse, EmptyDomain, NonPositiveInitial, OutOfDomain
from warpharm.warp import (
    AffinePhi,
    ConstantWarp,
    CubeRootWarp,
    EulerPhi,
    LinearWarp,
    NumericPhi,
    SqrtQuadraticWarp,
    phi_grid_csv,
    phi_residual,
    printed_sqrt_quadratic_domain,
    solve_phi,
    solve_warp,
    sqrt_quadratic_domain,
    warp_grid_csv,
    warp_residual,
)


def cheb(lo, hi, n=256):
    k = np.arange(n)
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * np.cos((2 * k + 1) * np.pi / (2 * n))


def test_warp_residual_closed_forms():
    ts = np.linspace(0.5, 9, 50)
    assert np.all(warp_residual(ConstantWarp(3.0), ts, epsilon=0) == 0)
    assert np.abs(warp_residual(CubeRootWarp(0.4, -1.0), ts)).max() < 1e-13
    assert np.abs(warp_residual(LinearWarp(0.8, 1.0), ts, epsilon=2 * 0.64)).max() < 1e-14


def test_sqrt_quadratic_is_a_two_dimensional_fibre_warp():
    w = SqrtQuadraticWarp(1.0, 0.0, 1.0)
    ts = np.linspace(-5, 5, 100)
    assert np.abs(warp_residual(w, ts)).max() < 1e-13  # f f'' + f'^2 = 2 kappa0
    f, df, d2f = w.eval(ts)
    # with the three-dimensional left-hand side the identity fails
    assert np.abs(f * d2f + 2 * df**2 - 2.0).max() > 0.5


def test_out_of_domain():
    with pytest.raises(OutOfDomain):
        LinearWarp(1.0, 0.0).eval(-1.0)
    with pytest.raises(OutOfDomain):
        CubeRootWarp(0.0, 0.0).eval(0.0)


@pytest.mark.parametrize(
    "args, expected",
    [((0, 1, 0), [(0, math.inf)]), ((1, 0, 1), [(-math.inf, math.inf)]), ((0, -2, 4), [(-math.inf, 2)]),
     ((1, 0, -2), [(-math.inf, -1), (1, math.inf)]), ((-1, 0, 2), [(-1, 1)]), ((0, 0, 3), [(-math.inf, math.inf)])],
)
def test_sqrt_quadratic_domain(args, expected):
    got = [(iv.lo, iv.hi) for iv in sqrt_quadratic_domain(*args)]
    assert got == pytest.approx(expected)


@pytest.mark.parametrize("args", [(-1, 0, -1), (0, 0, -1), (-1, 2, -1)])
def test_sqrt_quadratic_domain_empty(args):
    with pytest.raises(EmptyDomain):
        sqrt_quadratic_domain(*args)


def test_printed_bullets_kept_for_comparison():
    assert printed_sqrt_quadratic_domain(0, 1, -2) == "]-inf, 2]"
    assert printed_sqrt_quadratic_domain(1, 0, 1) == "R"


@settings(max_examples=80, deadline=None)
@given(st.floats(-2, 2), st.floats(-3, 3), st.floats(-3, 3))
@example(2.2250738585e-313, 1.0, 0.0)
def test_sqrt_quadratic_domain_positivity(k0, c1, c2):
    q = lambda t: 2 * k0 * t * t + c1 * t + c2  # noqa: E731
    try:
        parts = sqrt_quadratic_domain(k0, c1, c2)
    except EmptyDomain:
        assert np.all(q(np.linspace(-50, 50, 2001)) <= 1e-9)
        return
    inside_any = np.zeros(2001, bool)
    grid = np.linspace(-50, 50, 2001)
    for iv in parts:
        lo, hi = max(iv.lo, -50), min(iv.hi, 50)
        if lo < hi:
            ts = np.linspace(lo, hi, 1002)[1:-1]
            assert np.all(q(ts) > -1e-12)
        inside_any |= iv.contains(grid)
    assert np.all(q(grid[~inside_any]) <= 1e-9)


def test_solve_warp_recovers_cube_root():
    cr = CubeRootWarp(0.3, 1.0)
    t0 = 0.5
    f0, df0, _ = cr.eval(t0)
    nw = solve_warp(0.0, t0, f0, df0, bounds=(t0 - 0.2, t0 + 10))
    ts = np.linspace(nw.domain.lo, nw.domain.hi, 400)
    assert np.abs(nw.eval(ts)[0] - cr.eval(ts)[0]).max() < 1e-8


def test_solve_warp_records_collapse_near_cube_root_zero():
    cr = CubeRootWarp(0.3, 1.0)
    nw = solve_warp(0.0, 0.5, *cr.eval(0.5)[:2])
    assert nw.collapse_lo is not None
    assert nw.collapse_lo.t_star == pytest.approx(cr.domain.lo, abs=1e-6)
    with pytest.raises(DomainCollapse) as err:
        solve_warp(0.0, 0.5, *cr.eval(0.5)[:2], strict=True)
    assert err.value.t_star == pytest.approx(cr.domain.lo, abs=1e-6)


@pytest.mark.parametrize("a, b", [(0.7, 2.0), (-0.3, 1.0), (0.0, 1.5)])
def test_solve_warp_recovers_linear(a, b):
    nw = solve_warp(2 * a * a, 0.0, b, a, bounds=(-1.0, 2.0))
    ts = np.linspace(-1, 2, 200)
    assert np.abs(nw.eval(ts)[0] - LinearWarp(a, b).eval(ts)[0]).max() < 1e-10


def test_first_integral_drift():
    nw = solve_warp(0.5, 0.0, 1.0, 0.0, bounds=(-10, 10))
    assert nw.max_drift < 1e-8
    ts = np.linspace(-10, 10, 101)
    f, df, _ = nw.eval(ts)
    inv = f**4 * df**2 - 0.25 * f**4
    assert np.abs(inv - nw.first_integral).max() < 1e-8 * max(1, abs(nw.first_integral))


def test_nonpositive_initial():
    with pytest.raises(NonPositiveInitial):
        solve_warp(0.0, 0.0, 0.0, 1.0)


def test_numeric_second_derivative_is_the_ode():
    nw = solve_warp(1.2, 0.0, 1.0, 0.3, bounds=(0, 3))
    f, df, d2f = nw.eval(np.linspace(0, 3, 7))
    assert np.allclose(f * d2f + 2 * df**2, 1.2)


def test_phi_constant_warp_is_affine():
    sol = solve_phi(ConstantWarp(2.0), 0.0, 1.5, -0.5)
    assert isinstance(sol, AffinePhi)
    assert sol.eval(2.0) == (2.5, 1.5, 0.0)


def test_phi_linear_warp_euler_basis():
    mu, beta = 0.5, 1.0
    w = LinearWarp(mu, beta)
    sol = solve_phi(w, 0.0, 2.0, 3.0)
    assert isinstance(sol, EulerPhi)
    t = 1.7
    s = mu * t + beta
    assert sol.eval(t)[0] == pytest.approx(2 * s + 3 / s**3)
    assert abs(phi_residual(w, sol, 0.0, cheb(*w.sample_window())).max()) < 1e-8


def test_phi_equal_to_warp_has_zero_residual():
    w = LinearWarp(1.3, 0.2)
    sol = EulerPhi(1.0, 0.0, 1.3, 0.2)
    assert np.abs(phi_residual(w, sol, 0.0, np.linspace(0, 4, 30))).max() < 1e-14


def test_phi_zero_has_zero_residual():
    assert phi_residual(CubeRootWarp(0, 1), AffinePhi(0, 0), 0.0, 2.0) == 0


@pytest.mark.parametrize("rhs", [0.0, -3.0, 1.3])
def test_phi_linear_with_forcing(rhs):
    w = LinearWarp(-0.6, 4.0)
    sol = solve_phi(w, rhs, t0=1.0, phi0=0.2, dphi0=-1.0)
    assert sol.eval(1.0)[:2] == pytest.approx((0.2, -1.0))
    assert np.abs(phi_residual(w, sol, rhs, cheb(*w.sample_window()))).max() < 1e-8


def test_phi_numeric_on_cube_root():
    w = CubeRootWarp(0.2, 0.5)
    sol = solve_phi(w, 0.0)
    assert isinstance(sol, NumericPhi)
    ts = cheb(sol.domain.lo, sol.domain.hi)
    assert np.abs(phi_residual(w, sol, 0.0, ts)).max() < 1e-8


def test_phi_numeric_forced_on_numeric_warp():
    w = solve_warp(0.5, 0.0, 1.0, 0.2, bounds=(-3, 3))
    sol = solve_phi(w, -2.4)
    ts = cheb(sol.domain.lo, sol.domain.hi)
    assert np.abs(phi_residual(w, sol, -2.4, ts)).max() < 1e-6


def test_phi_general_n():
    w = LinearWarp(0.4, 1.0)
    sol = solve_phi(w, 0.7, 1.0, 1.0, n=2)
    ts = cheb(*w.sample_window())
    assert np.abs(phi_residual(w, sol, 0.7, ts, n=2)).max() < 1e-9


def test_csv_exports():
    w = LinearWarp(1.0, 1.0)
    text = warp_grid_csv(w, [0.0, 1.0])
    assert text.splitlines()[0] == "t,f,df,d2f"
    assert text.splitlines()[2] == "1.0,2.0,1.0,0.0"
    ptext = phi_grid_csv(AffinePhi(1.0, 0.0), [2.0])
    assert ptext == "t,phi,dphi\r\n2.0,2.0,1.0\r\n"
