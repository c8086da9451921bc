import numpy as np
import pytest

import fracspec as fs
from fracspec.errors import FracspecError, NoConvergence, SpectralCollision
from fracspec.forward import dn_series_direct
from fracspec.opcore import gamma_factors

from oracles import crank_nicolson_forced


F_MIXED = (1.0, 0.4)


def test_boundary_pairing():
    assert fs.boundary_pairing((0.0, 0.0), (1.3, -0.4)) == 0.0
    assert fs.boundary_pairing((1.0, 0.0), (1.3, -0.4)) == pytest.approx(1.3)
    t = (0.7, -2.0)
    lhs = fs.boundary_pairing((2.0 * 1.0 + 0.5, 2.0 * 0.3 + 1.0), t)
    rhs = 2.0 * fs.boundary_pairing((1.0, 0.3), t) + fs.boundary_pairing((0.5, 1.0), t)
    assert lhs == pytest.approx(rhs, rel=1e-14)


def test_boundary_function_invariants():
    f = fs.boundary_function("bump", 1.0, 64, side="left")
    assert np.all(f.values[0] == 0.0)
    assert f.values[f.times <= f.lead_margin].max(initial=0.0) == 0.0
    assert f.values[f.times >= f.horizon - f.trail_margin].max(initial=0.0) == 0.0
    with pytest.raises(FracspecError):
        fs.boundary_function("bump", 1.0, 8)
    with pytest.raises(FracspecError):
        fs.BoundaryFunction(times=np.linspace(0, 1, 17),
                            values=np.ones((17, 2)))     # nonzero at t = 0


def test_elliptic_series_zero_data(data06):
    sol = fs.solve_elliptic_series(data06, 2.0 + 1.0j, (0.0, 0.0))
    assert np.all(sol.coeffs == 0.0)
    assert np.all(sol.materialize() == 0.0)


def test_elliptic_series_collision(data06):
    with pytest.raises(SpectralCollision):
        fs.solve_elliptic_series(data06, complex(data06.lambdas[3]), F_MIXED)


def test_series_algebraic_identity(data06, grid256, order06):
    # (A + q - lam) (truncated series) = Gamma(a)Gamma(a+1) sum <F,tau_n> phi_n
    op = fs.assemble_fractional_laplacian(grid256, order06)
    lam = -3.0 + 0.7j
    sol = fs.solve_elliptic_series(data06, lam, F_MIXED)
    v = sol.materialize()
    g = gamma_factors(order06).g_ibp
    pair = data06.traces @ np.asarray(F_MIXED)
    rhs = data06.modes @ (g * pair)
    lhs = op.matrix @ v - lam * v
    assert np.abs(lhs - rhs).max() <= 1e-12 * np.abs(rhs).max()


def test_deep_resolvent_norm_bound(data06):
    lam = data06.lambdas[0] - 1e6
    sol = fs.solve_elliptic_series(data06, lam, F_MIXED)
    g = gamma_factors(data06.order).g_ibp
    pair = data06.traces @ np.asarray(F_MIXED)
    bound = g * np.linalg.norm(pair) / 1e6
    assert np.linalg.norm(sol.coeffs) <= bound * (1.0 + 1e-6)


def test_resolvent_difference_identity(data06):
    lam1, lam2 = -2.0 + 0.5j, 3.7 + 0.2j
    s1 = fs.solve_elliptic_series(data06, lam1, F_MIXED)
    s2 = fs.solve_elliptic_series(data06, lam2, F_MIXED)
    g = gamma_factors(data06.order).g_ibp
    pair = data06.traces @ np.asarray(F_MIXED)
    expected = g * (lam1 - lam2) / ((lam1 - data06.lambdas) * (lam2 - data06.lambdas)) * pair
    assert np.abs(s1.coeffs - s2.coeffs - expected).max() <= 1e-12 * np.abs(expected).max()


def test_neumann_difference_series_basics(data06):
    same = fs.neumann_difference_series(data06, 2.0 + 1j, 2.0 + 1j, F_MIXED)
    assert np.all(same.values == 0.0)
    zero = fs.neumann_difference_series(data06, 2.0 + 1j, -4.0, (0.0, 0.0))
    assert np.all(zero.values == 0.0)
    ab = fs.neumann_difference_series(data06, 2.0 + 1j, -4.0, F_MIXED)
    ba = fs.neumann_difference_series(data06, -4.0, 2.0 + 1j, F_MIXED)
    assert np.allclose(ab.values, -ba.values, rtol=1e-13)


def test_dn_map_zero_and_limit_consistency(data06):
    zero = fs.dn_map(data06, -1.5, (0.0, 0.0), l_max=64, K=12)
    assert np.all(zero.values == 0.0)
    sample = fs.dn_map(data06, -1.5, F_MIXED, l_max=4096, K=12)
    direct = dn_series_direct(data06, -1.5, F_MIXED, K=12)
    gap = np.abs(sample.values - direct.values).max()
    assert gap <= 2.0 * sample.convergence_estimate


def test_dn_map_symmetric_data(data06):
    sample = fs.dn_map(data06, -2.0, (1.0, 1.0), l_max=512, K=8)
    assert sample.values[0] == pytest.approx(sample.values[1], rel=1e-10)


def test_dn_map_no_convergence(data06):
    with pytest.raises(NoConvergence):
        fs.dn_map(data06, -1.5, F_MIXED, l_max=16, tol=1e-14, K=12)


def test_parabolic_zero_forcing(data06):
    f = fs.BoundaryFunction(times=np.linspace(0, 1, 65), values=np.zeros((65, 2)))
    sol = fs.solve_parabolic(data06, f)
    assert np.all(sol.coeffs == 0.0)


def test_parabolic_exact_for_piecewise_linear_forcing(data06):
    # hat data is exactly piecewise linear, so the exponential integrator must
    # reproduce the Duhamel integral to quadrature accuracy
    from scipy.integrate import quad
    f = fs.boundary_function("hat", 1.0, 128, side="left", t0=0.25, t1=0.75)
    sol = fs.solve_parabolic(data06, f)
    g = gamma_factors(data06.order).g_ibp
    for m in (0, 4):
        lam = data06.lambdas[m]
        tau = data06.traces[m]

        def forcing(s):
            val = np.interp(s, f.times, f.values[:, 0])
            return np.exp(-lam * (1.0 - s)) * val * tau[0]

        ref, _ = quad(forcing, 0.0, 1.0, points=[0.25, 0.5, 0.75], limit=200,
                      epsabs=1e-13, epsrel=1e-13)
        assert sol.coeffs[-1, m] == pytest.approx(-g * ref, rel=1e-10)


def test_parabolic_matches_crank_nicolson(grid256, order06):
    # independent time-integrator oracle on the full discrete system
    from fracspec.spectral import trace_extraction_matrix
    data = fs.eigendecompose(fs.assemble_fractional_laplacian(grid256, order06), grid256.n)
    f = fs.boundary_function("bump", 0.5, 2048, side="left", t0=0.05, t1=0.3)
    sol = fs.solve_parabolic(data, f)
    duh = sol.coeffs @ data.modes.T
    g = gamma_factors(order06).g_ibp
    W = trace_extraction_matrix(grid256, order06)
    source = -g / grid256.h * W.T
    L = fs.assemble_fractional_laplacian(grid256, order06).matrix
    cn = crank_nicolson_forced(L, source, f.values, f.dt)
    num = np.sqrt(grid256.h * f.dt * np.sum((duh - cn) ** 2))
    den = np.sqrt(grid256.h * f.dt * np.sum(cn ** 2))
    assert num / den < 1e-4


def test_parabolic_causality(data06):
    base = fs.boundary_function("bump", 1.0, 256, side="left", t0=0.1, t1=0.5)
    vals = base.values.copy()
    k_cut = 160
    vals[k_cut + 1:, 1] += np.linspace(0, 0.5, vals.shape[0] - k_cut - 1)
    # keep the trailing margin legal for the constructor
    other = fs.BoundaryFunction(times=base.times, values=vals)
    c1 = fs.solve_parabolic(data06, base).coeffs
    c2 = fs.solve_parabolic(data06, other).coeffs
    assert np.array_equal(c1[:k_cut + 1], c2[:k_cut + 1])
    assert not np.array_equal(c1, c2)


def test_parabolic_linearity(data06):
    f1 = fs.boundary_function("bump", 1.0, 512, side="left")
    f2 = fs.boundary_function("sine2", 1.0, 512, side="right")
    combo = fs.BoundaryFunction(times=f1.times, values=2.0 * f1.values + f2.values)
    c = fs.solve_parabolic(data06, combo).coeffs
    c12 = 2.0 * fs.solve_parabolic(data06, f1).coeffs + fs.solve_parabolic(data06, f2).coeffs
    assert np.allclose(c, c12, atol=1e-14, rtol=1e-12)


def test_extend_parabolic(data06):
    f = fs.boundary_function("bump", 1.0, 512, side="left", t0=0.1, t1=0.6)
    sol = fs.solve_parabolic(data06, f)
    at_T, tail = fs.extend_parabolic(sol, sol.horizon)
    assert np.array_equal(at_T, sol.coeffs[-1])
    later, _ = fs.extend_parabolic(sol, 5.0)
    assert np.all(np.abs(later) <= np.abs(at_T))
    # semigroup: extending to t1 then t2 equals extending directly
    mid, _ = fs.extend_parabolic(sol, 2.0)
    direct, _ = fs.extend_parabolic(sol, 3.5)
    stepped = np.exp(-data06.lambdas * 1.5) * mid
    assert np.allclose(stepped, direct, rtol=1e-13)


def test_extend_parabolic_tail_mass_quadrature_oracle(data06):
    f = fs.boundary_function("bump", 1.0, 512, side="left", t0=0.1, t1=0.6)
    sol = fs.solve_parabolic(data06, f)
    _, tail = fs.extend_parabolic(sol, sol.horizon)
    # independent quadrature of int_T^{T+40/lam1} ||w||^2 dt
    lam1 = data06.lambdas[0]
    tq = np.linspace(0.0, 40.0 / lam1, 200001)
    decay = np.exp(-np.outer(tq, data06.lambdas))
    norms2 = np.sum((decay * sol.coeffs[-1]) ** 2, axis=1)
    from scipy.integrate import simpson
    quad = simpson(norms2, x=tq)
    assert quad == pytest.approx(tail, rel=1e-6)


def test_laplace_boundary_closed_forms():
    T, K = 1.0, 512
    f0 = fs.BoundaryFunction(times=np.linspace(0, T, K + 1), values=np.zeros((K + 1, 2)))
    assert np.all(fs.laplace_boundary(f0, 1.0 + 0.5j) == 0.0)
    # unit hat on [t1, t2] at the left point only
    t1, t2 = 0.25, 0.75
    hat = fs.boundary_function("hat", T, K, side="left", t0=t1, t1=t2)
    s = 2.0
    got = fs.laplace_boundary(hat, s)
    mid = 0.5 * (t1 + t2)
    # piecewise-linear closed form: int e^{-st} hat(t) dt
    def ramp(a, b, ya, yb):
        sl = (yb - ya) / (b - a)
        return (np.exp(-s * a) * (ya / s + sl / s ** 2)
                - np.exp(-s * b) * (yb / s + sl / s ** 2))
    exact = ramp(t1, mid, 0.0, 1.0) + ramp(mid, t2, 1.0, 0.0)
    assert got[0] == pytest.approx(exact, rel=1e-10)
    assert got[1] == 0.0
    with pytest.raises(FracspecError):
        fs.laplace_boundary(hat, -1.0)


def test_laplace_boundary_linearity():
    f1 = fs.boundary_function("bump", 1.0, 256, side="left")
    f2 = fs.boundary_function("sine2", 1.0, 256, side="both")
    combo = fs.BoundaryFunction(times=f1.times, values=f1.values + 2.0 * f2.values)
    s = 1.0 + 1.0j
    lhs = fs.laplace_boundary(combo, s)
    rhs = fs.laplace_boundary(f1, s) + 2.0 * fs.laplace_boundary(f2, s)
    assert np.allclose(lhs, rhs, rtol=1e-13)


def test_laplace_consistency_zero_data(data06):
    f = fs.BoundaryFunction(times=np.linspace(0, 1, 65), values=np.zeros((65, 2)))
    assert fs.verify_laplace_consistency(data06, f, 1.0) == 0.0


def test_laplace_consistency_single_mode(grid256, order06):
    data = fs.eigendecompose(fs.assemble_fractional_laplacian(grid256, order06), 1)
    f = fs.boundary_function("bump", 1.0, 8192, side="left", t0=0.1, t1=0.6)
    assert fs.verify_laplace_consistency(data, f, 1.0) <= 1e-8


@pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
def test_laplace_consistency_smooth_bump(data06, s):
    f = fs.boundary_function("bump", 1.0, 4096, side="left", t0=0.1, t1=0.6)
    assert fs.verify_laplace_consistency(data06, f, s) < 1e-6


def test_laplace_dn_zero_and_determinism(data06):
    f0 = fs.BoundaryFunction(times=np.linspace(0, 1, 65), values=np.zeros((65, 2)))
    z = fs.laplace_dn(data06, f0, 1.0, l_max=64, K=8)
    assert np.all(z.values == 0.0)
    f = fs.boundary_function("bump", 1.0, 256, side="left")
    a1 = fs.laplace_dn(data06, f, 1.0, l_max=256, K=8)
    a2 = fs.laplace_dn(data06, f, 1.0, l_max=256, K=8)
    assert np.array_equal(a1.values, a2.values)


def test_ibp_cross_residual_decreases(order06):
    F = (1.0, 0.7)
    sizes = (128, 256)
    worst = {}
    for n in sizes:
        coarse = fs.eigendecompose(
            fs.assemble_fractional_laplacian(fs.build_grid(-1, 1, n), order06), 8)
        fine = fs.eigendecompose(
            fs.assemble_fractional_laplacian(fs.build_grid(-1, 1, 2 * n + 1), order06), 8)
        res = []
        for lam in (-1.0 + 0.3j, 2.0 + 1.0j, -25.0):
            res.append(fs.ibp_cross_residual(coarse, fine, lam, F, 5).max())
        worst[n] = max(res)
    assert worst[256] < worst[128]
    assert worst[256] < 2e-2
