"""Adjoint heat evolution, the finite-mode fractional wave equation with its
energy, the Pohozaev/multiplier and equipartition identities, wave and heat
observability checks, and the reachability Gramian behind the density lemma."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import simpson

from .errors import FracspecError, ObservabilityFailure
from .forward import BoundaryFunction, solve_parabolic
from .opcore import N_DIM, gamma_factors
from .spectral import SpectralData


@dataclass(frozen=True)
class WaveState:
    """Finite-mode wave configuration: coefficients pos_j, velocities vel_j for
    the first J modes of the referenced spectral data."""

    pos: np.ndarray
    vel: np.ndarray
    data: SpectralData
    time: float = 0.0

    def __post_init__(self):
        p = np.asarray(self.pos, dtype=float)
        v = np.asarray(self.vel, dtype=float)
        if p.shape != v.shape or p.ndim != 1:
            raise FracspecError("pos and vel must be 1-D arrays of equal length")
        if p.size > self.data.m_modes:
            raise FracspecError(f"state has {p.size} modes, data only {self.data.m_modes}")
        p.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "pos", p)
        object.__setattr__(self, "vel", v)

    @property
    def j_modes(self) -> int:
        return self.pos.size


@dataclass(frozen=True)
class AdjointHeatSolution:
    """Backward heat solution by the per-mode rule <u, phi_n>(t) =
    e^{-lambda_n (T - t)} g_n with terminal data coefficients g_n."""

    terminal_coeffs: np.ndarray
    horizon: float
    data: SpectralData

    def coeffs_at(self, t: float) -> np.ndarray:
        return np.exp(-self.data.lambdas * (self.horizon - t)) * self.terminal_coeffs

    def trace_at(self, t: float) -> np.ndarray:
        """Boundary pair of u(t)/d^a via the trace series."""
        return self.coeffs_at(t) @ self.data.traces

    def norm_at(self, t: float) -> float:
        return float(np.linalg.norm(self.coeffs_at(t)))


def adjoint_heat(data: SpectralData, g: np.ndarray, horizon: float) -> AdjointHeatSolution:
    """Backward-exponential evolution from terminal data g on the grid."""
    if horizon <= 0:
        raise FracspecError(f"horizon must be positive, got {horizon}")
    gn = data.grid.h * (data.modes.T @ np.asarray(g, dtype=float))
    return AdjointHeatSolution(terminal_coeffs=gn, horizon=float(horizon), data=data)


@dataclass(frozen=True)
class HeatObservabilityReport:
    lhs: float                 # boundary observation integral
    rhs: float                 # ||u(0)||^2 (primary, squared version)
    ratio: float               # empirical observability constant rhs/lhs
    norm_u0: float             # unsquared ||u(0)|| as stated in the source bound


def _xnu(data: SpectralData) -> np.ndarray:
    """x . nu at (left, right): nu = -1 at the left endpoint, +1 at the right."""
    return np.array([-data.grid.left, data.grid.right])


def heat_observability_check(data: SpectralData, g: np.ndarray, horizon: float,
                             eps: float = 0.0, nquad: int = 2048) -> HeatObservabilityReport:
    """lhs = int_0^{T-eps} sum_boundary (u/d^a)^2 (x.nu) dt by quadrature of the
    per-mode trace series; rhs = ||u(0)||^2."""
    if not 0.0 <= eps < horizon:
        raise FracspecError(f"need 0 <= eps < T, got eps={eps}, T={horizon}")
    sol = adjoint_heat(data, g, horizon)
    t = np.linspace(0.0, horizon - eps, nquad + 1)
    decay = np.exp(-np.outer(horizon - t, data.lambdas))
    traces = (decay * sol.terminal_coeffs) @ data.traces     # (nt, 2)
    w = _xnu(data)
    lhs = float(simpson(traces[:, 0] ** 2 * w[0] + traces[:, 1] ** 2 * w[1], x=t))
    norm_u0 = sol.norm_at(0.0)
    rhs = norm_u0 ** 2
    ratio = rhs / lhs if lhs > 0 else np.inf
    return HeatObservabilityReport(lhs=lhs, rhs=rhs, ratio=ratio, norm_u0=norm_u0)


def evolve_wave(state: WaveState, t: float) -> WaveState:
    """Exact per-mode rotation by duration t; no time discretization error."""
    lam = state.data.lambdas[:state.j_modes]
    if np.any(lam <= 0):
        raise FracspecError("wave evolution needs strictly positive eigenvalues")
    om = np.sqrt(lam)
    c, s = np.cos(om * t), np.sin(om * t)
    pos = state.pos * c + state.vel * s / om
    vel = -state.pos * om * s + state.vel * c
    return replace(state, pos=pos, vel=vel, time=state.time + t)


def wave_energy(state: WaveState) -> float:
    """E_a = 1/2 sum (vel_j^2 + lambda_j pos_j^2); the quadratic form plus
    potential terms collapse to lambda_j pos_j^2 in the eigenbasis."""
    lam = state.data.lambdas[:state.j_modes]
    return float(0.5 * np.sum(state.vel ** 2 + lam * state.pos ** 2))


def _mode_tables(state: WaveState, tgrid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact p_j(t), p_j'(t) tables on tgrid, started from the state."""
    lam = state.data.lambdas[:state.j_modes]
    om = np.sqrt(lam)
    phase = np.outer(tgrid - state.time, om)
    c, s = np.cos(phase), np.sin(phase)
    P = c * state.pos + s * (state.vel / om)
    Pt = -s * (om * state.pos) + c * state.vel
    return P, Pt


def _grad(u: np.ndarray, h: float) -> np.ndarray:
    """Centered differences with one-sided closures at the first/last node."""
    g = np.empty_like(u)
    g[..., 1:-1] = (u[..., 2:] - u[..., :-2]) / (2.0 * h)
    g[..., 0] = (u[..., 1] - u[..., 0]) / h
    g[..., -1] = (u[..., -1] - u[..., -2]) / h
    return g


@dataclass(frozen=True)
class MultiplierReport:
    lhs: float
    rhs: float
    residual: float


def pohozaev_residual(data: SpectralData, init: WaveState, eps: float, horizon: float,
                      nquad: int = 4096) -> MultiplierReport:
    """Both sides of the finite-mode multiplier identity

        Gamma(1+a)^2/2 int_eps^T sum_bdry (x.nu) |p/d^a|^2 dt
          = a (T - eps) E_a(eps)
            + [ int p_t (x . grad p + (N-a)/2 p) dx ]_eps^T
            - int_eps^T int (a q + x . grad q / 2) p^2 dx dt

    with x . grad p by centered differences and composite-Simpson time
    quadrature.  The time-window factor multiplies (T - eps) and the potential
    term carries the coefficient a, as the energy/equipartition bookkeeping of
    the derivation requires.
    """
    if init.j_modes > 10:
        raise FracspecError("dense multiplier quadrature is limited to J <= 10")
    if not 0.0 <= eps < horizon:
        raise FracspecError(f"need 0 <= eps < T, got eps={eps}, T={horizon}")
    a = data.order.a
    grid = data.grid
    J = init.j_modes
    tg = np.linspace(eps, horizon, nquad + 1)
    P, Pt = _mode_tables(init, tg)
    p = P @ data.modes[:, :J].T                      # (nt, n)
    pt = Pt @ data.modes[:, :J].T
    bdry_tr = P @ data.traces[:J]                    # (nt, 2)
    w = _xnu(data)
    g_poh = gamma_factors(data.order).g_poh
    lhs = 0.5 * g_poh * float(simpson(bdry_tr[:, 0] ** 2 * w[0] + bdry_tr[:, 1] ** 2 * w[1], x=tg))

    lam = data.lambdas[:J]
    energy_eps = 0.5 * float(np.sum(Pt[0] ** 2 + lam * P[0] ** 2))
    gradp = _grad(p, grid.h)
    xi = grid.h * np.sum(pt * (grid.nodes * gradp + (N_DIM - a) / 2.0 * p), axis=1)
    q = data.potential.values
    qterm = 0.0
    if q.any():
        qgrad = _grad(q, grid.h)
        weight = a * q + grid.nodes * qgrad / 2.0
        qterm = float(simpson(grid.h * np.sum(weight * p ** 2, axis=1), x=tg))
    rhs = a * (horizon - eps) * energy_eps + (xi[-1] - xi[0]) - qterm
    residual = abs(lhs - rhs) / max(abs(lhs) + abs(rhs), 1e-300)
    return MultiplierReport(lhs=float(lhs), rhs=float(rhs), residual=float(residual))


def equipartition_residual(data: SpectralData, init: WaveState, eps: float,
                           horizon: float, nquad: int = 4096) -> float:
    """Residual of  -iint p_t^2 + iint |(-D)^{a/2} p|^2 + [int p_t p]_eps^T
    + iint q p^2 = 0, the pure quadratic form evaluated in the eigenbasis as
    sum lambda_j p_j^2 - int q p^2."""
    if not 0.0 <= eps < horizon:
        raise FracspecError(f"need 0 <= eps < T, got eps={eps}, T={horizon}")
    grid = data.grid
    J = init.j_modes
    tg = np.linspace(eps, horizon, nquad + 1)
    P, Pt = _mode_tables(init, tg)
    p = P @ data.modes[:, :J].T
    pt = Pt @ data.modes[:, :J].T
    lam = data.lambdas[:J]
    qp2 = grid.h * np.sum(data.potential.values * p ** 2, axis=1)
    t1 = -float(simpson(np.sum(Pt ** 2, axis=1), x=tg))
    t2 = float(simpson(np.sum(lam * P ** 2, axis=1) - qp2, x=tg))
    cross = grid.h * np.sum(pt * p, axis=1)
    t3 = float(cross[-1] - cross[0])
    t4 = float(simpson(qp2, x=tg))
    scale = max(abs(t1), abs(t2), abs(t3), abs(t4), 1e-300)
    return abs(t1 + t2 + t3 + t4) / scale


@dataclass(frozen=True)
class WaveObservabilityReport:
    worst_ratio: float
    calibrated_c: float
    t0: float                  # calibrated minimal observation time C lambda_J^{1-a}
    required_c: np.ndarray     # per-trial smallest admissible constant
    seed: int


def wave_observability(data: SpectralData, J: int, horizon: float, trials: int,
                       seed: int = 0, eps: float = 0.0, nquad: int = 4096,
                       c_cap: float = 1e6) -> WaveObservabilityReport:
    """Calibrate the constant C in T_0(J) = C lambda_J^{1-a} as the smallest
    value making

        r = 2a (T - T_0) E_a(T*) / ( Gamma(1+a)^2 int_eps^T sum (x.nu)|p/d^a|^2 dt )

    at most 1 over seeded random unit-sphere initial data in H_J, checked at
    T* in {0, T/2, T} (energy is conserved exactly, so the three agree)."""
    if J > data.m_modes:
        raise FracspecError(f"J={J} exceeds available modes {data.m_modes}")
    a = data.order.a
    g_poh = gamma_factors(data.order).g_poh
    w = _xnu(data)
    lamJ = data.lambdas[J - 1]
    rng = np.random.default_rng(seed)
    tg = np.linspace(eps, horizon, nquad + 1)
    required = np.zeros(trials)
    energies = np.zeros(trials)
    observations = np.zeros(trials)
    for k in range(trials):
        ab = rng.standard_normal(2 * J)
        ab /= np.linalg.norm(ab)
        state = WaveState(pos=ab[:J], vel=ab[J:], data=data)
        P, _ = _mode_tables(state, tg)
        tr = P @ data.traces[:J]
        obs = float(simpson(tr[:, 0] ** 2 * w[0] + tr[:, 1] ** 2 * w[1], x=tg))
        energy = max(wave_energy(state),
                     wave_energy(evolve_wave(state, horizon / 2.0)),
                     wave_energy(evolve_wave(state, horizon)))
        required[k] = (horizon - g_poh * obs / (2.0 * a * energy)) / lamJ ** (1.0 - a)
        energies[k] = energy
        observations[k] = obs
    c_cal = float(max(required.max(), 0.0))
    if c_cal > c_cap:
        raise ObservabilityFailure(
            f"required constant {c_cal:.3e} exceeds cap {c_cap:.3e}; "
            "observation integral suspiciously small")
    t0 = c_cal * lamJ ** (1.0 - a)
    ratios = 2.0 * a * (horizon - t0) * energies / (g_poh * observations)
    return WaveObservabilityReport(worst_ratio=float(ratios.max()), calibrated_c=c_cal,
                                   t0=float(t0), required_c=required, seed=seed)


def density_gramian(data: SpectralData, horizon: float, t_slice: float,
                    basis: list[BoundaryFunction]) -> tuple[np.ndarray, np.ndarray]:
    """Gram matrix of the states u_F(t_slice) reachable from the basis of
    boundary inputs, and the smallest singular value of the reachability map
    onto span(phi_1..phi_m) for m = 1..min(M, len(basis)).

    Positivity of the singular values is the finite-dimensional shadow of the
    time-slice density lemma.
    """
    if not basis:
        raise FracspecError("basis must be non-empty")
    if t_slice > horizon:
        raise FracspecError(f"slice time {t_slice} beyond horizon {horizon}")
    cols = []
    for f in basis:
        if f.horizon < t_slice:
            raise FracspecError("every basis element must reach the slice time")
        sol = solve_parabolic(data, f)
        k = float(t_slice) / sol.times[1]
        k0 = int(np.floor(k))
        if k0 >= sol.times.size - 1:
            cols.append(sol.coeffs[-1])
        else:
            frac = k - k0
            cols.append((1.0 - frac) * sol.coeffs[k0] + frac * sol.coeffs[k0 + 1])
    Y = np.array(cols).T                                 # (M, B)
    gram = Y.T @ Y
    m_max = min(data.m_modes, len(basis))
    sigmas = np.array([np.linalg.svd(Y[:m], compute_uv=False).min()
                       for m in range(1, m_max + 1)])
    return gram, sigmas
