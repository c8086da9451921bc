"""Eigendecomposition of the discrete operator and the boundary spectral data:
eigenvalues, h-orthonormal eigenvectors, and the weighted boundary traces
(phi/d^a at each endpoint).  Also the admissibility constants controlling how
large a potential the observability machinery tolerates."""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np
import scipy.linalg

from .errors import EigensolverFailure, FracspecError
from .opcore import (N_DIM, DiscreteOperator, FractionalOrder, Grid1D,
                     Potential, assemble_fractional_laplacian)

_EIG_RESID_TOL = 1e-10
_TRACE_STENCIL = 3


@dataclass(frozen=True)
class SpectralData:
    """First M eigenpairs with boundary traces; the full boundary spectral datum.

    modes are columns, orthonormal in <u,v> = h * sum(u_i v_i).  traces[m] is
    (phi_m/d^a)(left), (phi_m/d^a)(right) by one-sided extrapolation.  Signs
    follow the convention tau_right >= 0 (tau_left >= 0 on ties).
    """

    lambdas: np.ndarray
    modes: np.ndarray
    traces: np.ndarray
    grid: Grid1D
    order: FractionalOrder
    potential: Potential

    def __post_init__(self):
        for name in ("lambdas", "modes", "traces"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def m_modes(self) -> int:
        return self.lambdas.shape[0]


@dataclass(frozen=True)
class AdmissibilityConstants:
    """Hardy-Sobolev constant, domain radius, and the potential size bound."""

    c_hs: float
    radius: float
    theta_max: float


@dataclass(frozen=True)
class TraceBoundReport:
    c_dom: float
    ratios: np.ndarray
    flagged: bool


def _intercept_weights(d: np.ndarray) -> np.ndarray:
    """Closed-form weights of the least-squares linear fit intercept at d = 0."""
    dbar = d.mean()
    sdd = np.sum((d - dbar) ** 2)
    return 1.0 / d.size - dbar * (d - dbar) / sdd


def trace_extraction_matrix(grid: Grid1D, order: FractionalOrder) -> np.ndarray:
    """(2, n) matrix W with W @ u = one-sided extrapolations of u/d^a to the
    two endpoints, linear in d over the three nodes nearest each endpoint."""
    n, a = grid.n, order.a
    if n < 2 * _TRACE_STENCIL:
        raise FracspecError(f"trace extrapolation needs >= {2*_TRACE_STENCIL} nodes")
    W = np.zeros((2, n))
    dl = grid.nodes[:_TRACE_STENCIL] - grid.left
    W[0, :_TRACE_STENCIL] = _intercept_weights(dl) / dl ** a
    dr = grid.right - grid.nodes[-_TRACE_STENCIL:]
    W[1, -_TRACE_STENCIL:] = _intercept_weights(dr) / dr ** a
    return W


def boundary_trace(mode: np.ndarray, grid: Grid1D, order: FractionalOrder) -> tuple[float, float]:
    """Extrapolated (phi/d^a)(left), (phi/d^a)(right) for one grid function."""
    W = trace_extraction_matrix(grid, order)
    tl, tr = W @ np.asarray(mode, dtype=float)
    return float(tl), float(tr)


def eigendecompose(op: DiscreteOperator, m_modes: int) -> SpectralData:
    """First m_modes eigenpairs of the dense symmetric matrix, h-orthonormal,
    with traces filled and the sign convention applied."""
    n = op.grid.n
    if not 1 <= m_modes <= n:
        raise FracspecError(f"mode count {m_modes} outside 1..{n}")
    lam, vec = scipy.linalg.eigh(op.matrix)
    spectral_radius = max(abs(lam[0]), abs(lam[-1]))     # LAPACK backward-error scale
    lam = lam[:m_modes]
    vec = vec[:, :m_modes] / sqrt(op.grid.h)

    resid = np.linalg.norm(op.matrix @ vec - vec * lam, axis=0) * sqrt(op.grid.h)
    resid /= spectral_radius
    if np.any(resid > _EIG_RESID_TOL):
        raise EigensolverFailure(list(resid))

    W = trace_extraction_matrix(op.grid, op.order)
    traces = (W @ vec).T                      # (M, 2)
    flip = (traces[:, 1] < 0) | ((traces[:, 1] == 0) & (traces[:, 0] < 0))
    vec[:, flip] *= -1.0
    traces[flip] *= -1.0
    return SpectralData(lambdas=lam, modes=vec, traces=traces,
                        grid=op.grid, order=op.order, potential=op.potential)


def default_mode_count(n: int) -> int:
    """Upper quarter of the discrete spectrum is discretization-polluted."""
    return min(n // 4, 64)


def check_trace_bound(data: SpectralData) -> TraceBoundReport:
    """Per-mode ratios ||tau_n|| / |lambda_n| and the fitted domain constant.

    Flags a violation when the ratios increase monotonically over the last
    half of the retained modes by more than 50%.
    """
    if data.m_modes < 5:
        raise FracspecError("trace-bound check needs at least 5 modes")
    norms = np.linalg.norm(data.traces, axis=1)
    ratios = norms / np.abs(data.lambdas)
    half = ratios[data.m_modes // 2:]
    flagged = bool(np.all(np.diff(half) > 0) and half[-1] > 1.5 * half[0])
    return TraceBoundReport(c_dom=float(ratios.max()), ratios=ratios, flagged=flagged)


def admissibility(grid: Grid1D, order: FractionalOrder) -> AdmissibilityConstants:
    """C_HS as the sharp discrete Poincare constant 1/lambda_1 of the
    potential-free operator, R = max|x| over the closure, and the Theorem-1.3
    size bound theta_max = 1/2 (1 + C_HS (N/2 + R))^{-1}."""
    A = assemble_fractional_laplacian(grid, order).matrix
    lam1 = scipy.linalg.eigh(A, eigvals_only=True, subset_by_index=(0, 0))[0]
    c_hs = 1.0 / lam1
    radius = max(abs(grid.left), abs(grid.right))
    theta_max = 0.5 / (1.0 + c_hs * (N_DIM / 2.0 + radius))
    return AdmissibilityConstants(c_hs=float(c_hs), radius=float(radius),
                                  theta_max=float(theta_max))


def validate_theta_admissible(q: Potential, grid: Grid1D, order: FractionalOrder,
                              margin: float = 0.05) -> Potential:
    """Check non-negativity, the theta_max size and slope bounds, and compact
    support away from both endpoints; returns the potential with the flag set."""
    consts = admissibility(grid, order)
    v = q.values
    if np.any(v < 0):
        raise FracspecError("admissible potential must be non-negative")
    if v.max(initial=0.0) > consts.theta_max:
        raise FracspecError(
            f"max|q| = {v.max():.4g} exceeds theta_max = {consts.theta_max:.4g}")
    slope = np.abs(np.diff(v)) / grid.h
    if slope.max(initial=0.0) > consts.theta_max:
        raise FracspecError(
            f"max|dq/dx| = {slope.max():.4g} exceeds theta_max = {consts.theta_max:.4g}")
    margin_len = margin * (grid.right - grid.left)
    near_edge = (grid.dist < margin_len)
    if np.any(v[near_edge] != 0):
        raise FracspecError(f"admissible potential must vanish within {margin_len:.4g} of the boundary")
    return Potential(values=v, theta_admissible=True)
