"""Grids, Gamma-factor constants, and the dense discrete restricted fractional
Laplacian with zero exterior condition on a uniform 1-D grid.

The operator matrix is the mass-lumped P1 stiffness of the singular-kernel
bilinear form.  On a uniform grid the hat-hat entries of the form

    (C_{1,a}/2) * iint (u(x)-u(y)) (v(x)-v(y)) |x-y|^{-1-2a} dx dy

have an exact closed form: dividing by h, the matrix is Toeplitz with symbol
given by the fourth central difference of  |k|^{3-2a}.  This removes the
principal-value singularity analytically (the kernel is integrated exactly
against the piecewise-linear interpolant, exterior tails included) and makes
the matrix symmetric and positive definite by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import gamma, pi, sqrt

import numpy as np
from scipy.linalg import toeplitz

from .errors import FracspecError, GridMismatch

# Dimension is fixed to 1 but kept symbolic where formulas contain it.
N_DIM = 1.0

# Switch to the analytic a -> 1/2 limit of the Toeplitz symbol below this gap.
_HALF_TOL = 1e-9


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid of n interior nodes on (left, right); dist is the distance
    to the nearer endpoint."""

    left: float
    right: float
    n: int
    h: float
    nodes: np.ndarray
    dist: np.ndarray


@dataclass(frozen=True)
class FractionalOrder:
    """Fractional exponent a.  The admissible range is 0.5 <= a < 1; the left
    endpoint is included because the acceptance checks evaluate at a = 0.5."""

    a: float

    def __post_init__(self):
        if not (0.5 <= self.a < 1.0):
            raise FracspecError(f"fractional order must satisfy 0.5 <= a < 1, got {self.a}")


@dataclass(frozen=True)
class Potential:
    """Node-sampled potential.  theta_admissible marks a verified small,
    non-negative, slowly varying, compactly supported potential."""

    values: np.ndarray
    theta_admissible: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class GammaFactors:
    """Gamma-function constants weighting the boundary formulas."""

    g_ibp: float   # Gamma(a) * Gamma(a+1)
    g_poh: float   # Gamma(1+a)^2


@dataclass(frozen=True)
class DiscreteOperator:
    """Dense symmetric realization of (-Delta)^a + q on a grid."""

    matrix: np.ndarray
    grid: Grid1D
    order: FractionalOrder
    potential: Potential

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


def build_grid(left: float, right: float, n: int) -> Grid1D:
    """Uniform interior grid: nodes[i] = left + (i+1) h, h = (right-left)/(n+1)."""
    if n < 2:
        raise FracspecError(f"need at least 2 interior nodes, got {n}")
    if not right > left:
        raise FracspecError(f"degenerate interval [{left}, {right}]")
    h = (right - left) / (n + 1)
    nodes = left + h * np.arange(1, n + 1)
    dist = np.minimum(nodes - left, right - nodes)
    nodes.setflags(write=False)
    dist.setflags(write=False)
    return Grid1D(left=float(left), right=float(right), n=int(n), h=h, nodes=nodes, dist=dist)


def gamma_factors(order: FractionalOrder) -> GammaFactors:
    a = order.a
    return GammaFactors(g_ibp=gamma(a) * gamma(a + 1.0), g_poh=gamma(1.0 + a) ** 2)


def normalization_constant(order: FractionalOrder) -> float:
    """Kernel constant, positive convention: 4^a Gamma(1/2+a) / (sqrt(pi) |Gamma(-a)|).

    The textbook formula carries Gamma(-a) < 0; the absolute value keeps the
    assembled operator positive definite, which every downstream identity
    assumes.
    """
    a = order.a
    return 4.0 ** a * gamma(0.5 + a) / (sqrt(pi) * abs(gamma(-a)))


def _toeplitz_symbol(a: float, n: int) -> np.ndarray:
    """g_k = D4[|t|^{3-2a}](k) / (2a (1-2a) (2-2a) (3-2a)) for k = 0..n-1.

    At a = 1/2 both numerator and denominator vanish; the limit replaces
    |t|^{3-2a} by t^2 log|t| and the denominator by 2.
    """
    k = np.arange(n + 0.0)
    if abs(a - 0.5) < _HALF_TOL:
        def m(t):
            t = np.abs(t)
            out = np.zeros_like(t)
            pos = t > 0
            out[pos] = t[pos] ** 2 * np.log(t[pos])
            return out
        denom = 2.0
    else:
        b = 3.0 - 2.0 * a
        def m(t):
            return np.abs(t) ** b
        denom = 2.0 * a * (1.0 - 2.0 * a) * (2.0 - 2.0 * a) * (3.0 - 2.0 * a)
    d4 = m(k - 2) - 4 * m(k - 1) + 6 * m(k) - 4 * m(k + 1) + m(k + 2)
    return d4 / denom


def assemble_fractional_laplacian(grid: Grid1D, order: FractionalOrder) -> DiscreteOperator:
    """Dense matrix A with (A u)_i ~ C_{1,a} p.v. int (u(x_i)-u(y)) |x_i-y|^{-1-2a} dy,
    u extended by zero outside the interval.  Exactly symmetric and positive
    definite; rows share one Toeplitz stencil."""
    g = _toeplitz_symbol(order.a, grid.n)
    A = normalization_constant(order) * grid.h ** (-2.0 * order.a) * toeplitz(g)
    q0 = Potential(values=np.zeros(grid.n))
    return DiscreteOperator(matrix=A, grid=grid, order=order, potential=q0)


def add_potential(op: DiscreteOperator, q: Potential) -> DiscreteOperator:
    """Add diag(q); potentials compose additively."""
    if q.values.shape != (op.grid.n,):
        raise GridMismatch(
            f"potential has {q.values.shape[0]} samples, grid has {op.grid.n} nodes")
    merged = Potential(values=op.potential.values + q.values,
                       theta_admissible=q.theta_admissible and not op.potential.values.any())
    return replace(op, matrix=op.matrix + np.diag(q.values), potential=merged)


def bump_profile(x: np.ndarray, center: float, width: float, amplitude: float) -> np.ndarray:
    """Smooth compactly supported bump, max = amplitude at center, support
    (center-width, center+width)."""
    u = (x - center) / width
    out = np.zeros_like(x)
    inside = np.abs(u) < 1.0
    out[inside] = amplitude * np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
    return out


def make_potential(grid: Grid1D, family: str, **params) -> Potential:
    """Named potential families: zero | constant(value) | bump(center,width,amplitude)."""
    if family == "zero":
        return Potential(values=np.zeros(grid.n))
    if family == "constant":
        return Potential(values=np.full(grid.n, float(params["value"])))
    if family == "bump":
        vals = bump_profile(grid.nodes, float(params["center"]),
                            float(params["width"]), float(params["amplitude"]))
        return Potential(values=vals)
    raise FracspecError(f"unknown potential family {family!r}")
