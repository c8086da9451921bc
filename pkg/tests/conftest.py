import numpy as np
import pytest

import fracspec as fs


@pytest.fixture(scope="session")
def grid256():
    return fs.build_grid(-1.0, 1.0, 256)


@pytest.fixture(scope="session")
def order06():
    return fs.FractionalOrder(0.6)


@pytest.fixture(scope="session")
def data06(grid256, order06):
    """Potential-free spectral data, a = 0.6, n = 256, 64 modes."""
    op = fs.assemble_fractional_laplacian(grid256, order06)
    return fs.eigendecompose(op, 64)


@pytest.fixture(scope="session")
def bump06(grid256):
    """Gentle bump satisfying the theta bounds (value and slope) at a = 0.6."""
    return fs.make_potential(grid256, "bump", center=0.2, width=0.6, amplitude=0.05)


@pytest.fixture(scope="session")
def data06_bump(grid256, order06, bump06):
    op = fs.add_potential(fs.assemble_fractional_laplacian(grid256, order06), bump06)
    return fs.eigendecompose(op, 64)


@pytest.fixture(scope="session")
def full_pair_06(grid256, order06):
    """Full-basis data for q = 0 and q = 0.05 bump; transport tests need the
    complete mode set so the trace-series bookkeeping closes exactly."""
    A = fs.assemble_fractional_laplacian(grid256, order06)
    d1 = fs.eigendecompose(A, grid256.n)
    q2 = fs.make_potential(grid256, "bump", center=0.2, width=0.5, amplitude=0.05)
    d2 = fs.eigendecompose(fs.add_potential(A, q2), grid256.n)
    return d1, d2
