import numpy as np
import pytest

from dbarscatter import GridSpec, ScalarField


@pytest.fixture(scope="session")
def grid32():
    return GridSpec(6.0, 32)


@pytest.fixture(scope="session")
def grid16():
    return GridSpec(2.0, 16)


def gaussian_field(grid: GridSpec) -> ScalarField:
    x1, x2 = grid.mesh()
    return ScalarField(grid, np.exp(-(x1**2 + x2**2)))


def disk_indicator(grid: GridSpec, radius: float = 1.0) -> ScalarField:
    x1, x2 = grid.mesh()
    return ScalarField(grid, (x1**2 + x2**2 < radius**2).astype(np.complex128))


def direct_cauchy(f: ScalarField) -> np.ndarray:
    """O(n^4) summation oracle for the solid Cauchy transform (zero self cell)."""
    pts = f.grid.lattice().ravel()
    d = pts[:, None] - pts[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        k = 1.0 / d
    np.fill_diagonal(k, 0.0)
    out = (f.grid.cell_area / np.pi) * (k @ f.values.ravel())
    return out.reshape(f.grid.n, f.grid.n)


def direct_riesz(f: ScalarField, self_weight: float) -> np.ndarray:
    """O(n^4) summation oracle for the Riesz potential with explicit self cell."""
    pts = f.grid.lattice().ravel()
    d = np.abs(pts[:, None] - pts[None, :])
    with np.errstate(divide="ignore"):
        k = f.grid.cell_area / d
    np.fill_diagonal(k, self_weight)
    out = k @ f.values.ravel()
    return out.reshape(f.grid.n, f.grid.n)


def direct_fourier(f: ScalarField, scale: float) -> np.ndarray:
    """Dense matrix oracle for the centered Fourier transform on the dual grid."""
    from dbarscatter import dual_grid

    ax = f.grid.axis()
    zax = dual_grid(f.grid, scale).axis()
    e = np.exp(-1j * scale * np.outer(ax, zax))
    return f.grid.cell_area * (e.T @ f.values @ e)


def rel_l2(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sqrt(np.sum(np.abs(a - b) ** 2) / np.sum(np.abs(b) ** 2)))
