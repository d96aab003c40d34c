"""Cell-centered square lattices on a truncated copy of the complex plane.

All fields in this package live on a :class:`GridSpec`: an ``n x n`` lattice
of cell midpoints covering ``[-L, L]^2``, identified with complex numbers
``x = x1 + i*x2``.  Cell centering keeps the lattice exactly closed under
``x -> -x`` and ``x -> conj(x)`` and keeps singular kernels away from the
origin.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = ["GridSpec", "dual_grid"]


@dataclass(frozen=True)
class GridSpec:
    """Uniform cell-centered lattice with ``n`` samples per axis on ``[-L, L]``.

    The point with index ``(j, k)`` is ``(-L + (j+1/2)h) + 1j*(-L + (k+1/2)h)``
    with ``h = 2L/n``.  ``h`` is always derived, never stored.
    """

    half_width: float
    n: int

    def __post_init__(self):
        if not (self.half_width > 0 and np.isfinite(self.half_width)):
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        if self.n <= 0 or self.n % 2 != 0:
            raise ValueError(f"n must be a positive even integer, got {self.n}")
        object.__setattr__(self, "half_width", float(self.half_width))
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    def axis(self) -> np.ndarray:
        """1D midpoint coordinates, exactly antisymmetric under negation."""
        # (j - (n-1)/2) is exact in floats, so axis()[::-1] == -axis() bitwise.
        return (np.arange(self.n) - (self.n - 1) / 2.0) * self.h

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return _mesh(self)

    def lattice(self) -> np.ndarray:
        """Complex lattice points, shape (n, n), index (j, k) -> x1_j + i*x2_k."""
        x1, x2 = self.mesh()
        return x1 + 1j * x2

    def dual(self, scale: float = 2.0) -> "GridSpec":
        return dual_grid(self, scale)

    def central_subgrid(self, m: int) -> "GridSpec":
        """Centered m x m subgrid (same spacing); m must be even, m <= n."""
        if m % 2 != 0 or not (0 < m <= self.n):
            raise ValueError(f"subgrid size must be even and in (0, {self.n}]")
        return GridSpec(half_width=self.half_width * m / self.n, n=m)

    def central_slice(self, m: int) -> slice:
        lo = (self.n - m) // 2
        return slice(lo, lo + m)


@lru_cache(maxsize=64)
def _mesh(grid: GridSpec):
    ax = grid.axis()
    x1, x2 = np.meshgrid(ax, ax, indexing="ij")
    x1.flags.writeable = False
    x2.flags.writeable = False
    return x1, x2


def dual_grid(grid: GridSpec, scale: float = 2.0) -> GridSpec:
    """FFT-dual lattice of ``grid`` under ``exp(-i*scale*(x1 z1 + x2 z2))``.

    The dual spacing obeys ``scale * h * eta = 2*pi/n``, which makes the
    centered transform an exact DFT.  Applying :func:`dual_grid` twice
    returns the original grid.
    """
    if scale <= 0:
        raise ValueError("scale must be positive")
    eta = 2.0 * np.pi / (scale * grid.h * grid.n)
    return GridSpec(half_width=eta * grid.n / 2.0, n=grid.n)
