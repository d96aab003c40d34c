"""Precomputed convolution tables for the singular kernels.

A table stores the FFT of the midpoint quadrature weights ``h^2 * K(x_i - x_j)``
on the zero-padded ``2n x 2n`` difference lattice (linear, not circular,
convolution).  The self cell gets a dedicated weight: zero for the odd Cauchy
kernel 1/(pi x), and the exact cell integral of 1/|x| for the Riesz kernel.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

from .grids import GridSpec

__all__ = ["KernelTable", "get_kernel_table", "riesz_self_weight"]


def riesz_self_weight(h: float) -> float:
    """Integral of 1/|x| over the h x h cell centered at 0.

    Computed by adaptive quadrature of the radial form
    ``4h * int_0^{pi/4} sec(theta) dtheta`` (closed form ``4h*asinh(1)``).
    """
    val, err = integrate.quad(lambda t: 1.0 / np.cos(t), 0.0, np.pi / 4.0,
                              epsabs=0.0, epsrel=1e-13)
    if err > 1e-10 * val:
        raise RuntimeError("self-cell quadrature did not reach requested accuracy")
    return 4.0 * h * val


def _offsets(n: int) -> np.ndarray:
    # mod-2n layout: index o holds lattice offset o for o < n, o - 2n for o >= n
    off = np.arange(2 * n)
    return np.where(off >= n, off - 2 * n, off)


@dataclass(frozen=True)
class KernelTable:
    """FFT of midpoint convolution weights for one kernel on one grid."""

    grid: GridSpec
    kind: str
    self_weight: float
    weights_hat: np.ndarray = field(repr=False)

    def convolve(self, values: np.ndarray) -> np.ndarray:
        """Apply sum_j W[i-j] f[j]; trailing two axes are the grid axes."""
        n = self.grid.n
        shape = values.shape[:-2] + (2 * n, 2 * n)
        buf = np.zeros(shape, dtype=np.complex128)
        buf[..., :n, :n] = values
        out = np.fft.ifft2(np.fft.fft2(buf, axes=(-2, -1)) * self.weights_hat,
                           axes=(-2, -1))
        return np.ascontiguousarray(out[..., :n, :n])


@lru_cache(maxsize=32)
def get_kernel_table(grid: GridSpec, kind: str) -> KernelTable:
    n, h = grid.n, grid.h
    off = _offsets(n)
    d1, d2 = np.meshgrid(off * h, off * h, indexing="ij")
    if kind == "cauchy":
        z = d1 + 1j * d2
        with np.errstate(divide="ignore", invalid="ignore"):
            w = (h * h / np.pi) / z
        w[0, 0] = 0.0  # odd kernel integrates to zero over the symmetric cell
        self_weight = 0.0
    elif kind == "riesz":
        r = np.hypot(d1, d2)
        with np.errstate(divide="ignore"):
            w = (h * h / r).astype(np.complex128)
        self_weight = riesz_self_weight(h)
        w[0, 0] = self_weight
    else:
        raise ValueError(f"unknown kernel kind {kind!r}")
    # offset n is never touched by a linear convolution of two n-blocks
    dead = np.abs(off) == n
    w[dead, :] = 0.0
    w[:, dead] = 0.0
    what = np.fft.fft2(w)
    what.flags.writeable = False
    return KernelTable(grid=grid, kind=kind, self_weight=self_weight, weights_hat=what)
