"""The kernel operators: solid Cauchy transform and its conjugate, the Riesz
potential, phase matrices, off-diagonal phase conjugation, the matrix Green
operator and its twisted form, and the centered Fourier transform.

All convolutions run through zero-padded FFTs (see :mod:`dbarscatter.kernels`).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import MatrixField, ScalarField
from .grids import GridSpec, dual_grid
from .kernels import get_kernel_table

__all__ = [
    "cauchy_transform",
    "anti_cauchy_transform",
    "riesz_potential",
    "PhaseField",
    "phase_field",
    "phase_conjugation",
    "matrix_green",
    "matrix_green_twisted",
    "fourier_transform",
    "inverse_fourier_transform",
]


def cauchy_transform(f: ScalarField) -> ScalarField:
    """Solid Cauchy transform (1/pi) int f(w)/(z-w) dmu(w), a right inverse of
    d/d(conj z) on the truncated plane."""
    table = get_kernel_table(f.grid, "cauchy")
    return ScalarField(f.grid, table.convolve(f.values))


def anti_cauchy_transform(f: ScalarField) -> ScalarField:
    """Conjugate-kernel transform (1/pi) int f(w)/conj(z-w) dmu(w).

    Implemented as conj(cauchy_transform(conj(f))), which is exact.
    """
    table = get_kernel_table(f.grid, "cauchy")
    return ScalarField(f.grid, np.conj(table.convolve(np.conj(f.values))))


def riesz_potential(f: ScalarField) -> ScalarField:
    """Convolution with 1/|x| using the exact positive self-cell weight."""
    table = get_kernel_table(f.grid, "riesz")
    return ScalarField(f.grid, table.convolve(f.values))


# ---------------------------------------------------------------------------
# phases
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PhaseField:
    """The two unimodular phases attached to a spectral parameter z:
    a1(x) = exp(2i(x1 z1 + x2 z2)) and a2(x) = exp(-2i(x1 z1 - x2 z2))."""

    grid: GridSpec
    z: complex
    a1: ScalarField = field(repr=False)
    a2: ScalarField = field(repr=False)


def _phase_arrays(grid: GridSpec, z: complex):
    x1, x2 = grid.mesh()
    a1 = np.exp(2j * (x1 * z.real + x2 * z.imag))
    a2 = np.exp(-2j * (x1 * z.real - x2 * z.imag))
    return a1, a2


def phase_field(grid: GridSpec, z: complex) -> PhaseField:
    z = complex(z)
    a1, a2 = _phase_arrays(grid, z)
    return PhaseField(grid, z, ScalarField(grid, a1), ScalarField(grid, a2))


def phase_conjugation(F: MatrixField, z: complex, direction: str = "forward") -> MatrixField:
    """Multiply the off-diagonal entries by the inverse phases (``forward``)
    or by the phases (``inverse``); diagonal entries pass through unchanged.

    The phases are unimodular, so forward then inverse recovers the input to
    rounding and the pointwise modulus of every entry is preserved.
    """
    if direction not in ("forward", "inverse"):
        raise ValueError("direction must be 'forward' or 'inverse'")
    a1, a2 = _phase_arrays(F.grid, complex(z))
    if direction == "forward":
        a1, a2 = np.conj(a1), np.conj(a2)  # unimodular inverse
    return MatrixField(
        F.m11,
        ScalarField(F.grid, F.m12.values * a1),
        ScalarField(F.grid, F.m21.values * a2),
        F.m22,
    )


def matrix_green(F: MatrixField) -> MatrixField:
    """Row-routed Green operator of the first-order system: the first row gets
    the Cauchy transform, the second row its conjugate."""
    return MatrixField(
        cauchy_transform(F.m11),
        cauchy_transform(F.m12),
        anti_cauchy_transform(F.m21),
        anti_cauchy_transform(F.m22),
    )


def matrix_green_twisted(F: MatrixField, z: complex) -> MatrixField:
    """Phase-conjugated Green operator; acts exactly like :func:`matrix_green`
    on diagonal matrices (phases never touch the diagonal)."""
    return phase_conjugation(matrix_green(phase_conjugation(F, z, "forward")), z, "inverse")


# ---------------------------------------------------------------------------
# centered Fourier transform
# ---------------------------------------------------------------------------


def _centered_dft2(values: np.ndarray, n: int, sign: float) -> np.ndarray:
    # sum_j f_j exp(sign * 2pi i/n * (j-c)(m-c)) per axis, c = (n-1)/2,
    # via pre/post phase vectors around a plain FFT.
    c = (n - 1) / 2.0
    j = np.arange(n)
    w = np.exp(-sign * 2j * np.pi * c * j / n)
    gamma = np.exp(sign * 2j * np.pi * c * c / n)
    inner = values * w[:, None] * w[None, :]
    if sign < 0:
        out = np.fft.fft2(inner)
    else:
        out = np.fft.ifft2(inner) * (n * n)
    return (gamma * gamma) * out * w[:, None] * w[None, :]


def fourier_transform(f: ScalarField, scale: float = 2.0) -> ScalarField:
    """F[f](z) = h^2 sum f(x) exp(-i*scale*(x1 z1 + x2 z2)) on the dual lattice.

    The output grid is ``dual_grid(f.grid, scale)``; with that pairing the sum
    is an exact centered DFT and the discrete Plancherel identity
    ``||F f||_2 = (2 pi / scale) ||f||_2`` holds to rounding.
    """
    scale = float(scale)
    if scale <= 0:
        raise ValueError("scale must be positive")
    out = f.grid.cell_area * _centered_dft2(f.values, f.grid.n, sign=-1.0)
    return ScalarField(dual_grid(f.grid, scale), out)


def inverse_fourier_transform(F: ScalarField, scale: float = 2.0) -> ScalarField:
    """Exact discrete inverse of :func:`fourier_transform` (lands on the dual
    of the input grid, which recovers the original lattice)."""
    scale = float(scale)
    if scale <= 0:
        raise ValueError("scale must be positive")
    eta = F.grid.h
    out = (scale * eta / (2.0 * np.pi)) ** 2 * _centered_dft2(F.values, F.grid.n, sign=+1.0)
    return ScalarField(dual_grid(F.grid, scale), out)
