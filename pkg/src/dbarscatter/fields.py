"""Complex scalar and 2x2 matrix fields on a grid, norms, and test potentials.

The off-diagonal 2x2 shape (zero diagonal) is shared by the potential of the
first-order system and by its scattering data, so both are represented by
:class:`OffDiagPotential`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grids import GridSpec

__all__ = [
    "ScalarField",
    "OffDiagPotential",
    "MatrixField",
    "lp_norm",
    "matrix_l2_norm",
    "make_potential",
]

_SYMMETRIES = ("none", "hermitian", "skew")


def _as_values(grid: GridSpec, values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.complex128)
    if arr.shape != (grid.n, grid.n):
        raise ValueError(f"values shape {arr.shape} does not match grid n={grid.n}")
    if not (np.all(np.isfinite(arr.real)) and np.all(np.isfinite(arr.imag))):
        raise ValueError("field values must be finite (no NaN/Inf)")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ScalarField:
    """Complex-valued function sampled on a :class:`GridSpec` (row-major, index
    (j, k) is the lattice point x1_j + i*x2_k).  Immutable after construction."""

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _as_values(self.grid, self.values))

    @classmethod
    def zeros(cls, grid: GridSpec) -> "ScalarField":
        return cls(grid, np.zeros((grid.n, grid.n), dtype=np.complex128))

    @classmethod
    def ones(cls, grid: GridSpec) -> "ScalarField":
        return cls(grid, np.ones((grid.n, grid.n), dtype=np.complex128))

    @classmethod
    def from_function(cls, grid: GridSpec, fn) -> "ScalarField":
        x1, x2 = grid.mesh()
        return cls(grid, np.asarray(fn(x1, x2), dtype=np.complex128))

    def conj(self) -> "ScalarField":
        return ScalarField(self.grid, np.conj(self.values))


@dataclass(frozen=True)
class OffDiagPotential:
    """Off-diagonal 2x2 matrix field: entries (1,2) and (2,1), zero diagonal.

    ``symmetry`` is a structural tag: "hermitian" requires
    ``q21 == conj(q12)`` exactly, "skew" requires ``q21 == -conj(q12)``.
    """

    q12: ScalarField
    q21: ScalarField
    symmetry: str = "none"

    def __post_init__(self):
        if self.q12.grid != self.q21.grid:
            raise ValueError("q12 and q21 must share a grid")
        if self.symmetry not in _SYMMETRIES:
            raise ValueError(f"symmetry must be one of {_SYMMETRIES}")
        if self.symmetry == "hermitian" and not np.array_equal(
            self.q21.values, np.conj(self.q12.values)
        ):
            raise ValueError("hermitian tag requires q21 == conj(q12) pointwise")
        if self.symmetry == "skew" and not np.array_equal(
            self.q21.values, -np.conj(self.q12.values)
        ):
            raise ValueError("skew tag requires q21 == -conj(q12) pointwise")

    @property
    def grid(self) -> GridSpec:
        return self.q12.grid

    @classmethod
    def zeros(cls, grid: GridSpec, symmetry: str = "none") -> "OffDiagPotential":
        z = ScalarField.zeros(grid)
        return cls(z, z, symmetry)

    @classmethod
    def hermitian_from_scalar(cls, q: ScalarField) -> "OffDiagPotential":
        return cls(q, q.conj(), "hermitian")


@dataclass(frozen=True)
class MatrixField:
    """Full 2x2 matrix field; all entries share one grid."""

    m11: ScalarField
    m12: ScalarField
    m21: ScalarField
    m22: ScalarField

    def __post_init__(self):
        g = self.m11.grid
        if not (self.m12.grid == g and self.m21.grid == g and self.m22.grid == g):
            raise ValueError("all entries must share a grid")

    @property
    def grid(self) -> GridSpec:
        return self.m11.grid

    @classmethod
    def identity(cls, grid: GridSpec) -> "MatrixField":
        one = ScalarField.ones(grid)
        zero = ScalarField.zeros(grid)
        return cls(one, zero, zero, one)

    @classmethod
    def from_arrays(cls, grid: GridSpec, m11, m12, m21, m22) -> "MatrixField":
        return cls(
            ScalarField(grid, m11),
            ScalarField(grid, m12),
            ScalarField(grid, m21),
            ScalarField(grid, m22),
        )

    def entries(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return self.m11.values, self.m12.values, self.m21.values, self.m22.values


def lp_norm(f: ScalarField, p: float) -> float:
    """Discrete L^p norm by the midpoint rule: (h^2 sum |f|^p)^(1/p)."""
    p = float(p)
    if not np.isfinite(p) or p < 1:
        raise ValueError(f"p must be a finite real >= 1, got {p}")
    return float((f.grid.cell_area * np.sum(np.abs(f.values) ** p)) ** (1.0 / p))


def matrix_l2_norm(F) -> float:
    """Matrix L^2 norm: sqrt of the sum of entrywise squared L^2 norms."""
    if isinstance(F, OffDiagPotential):
        entries = (F.q12, F.q21)
    elif isinstance(F, MatrixField):
        entries = (F.m11, F.m12, F.m21, F.m22)
    else:
        raise TypeError(f"expected OffDiagPotential or MatrixField, got {type(F)!r}")
    return float(np.sqrt(sum(lp_norm(e, 2.0) ** 2 for e in entries)))


# ---------------------------------------------------------------------------
# test-potential generators
# ---------------------------------------------------------------------------

_RANDOM_SMOOTH_MODES = 6  # band limit, in units of pi/L per axis


def _gaussian(grid: GridSpec) -> np.ndarray:
    x1, x2 = grid.mesh()
    return np.exp(-(x1**2 + x2**2)).astype(np.complex128)


def _bump(grid: GridSpec, radius: float = 2.0) -> np.ndarray:
    x1, x2 = grid.mesh()
    r2 = (x1**2 + x2**2) / radius**2
    out = np.zeros_like(r2)
    inside = r2 < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
    return out.astype(np.complex128)


def _random_smooth(grid: GridSpec, rng: np.random.Generator) -> np.ndarray:
    """Seeded band-limited random field with a Gaussian decay envelope."""
    L = grid.half_width
    K = _RANDOM_SMOOTH_MODES
    ks = np.arange(-K, K + 1)
    coeff = rng.standard_normal((2 * K + 1, 2 * K + 1)) + 1j * rng.standard_normal(
        (2 * K + 1, 2 * K + 1)
    )
    k1, k2 = np.meshgrid(ks, ks, indexing="ij")
    coeff = coeff * np.exp(-(k1**2 + k2**2) / (2.0 * 2.5**2))
    ax = grid.axis()
    e1 = np.exp(1j * np.pi * np.outer(ax, ks) / L)
    e2 = np.exp(1j * np.pi * np.outer(ax, ks) / L)
    x1, x2 = grid.mesh()
    envelope = np.exp(-(x1**2 + x2**2) / (2.0 * (L / 4.0) ** 2))
    return (e1 @ coeff @ e2.T) * envelope


def make_potential(
    kind: str,
    amplitude: float,
    symmetry: str = "hermitian",
    seed: int = 0,
    grid: GridSpec | None = None,
) -> OffDiagPotential:
    """Build a decaying off-diagonal potential with ``matrix_l2_norm == amplitude``.

    kinds: "gaussian", "bump", "random-smooth".  The random kind draws from a
    counter-based generator, so identical (kind, amplitude, symmetry, seed,
    grid) inputs give bitwise-identical fields.
    """
    if grid is None:
        raise ValueError("grid is required")
    if amplitude < 0:
        raise ValueError("amplitude must be >= 0")
    if symmetry not in _SYMMETRIES:
        raise ValueError(f"symmetry must be one of {_SYMMETRIES}")

    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    if kind == "gaussian":
        base12 = _gaussian(grid)
    elif kind == "bump":
        base12 = _bump(grid)
    elif kind == "random-smooth":
        base12 = _random_smooth(grid, rng)
    else:
        raise ValueError(f"unknown potential kind {kind!r}")

    if symmetry == "hermitian":
        base21 = np.conj(base12)
    elif symmetry == "skew":
        base21 = -np.conj(base12)
    else:
        base21 = _random_smooth(grid, rng) if kind == "random-smooth" else base12.copy()

    raw = OffDiagPotential(ScalarField(grid, base12), ScalarField(grid, base21), "none")
    nrm = matrix_l2_norm(raw)
    c = 0.0 if (amplitude == 0 or nrm == 0) else amplitude / nrm
    return OffDiagPotential(
        ScalarField(grid, c * base12), ScalarField(grid, c * base21), symmetry
    )
