"""Davey-Stewartson II via the scattering linearization.

The scattering data of the evolving potential rotates by the unimodular
multiplier exp(-4 i t z1 z2); the sign is fixed once against the linear
spectral propagator of ``q_t = i q_{x1 x2}`` (mixed-derivative half of the
system) and frozen by a convention test.  The solution map is

    q(., t) = [inverse scattering of exp(-4 i t z1 z2) * S(Q(., 0))]_{12}

with Q the hermitian matrix potential built from q.
"""
from __future__ import annotations

import numpy as np

from .fields import OffDiagPotential, ScalarField, lp_norm, matrix_l2_norm
from .forward import scattering_data
from .grids import GridSpec, dual_grid
from .inverse import reconstruct_potential

__all__ = [
    "EVOLUTION_PHASE_SIGN",
    "evolve_scattering",
    "dsii_solve",
    "continuity_experiment",
    "dsii_residual",
    "linear_spectral_solution",
]

# Frozen against the spectral oracle: with the Fourier conventions of the
# forward map, exp(+4 i t z1 z2) propagates the wrong way.
EVOLUTION_PHASE_SIGN = -1.0


def evolve_scattering(S: OffDiagPotential, t: float) -> OffDiagPotential:
    """Multiply both entries pointwise by exp(-4 i t z1 z2).

    The multiplier is unimodular for real t, so the pointwise modulus and the
    matrix L2 norm are preserved and t-evolution forms a group.
    """
    z1, z2 = S.grid.mesh()
    mult = np.exp(EVOLUTION_PHASE_SIGN * 4j * float(t) * z1 * z2)
    return OffDiagPotential(
        ScalarField(S.grid, S.q12.values * mult),
        ScalarField(S.grid, S.q21.values * mult),
        "none",
    )


def _hermitian_potential(q0: ScalarField) -> OffDiagPotential:
    return OffDiagPotential(q0, q0.conj(), "hermitian")


def dsii_solve(
    q0: ScalarField,
    t: float,
    zgrid: GridSpec | None = None,
    tol: float = 1e-8,
    max_iter: int = 200,
    *,
    workers: int | None = None,
    far_zone: str | float | None = "solve",
) -> ScalarField:
    """Scattering solution of Davey-Stewartson II at time t.

    Requires ``||q0||_2 < 1`` so the hermitian matrix potential stays inside
    the contraction ball (attempted and reported otherwise, like the solvers).
    """
    grid = q0.grid
    if zgrid is None:
        zgrid = dual_grid(grid, 2.0)
    Q = _hermitian_potential(q0)
    S = scattering_data(Q, zgrid, tol, max_iter, workers=workers, far_zone=far_zone)
    St = evolve_scattering(S, t)
    Qt = reconstruct_potential(St, grid, tol, max_iter, workers=workers)
    return Qt.q12


def continuity_experiment(
    q0a: ScalarField,
    q0b: ScalarField,
    t: float,
    zgrid: GridSpec | None = None,
    tol: float = 1e-8,
    max_iter: int = 200,
    *,
    workers: int | None = None,
    far_zone: str | float | None = "solve",
) -> float:
    """||q_a(t) - q_b(t)||_2 / ||q_a(0) - q_b(0)||_2 (0 when the inputs agree)."""
    if q0a.grid != q0b.grid:
        raise ValueError("initial data must share a grid")
    d0 = ScalarField(q0a.grid, q0a.values - q0b.values)
    denom = lp_norm(d0, 2.0)
    if denom == 0.0:
        return 0.0
    qa = dsii_solve(q0a, t, zgrid, tol, max_iter, workers=workers, far_zone=far_zone)
    qb = dsii_solve(q0b, t, zgrid, tol, max_iter, workers=workers, far_zone=far_zone)
    num = lp_norm(ScalarField(qa.grid, qa.values - qb.values), 2.0)
    return num / denom


# ---------------------------------------------------------------------------
# residual diagnostic and the linear oracle
# ---------------------------------------------------------------------------


def _angular_freqs(grid: GridSpec):
    k = 2.0 * np.pi * np.fft.fftfreq(grid.n, d=grid.h)
    return np.meshgrid(k, k, indexing="ij")


def linear_spectral_solution(q0: ScalarField, t: float) -> ScalarField:
    """Exact propagator of the linearized equation q_t = i q_{x1 x2}."""
    k1, k2 = _angular_freqs(q0.grid)
    qh = np.fft.fft2(q0.values)
    out = np.fft.ifft2(qh * np.exp(-1j * float(t) * k1 * k2))
    return ScalarField(q0.grid, out)


def _mixed_derivative(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    k1, k2 = _angular_freqs(grid)
    return np.fft.ifft2(np.fft.fft2(values) * (-k1 * k2))


def _coupling_field(q: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Solve lap r = (|q|^2)_{x1 x2} spectrally with zero-mean gauge."""
    k1, k2 = _angular_freqs(grid)
    k2sum = k1**2 + k2**2
    rhs_hat = np.fft.fft2(np.abs(q) ** 2) * (-k1 * k2)
    with np.errstate(divide="ignore", invalid="ignore"):
        r_hat = np.where(k2sum > 0, rhs_hat / (-k2sum), 0.0)
    return np.fft.ifft2(r_hat).real


def dsii_residual(snapshots: list[ScalarField], dt: float) -> float:
    """Relative PDE residual of uniformly spaced solution snapshots.

    Central-differences the middle snapshot in time and checks
    ``q_t - i q_{x1 x2} + 4 i r q`` in L2, normalized by ||q||_2; r is the
    zero-mean spectral solution of the coupling equation.  A loose diagnostic,
    not a correctness gate.
    """
    if len(snapshots) < 3:
        raise ValueError("need at least 3 snapshots")
    grid = snapshots[0].grid
    if any(s.grid != grid for s in snapshots):
        raise ValueError("snapshots must share a grid")
    if dt <= 0:
        raise ValueError("dt must be positive")
    mid = len(snapshots) // 2
    mid = min(max(mid, 1), len(snapshots) - 2)
    qm = snapshots[mid].values
    qt = (snapshots[mid + 1].values - snapshots[mid - 1].values) / (2.0 * dt)
    r = _coupling_field(qm, grid)
    res = qt - 1j * _mixed_derivative(qm, grid) + 4j * r * qm
    qnorm = lp_norm(snapshots[mid], 2.0)
    if qnorm == 0.0:
        return 0.0
    return lp_norm(ScalarField(grid, res), 2.0) / qnorm
