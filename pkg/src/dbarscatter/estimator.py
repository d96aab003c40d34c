"""Scikit-learn style wrappers so the scattering maps compose with pipelines.

The transform direction is the scattering map Q -> S; ``inverse_transform``
is the reconstruction S -> Q.  Inputs may be :class:`OffDiagPotential` objects
or complex arrays of shape ``(2, n, n)`` holding the two off-diagonal entries;
array in, array out.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .evolution import evolve_scattering
from .fields import OffDiagPotential, ScalarField
from .forward import scattering_data
from .grids import GridSpec, dual_grid
from .inverse import reconstruct_potential

__all__ = ["ScatteringTransform2D", "DaveyStewartsonII"]


def _check_pair_array(X, n: int) -> np.ndarray:
    arr = np.asarray(X)
    if arr.shape != (2, n, n):
        raise ValueError(f"expected array of shape (2, {n}, {n}), got {arr.shape}")
    if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
        raise ValueError("input contains NaN or Inf")
    return arr.astype(np.complex128, copy=False)


class ScatteringTransform2D(TransformerMixin, BaseEstimator):
    """Forward/inverse scattering transform of the plane first-order system.

    Parameters
    ----------
    half_width, n : geometry of the spatial grid.
    tol, max_iter : fixed-point solver controls.
    workers : parallel map width (output is independent of it).
    far_zone : "solve", "auto", or a radius; see
        :func:`dbarscatter.forward.scattering_data`.
    """

    def __init__(self, half_width=6.0, n=128, tol=1e-8, max_iter=200,
                 workers=None, far_zone="solve"):
        self.half_width = half_width
        self.n = n
        self.tol = tol
        self.max_iter = max_iter
        self.workers = workers
        self.far_zone = far_zone

    def fit(self, X=None, y=None):
        """Freeze the grids; no data-dependent state."""
        self.grid_ = GridSpec(self.half_width, self.n)
        self.zgrid_ = dual_grid(self.grid_, 2.0)
        return self

    def _require_fitted(self):
        if not hasattr(self, "grid_"):
            raise RuntimeError("call fit() before transforming")

    def _to_potential(self, X, grid) -> tuple[OffDiagPotential, bool]:
        if isinstance(X, OffDiagPotential):
            if X.grid != grid:
                raise ValueError("potential grid does not match the fitted grid")
            return X, False
        arr = _check_pair_array(X, grid.n)
        pot = OffDiagPotential(ScalarField(grid, arr[0]), ScalarField(grid, arr[1]), "none")
        return pot, True

    def transform(self, X):
        """Scattering data of a potential; lives on the dual lattice."""
        self._require_fitted()
        Q, was_array = self._to_potential(X, self.grid_)
        S = scattering_data(Q, self.zgrid_, self.tol, self.max_iter,
                            workers=self.workers, far_zone=self.far_zone)
        if was_array:
            return np.stack([S.q12.values, S.q21.values])
        return S

    def inverse_transform(self, X):
        """Reconstruct the potential from scattering data on the dual lattice."""
        self._require_fitted()
        S, was_array = self._to_potential(X, self.zgrid_)
        Q = reconstruct_potential(S, self.grid_, self.tol, self.max_iter,
                                  workers=self.workers)
        if was_array:
            return np.stack([Q.q12.values, Q.q21.values])
        return Q


class DaveyStewartsonII(BaseEstimator):
    """Davey-Stewartson II propagator through the scattering linearization.

    ``predict(q0, times)`` returns the solution at each requested time; the
    forward map of the initial data runs once and is reused across times.
    """

    def __init__(self, half_width=6.0, n=128, tol=1e-8, max_iter=200,
                 workers=None, far_zone="solve"):
        self.half_width = half_width
        self.n = n
        self.tol = tol
        self.max_iter = max_iter
        self.workers = workers
        self.far_zone = far_zone

    def fit(self, X=None, y=None):
        self.grid_ = GridSpec(self.half_width, self.n)
        self.zgrid_ = dual_grid(self.grid_, 2.0)
        return self

    def predict(self, q0, times):
        if not hasattr(self, "grid_"):
            raise RuntimeError("call fit() before predicting")
        was_array = not isinstance(q0, ScalarField)
        if was_array:
            arr = np.asarray(q0, dtype=np.complex128)
            if arr.shape != (self.grid_.n, self.grid_.n):
                raise ValueError(f"expected shape {(self.grid_.n, self.grid_.n)}, got {arr.shape}")
            q0 = ScalarField(self.grid_, arr)
        elif q0.grid != self.grid_:
            raise ValueError("initial data grid does not match the fitted grid")
        Q = OffDiagPotential(q0, q0.conj(), "hermitian")
        S = scattering_data(Q, self.zgrid_, self.tol, self.max_iter,
                            workers=self.workers, far_zone=self.far_zone)
        out = []
        for t in times:
            Qt = reconstruct_potential(evolve_scattering(S, float(t)), self.grid_,
                                       self.tol, self.max_iter, workers=self.workers)
            out.append(Qt.q12.values if was_array else Qt.q12)
        return out
