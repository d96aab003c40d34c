"""Forward and inverse scattering transform for the 2D first-order system
``D psi = Q psi``, with FFT-accelerated singular integral operators, an
estimate lab for the underlying multilinear machinery, and a Davey-Stewartson
II solver driven by the scattering linearization.
"""
from .estimates import (
    ExponentSequence,
    exponent_sequence,
    hls_ratio,
    lieb_extremizer,
    multilinear_form,
    reduction_step,
)
from .estimator import DaveyStewartsonII, ScatteringTransform2D
from .evolution import (
    continuity_experiment,
    dsii_residual,
    dsii_solve,
    evolve_scattering,
    linear_spectral_solution,
)
from .fields import (
    MatrixField,
    OffDiagPotential,
    ScalarField,
    lp_norm,
    make_potential,
    matrix_l2_norm,
)
from .forward import (
    NonConvergenceError,
    SolveReport,
    linearized_scattering,
    lipschitz_probe,
    neumann_term_norms,
    scattering_data,
    solve_jost,
)
from .grids import GridSpec, dual_grid
from .inverse import (
    dbar_rhs,
    linearized_inverse,
    reconstruct_potential,
    resample_nearest,
    solve_jost_dbar,
)
from .kernels import KernelTable, get_kernel_table
from .transforms import (
    PhaseField,
    anti_cauchy_transform,
    cauchy_transform,
    fourier_transform,
    inverse_fourier_transform,
    matrix_green,
    matrix_green_twisted,
    phase_conjugation,
    phase_field,
    riesz_potential,
)

__version__ = "0.1.0"

__all__ = [
    "GridSpec", "dual_grid",
    "ScalarField", "OffDiagPotential", "MatrixField",
    "lp_norm", "matrix_l2_norm", "make_potential",
    "KernelTable", "get_kernel_table",
    "cauchy_transform", "anti_cauchy_transform", "riesz_potential",
    "PhaseField", "phase_field", "phase_conjugation",
    "matrix_green", "matrix_green_twisted",
    "fourier_transform", "inverse_fourier_transform",
    "SolveReport", "NonConvergenceError",
    "solve_jost", "neumann_term_norms", "scattering_data",
    "linearized_scattering", "lipschitz_probe",
    "dbar_rhs", "solve_jost_dbar", "reconstruct_potential",
    "linearized_inverse", "resample_nearest",
    "evolve_scattering", "dsii_solve", "continuity_experiment",
    "dsii_residual", "linear_spectral_solution",
    "ExponentSequence", "exponent_sequence", "multilinear_form",
    "reduction_step", "hls_ratio", "lieb_extremizer",
    "ScatteringTransform2D", "DaveyStewartsonII",
    "__version__",
]
