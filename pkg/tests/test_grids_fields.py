import numpy as np
import pytest
from scipy import integrate

from dbarscatter import (
    GridSpec,
    OffDiagPotential,
    ScalarField,
    dual_grid,
    lp_norm,
    make_potential,
    matrix_l2_norm,
)

from conftest import gaussian_field

SQRT_HALF_PI = float(np.sqrt(np.pi / 2.0))  # ||exp(-|x|^2)||_2, closed form


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec(0.0, 16)
    with pytest.raises(ValueError):
        GridSpec(1.0, 15)  # odd
    with pytest.raises(ValueError):
        GridSpec(1.0, 0)


def test_grid_spacing_identity():
    g = GridSpec(6.0, 128)
    assert g.h * g.n == 2 * g.half_width


@pytest.mark.parametrize("L,n", [(6.0, 128), (5.0, 100), (3.0, 6)])
def test_reflection_closure_exact(L, n):
    # -x and conj(x) are lattice points by exact index arithmetic
    g = GridSpec(L, n)
    ax = g.axis()
    assert np.array_equal(ax[::-1], -ax)
    z = g.lattice()
    assert np.array_equal(z[::-1, ::-1], -z)
    assert np.array_equal(z[:, ::-1], np.conj(z))


def test_dual_grid_involution():
    g = GridSpec(6.0, 64)
    d = dual_grid(g, 2.0)
    assert dual_grid(d, 2.0) == g
    # pairing resolution: scale * h * eta = 2 pi / n
    assert 2.0 * g.h * d.h == pytest.approx(2 * np.pi / g.n, rel=1e-14)


def test_scalar_field_rejects_nan():
    g = GridSpec(1.0, 4)
    vals = np.zeros((4, 4), complex)
    vals[0, 0] = np.nan
    with pytest.raises(ValueError):
        ScalarField(g, vals)


def test_fields_are_immutable():
    g = GridSpec(1.0, 4)
    f = ScalarField.zeros(g)
    with pytest.raises(ValueError):
        f.values[0, 0] = 1.0


# --------------------------------------------------------------------------
# norms
# --------------------------------------------------------------------------


def test_lp_norm_zero_field():
    g = GridSpec(1.0, 8)
    assert lp_norm(ScalarField.zeros(g), 2.0) == 0.0


def test_lp_norm_constant_field():
    # constant 1 on [-1,1]^2 has L2 norm sqrt(area) = 2
    g = GridSpec(1.0, 8)
    assert lp_norm(ScalarField.ones(g), 2.0) == pytest.approx(2.0, rel=1e-14)


def test_lp_norm_gaussian_closed_form():
    g = GridSpec(6.0, 128)
    # independent quadrature oracle for int exp(-2|x|^2) dmu
    oracle, _ = integrate.quad(lambda r: np.exp(-2 * r * r) * 2 * np.pi * r, 0, np.inf)
    assert oracle == pytest.approx(np.pi / 2, rel=1e-12)
    assert lp_norm(gaussian_field(g), 2.0) == pytest.approx(np.sqrt(oracle), abs=1e-6)


def test_lp_norm_rejects_bad_p():
    g = GridSpec(1.0, 4)
    f = ScalarField.ones(g)
    for p in (0.5, 0.0, np.inf, np.nan):
        with pytest.raises(ValueError):
            lp_norm(f, p)


def test_lp_norm_homogeneity():
    g = GridSpec(2.0, 32)
    rng = np.random.default_rng(0)
    f = ScalarField(g, rng.standard_normal((32, 32)) + 1j * rng.standard_normal((32, 32)))
    for p in (1.0, 4.0 / 3.0, 2.0, 4.0):
        base = lp_norm(f, p)
        for c in (0.5, -2.0, 3.7j):
            scaled = ScalarField(g, c * f.values)
            assert lp_norm(scaled, p) == pytest.approx(abs(c) * base, rel=1e-12)


def test_matrix_l2_norm_values():
    g = GridSpec(6.0, 128)
    gauss = gaussian_field(g)
    zero = OffDiagPotential.zeros(g)
    assert matrix_l2_norm(zero) == 0.0
    herm = OffDiagPotential.hermitian_from_scalar(gauss)
    assert matrix_l2_norm(herm) == pytest.approx(np.sqrt(2) * SQRT_HALF_PI, abs=1e-6)
    two = OffDiagPotential(gauss, ScalarField(g, 2 * gauss.values), "none")
    assert matrix_l2_norm(two) == pytest.approx(np.sqrt(5) * SQRT_HALF_PI, abs=1e-6)


def test_symmetry_tag_enforced():
    g = GridSpec(1.0, 4)
    f = ScalarField.ones(g)
    with pytest.raises(ValueError):
        OffDiagPotential(f, ScalarField(g, 2 * f.values), "hermitian")
    OffDiagPotential(f, f.conj(), "hermitian")
    OffDiagPotential(f, ScalarField(g, -np.conj(f.values)), "skew")


# --------------------------------------------------------------------------
# make_potential
# --------------------------------------------------------------------------


def test_make_potential_zero_amplitude():
    g = GridSpec(6.0, 32)
    Q = make_potential("gaussian", 0.0, "hermitian", 0, g)
    assert matrix_l2_norm(Q) == 0.0
    assert np.all(Q.q12.values == 0)


def test_make_potential_gaussian_normalization():
    g = GridSpec(6.0, 128)
    Q = make_potential("gaussian", 1.0, "hermitian", 0, g)
    assert matrix_l2_norm(Q) == pytest.approx(1.0, rel=1e-12)
    # q12 = c exp(-|x|^2) with c = 1/(sqrt(2) ||gauss||_2)
    c = 1.0 / (np.sqrt(2) * SQRT_HALF_PI)
    x1, x2 = g.mesh()
    assert np.allclose(Q.q12.values, c * np.exp(-(x1**2 + x2**2)), atol=1e-6)
    assert np.array_equal(Q.q21.values, np.conj(Q.q12.values))


@pytest.mark.parametrize("kind", ["gaussian", "bump", "random-smooth"])
@pytest.mark.parametrize("symmetry", ["none", "hermitian", "skew"])
def test_make_potential_norm_and_tags(kind, symmetry):
    g = GridSpec(6.0, 48)
    Q = make_potential(kind, 0.7, symmetry, 11, g)
    assert matrix_l2_norm(Q) == pytest.approx(0.7, rel=1e-12)
    assert Q.symmetry == symmetry
    if symmetry == "hermitian":
        assert np.array_equal(Q.q21.values, np.conj(Q.q12.values))
    if symmetry == "skew":
        assert np.array_equal(Q.q21.values, -np.conj(Q.q12.values))


def test_make_potential_deterministic():
    g = GridSpec(6.0, 32)
    a = make_potential("random-smooth", 0.5, "none", 42, g)
    b = make_potential("random-smooth", 0.5, "none", 42, g)
    assert np.array_equal(a.q12.values, b.q12.values)
    assert np.array_equal(a.q21.values, b.q21.values)
    c = make_potential("random-smooth", 0.5, "none", 43, g)
    assert not np.array_equal(a.q12.values, c.q12.values)


def test_make_potential_gaussian_is_even_and_real():
    # the symmetric solver fast path keys on this
    g = GridSpec(6.0, 64)
    Q = make_potential("gaussian", 1.0, "hermitian", 0, g)
    v = Q.q12.values
    assert np.array_equal(v, v[::-1, ::-1])
    assert np.all(v.imag == 0)
