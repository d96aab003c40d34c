import numpy as np
import pytest

from dbarscatter import (
    GridSpec,
    MatrixField,
    NonConvergenceError,
    OffDiagPotential,
    ScalarField,
    dual_grid,
    linearized_scattering,
    lipschitz_probe,
    lp_norm,
    make_potential,
    matrix_green_twisted,
    matrix_l2_norm,
    neumann_term_norms,
    scattering_data,
    solve_jost,
)
import dbarscatter.forward as fwd

from conftest import rel_l2


def _apply_GzQ(Q, m, z):
    # one Neumann application, built from the public operators (oracle path)
    g = Q.grid
    prod = MatrixField.from_arrays(
        g,
        Q.q12.values * m.m21.values,
        Q.q12.values * m.m22.values,
        Q.q21.values * m.m11.values,
        Q.q21.values * m.m12.values,
    )
    return matrix_green_twisted(prod, z)


def _mat_sub(a, b):
    return [x - y for x, y in zip(a.entries(), b.entries())]


def test_solve_jost_zero_potential():
    g = GridSpec(6.0, 16)
    Q = OffDiagPotential.zeros(g)
    m, rep = solve_jost(Q, 0.7 + 0.2j, tol=1e-12)
    assert rep.iterations == 1
    assert rep.converged
    assert np.all(m.m11.values == 1) and np.all(m.m22.values == 1)
    assert np.all(m.m12.values == 0) and np.all(m.m21.values == 0)


def test_solve_jost_second_order_remainder():
    # m - 1 - G_z(Q . 1) should be O(||Q||^2); two-term oracle built
    # independently from the public operators
    g = GridSpec(6.0, 32)
    z = 0.4 - 0.8j
    errs = {}
    for amp in (0.1, 0.05):
        Q = make_potential("gaussian", amp, "hermitian", 0, g)
        m, _ = solve_jost(Q, z, tol=1e-13)
        first = _apply_GzQ(Q, MatrixField.identity(g), z)
        rem = [
            m.m11.values - 1 - first.m11.values,
            m.m12.values - first.m12.values,
            m.m21.values - first.m21.values,
            m.m22.values - 1 - first.m22.values,
        ]
        errs[amp] = max(
            lp_norm(ScalarField(g, r), 4.0) for r in rem
        )
        # second-order smallness with a generous constant
        assert errs[amp] < 2.0 * amp**2
    # halving the amplitude divides the remainder by ~4
    assert errs[0.05] < 0.35 * errs[0.1]


def test_neumann_parity_of_terms():
    # even terms are diagonal, odd terms off-diagonal, exactly
    g = GridSpec(6.0, 16)
    Q = make_potential("gaussian", 0.8, "hermitian", 0, g)
    z = 0.3 + 0.1j
    term = MatrixField.identity(g)
    for j in range(1, 6):
        term = _apply_GzQ(Q, term, z)
        if j % 2 == 0:
            assert np.all(term.m12.values == 0) and np.all(term.m21.values == 0)
        else:
            assert np.all(term.m11.values == 0) and np.all(term.m22.values == 0)


def test_neumann_term_norms_zero():
    g = GridSpec(6.0, 16)
    Q = OffDiagPotential.zeros(g)
    assert neumann_term_norms(Q, 0.5, 3) == [0.0, 0.0, 0.0]


def test_neumann_term_scaling_multilinearity():
    # term 2k is homogeneous of degree 2k: doubling Q scales it by 4^k
    g = GridSpec(6.0, 24)
    Q1 = make_potential("gaussian", 0.4, "hermitian", 0, g)
    Q2 = make_potential("gaussian", 0.8, "hermitian", 0, g)
    n1 = neumann_term_norms(Q1, 0.6 + 0.4j, 3)
    n2 = neumann_term_norms(Q2, 0.6 + 0.4j, 3)
    for k in range(1, 4):
        assert n2[k - 1] == pytest.approx(4.0**k * n1[k - 1], rel=1e-10)


def test_neumann_decay_ratio_bound():
    g = GridSpec(6.0, 64)
    Q = make_potential("gaussian", 1.0, "hermitian", 0, g)
    norms = neumann_term_norms(Q, 1.0 + 0.7j, 4)
    ratios = [norms[i + 1] / norms[i] for i in range(3)]
    assert max(ratios) <= 0.55


def test_nonconvergence_carries_partials():
    g = GridSpec(6.0, 16)
    Q = make_potential("gaussian", 1.0, "hermitian", 0, g)
    with pytest.raises(NonConvergenceError) as exc:
        solve_jost(Q, 0.1 + 0.1j, tol=1e-13, max_iter=3)
    assert exc.value.result is not None
    assert exc.value.report.iterations == 3
    assert not exc.value.report.converged


# --------------------------------------------------------------------------
# scattering data
# --------------------------------------------------------------------------


def test_scattering_zero_potential():
    g = GridSpec(6.0, 16)
    S = scattering_data(OffDiagPotential.zeros(g), tol=1e-10)
    assert np.all(S.q12.values == 0) and np.all(S.q21.values == 0)


def test_scattering_matches_single_point_solves():
    g = GridSpec(6.0, 16)
    Q = make_potential("random-smooth", 0.6, "none", 3, g)
    zg = dual_grid(g)
    S = scattering_data(Q, zg, tol=1e-11)
    x1, x2 = g.mesh()
    h2 = g.cell_area
    for (j, k) in ((2, 3), (9, 14), (7, 0)):
        z = zg.lattice()[j, k]
        m, _ = solve_jost(Q, z, tol=1e-11)
        pa = np.exp(2j * (x1 * z.real + x2 * z.imag))
        pb = np.exp(-2j * (x1 * z.real - x2 * z.imag))
        s12 = (1j / np.pi) * h2 * np.sum(Q.q12.values * m.m22.values * np.conj(pa))
        s21 = (-1j / np.pi) * h2 * np.sum(Q.q21.values * m.m11.values * np.conj(pb))
        assert abs(S.q12.values[j, k] - s12) < 1e-12
        assert abs(S.q21.values[j, k] - s21) < 1e-12


def test_scattering_fast_path_matches_plain():
    g = GridSpec(6.0, 24)
    Q = make_potential("gaussian", 0.9, "hermitian", 0, g)
    assert fwd._symmetric_fast_path_ok(Q)
    S_fast = scattering_data(Q, tol=1e-11)
    Q_plain = OffDiagPotential(Q.q12, Q.q21, "none")
    assert not fwd._symmetric_fast_path_ok(Q_plain)
    S_plain = scattering_data(Q_plain, tol=1e-11)
    assert np.max(np.abs(S_fast.q12.values - S_plain.q12.values)) < 1e-12
    assert np.max(np.abs(S_fast.q21.values - S_plain.q21.values)) < 1e-12


def test_scattering_fast_path_skew():
    g = GridSpec(6.0, 24)
    Q = make_potential("gaussian", 0.9, "skew", 0, g)
    assert fwd._symmetric_fast_path_ok(Q)
    S_fast = scattering_data(Q, tol=1e-11)
    S_plain = scattering_data(OffDiagPotential(Q.q12, Q.q21, "none"), tol=1e-11)
    assert np.max(np.abs(S_fast.q12.values - S_plain.q12.values)) < 1e-12
    assert np.max(np.abs(S_fast.q21.values - S_plain.q21.values)) < 1e-12


def test_far_zone_completion_matches_full_solve():
    g = GridSpec(6.0, 48)
    Q = make_potential("gaussian", 1.0, "hermitian", 0, g)
    S_full = scattering_data(Q, tol=1e-9)
    S_auto = scattering_data(Q, tol=1e-9, far_zone="auto")
    assert rel_l2(S_auto.q12.values, S_full.q12.values) < 1e-8
    assert rel_l2(S_auto.q21.values, S_full.q21.values) < 1e-8


def test_scattering_has_zero_diagonal_representation():
    # the result is an OffDiagPotential: the diagonal is zero by type
    g = GridSpec(6.0, 16)
    S = scattering_data(make_potential("gaussian", 0.5, "hermitian", 0, g), tol=1e-9)
    assert isinstance(S, OffDiagPotential)


def test_linearization_small_amplitude():
    g = GridSpec(6.0, 48)
    Q = make_potential("gaussian", 1e-2, "hermitian", 0, g)
    S = scattering_data(Q, tol=1e-12)
    born = linearized_scattering(Q)
    assert rel_l2(S.q12.values, born.q12.values) < 2e-2
    assert rel_l2(S.q21.values, born.q21.values) < 2e-2


def test_linearized_scattering_rejects_other_grids():
    g = GridSpec(6.0, 16)
    Q = make_potential("gaussian", 0.1, "hermitian", 0, g)
    with pytest.raises(ValueError):
        linearized_scattering(Q, GridSpec(3.0, 16))


def test_odd_degree_homogeneity():
    # off-diagonal series has only odd degrees: S(cQ) - c S(Q) = O(c^3)
    g = GridSpec(6.0, 32)
    base = make_potential("gaussian", 1.0, "hermitian", 0, g)
    c1, c2 = 1e-2, 2e-2
    def S_at(c):
        Q = OffDiagPotential(
            ScalarField(g, c * base.q12.values),
            ScalarField(g, c * base.q21.values),
            "hermitian",
        )
        return scattering_data(Q, tol=1e-13)
    S1, S2 = S_at(c1), S_at(c2)
    # defect(c) = || S(cQ)/c - S_lin || ~ K c^2: quadrupling between c1 and c2
    born = linearized_scattering(base)
    d1 = rel_l2(S1.q12.values / c1, born.q12.values)
    d2 = rel_l2(S2.q12.values / c2, born.q12.values)
    assert d2 / d1 == pytest.approx(4.0, rel=0.15)


def test_plancherel_small_grid():
    g = GridSpec(6.0, 32)
    Q = make_potential("gaussian", 1.0, "hermitian", 0, g)
    S = scattering_data(Q, tol=1e-10)
    defect = abs(matrix_l2_norm(S) ** 2 - 1.0)
    assert defect < 1e-3


def test_hermitian_scattering_symmetry_report():
    # measured relation for hermitian Q: S21(z) == conj(S12(conj z)); this is
    # a report-style check of the observed structure, not an asserted theorem
    g = GridSpec(6.0, 32)
    Q = make_potential("gaussian", 0.8, "hermitian", 0, g)
    S = scattering_data(Q, tol=1e-11)
    assert np.max(np.abs(S.q21.values - np.conj(S.q12.values[:, ::-1]))) < 1e-10


def test_scattering_nonconvergence_collects_indices():
    g = GridSpec(6.0, 16)
    Q = make_potential("gaussian", 1.2, "hermitian", 0, g)
    with pytest.raises(NonConvergenceError) as exc:
        scattering_data(Q, tol=1e-12, max_iter=2)
    assert len(exc.value.failed_indices) > 0
    assert exc.value.result is not None


def test_scattering_worker_independence():
    g = GridSpec(6.0, 16)
    Q = make_potential("random-smooth", 0.5, "none", 7, g)
    S1 = scattering_data(Q, tol=1e-10, workers=1)
    S2 = scattering_data(Q, tol=1e-10, workers=2)
    assert np.array_equal(S1.q12.values, S2.q12.values)
    assert np.array_equal(S1.q21.values, S2.q21.values)


# --------------------------------------------------------------------------
# lipschitz probe
# --------------------------------------------------------------------------


def test_lipschitz_probe_identical_inputs():
    g = GridSpec(6.0, 16)
    Q = make_potential("gaussian", 0.5, "hermitian", 0, g)
    assert lipschitz_probe(Q, Q) == 0.0


def test_lipschitz_probe_near_isometry_at_small_amplitude():
    g = GridSpec(6.0, 32)
    Qa = make_potential("random-smooth", 1e-2, "hermitian", 1, g)
    Qb = make_potential("random-smooth", 0.8e-2, "hermitian", 2, g)
    ratio = lipschitz_probe(Qa, Qb, tol=1e-12)
    assert ratio == pytest.approx(1.0, abs=5e-2)


def test_lipschitz_probe_ensemble_bound():
    g = GridSpec(6.0, 24)
    pots = [make_potential("random-smooth", 0.5, "hermitian", s, g) for s in range(4)]
    for i in range(len(pots)):
        for j in range(i + 1, len(pots)):
            assert lipschitz_probe(pots[i], pots[j], tol=1e-8) <= 2.0
