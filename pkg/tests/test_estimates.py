from fractions import Fraction

import numpy as np
import pytest

from dbarscatter import (
    GridSpec,
    ScalarField,
    exponent_sequence,
    hls_ratio,
    lieb_extremizer,
    lp_norm,
    make_potential,
    multilinear_form,
    reduction_step,
    riesz_potential,
)
from dbarscatter.estimates import SHARP_RIESZ_CONSTANT, _kernel_matrix
from dbarscatter.kernels import riesz_self_weight


# --------------------------------------------------------------------------
# exponent ladder (exact rational arithmetic; no tolerances)
# --------------------------------------------------------------------------


def test_exponent_seeds_and_first_values():
    seq = exponent_sequence(5)
    assert seq.p[0] == 2 and seq.s[0] == 4
    assert seq.p[1] == 6          # 1/p1 = 1/2 - 1/3
    assert seq.s[1] == Fraction(12, 7)
    assert seq.s_tilde[0] == 12   # 1/s~1 = 7/12 - 1/2


def test_exponent_identities_exact():
    seq = exponent_sequence(25)
    for j in range(26):
        assert seq.p[j] / seq.r[j] == Fraction(4, 3)
        assert 1 / seq.p[j] + 1 / seq.s[j] == Fraction(3, 4)
        assert seq.s[j] / seq.r_dual(j) == Fraction(4, 3)
    for j in range(1, 26):
        assert seq.s[j] < 2
        assert 1 / seq.s_tilde[j - 1] == 1 / seq.s[j] - Fraction(1, 2)


def test_exponent_monotone_limit():
    seq = exponent_sequence(20)
    diffs = [seq.s[j] - Fraction(4, 3) for j in range(21)]
    assert all(d > 0 for d in diffs)
    assert all(diffs[j + 1] < diffs[j] for j in range(20))
    assert float(diffs[20]) < 1e-3


def test_exponent_rejects_bad_jmax():
    with pytest.raises(ValueError):
        exponent_sequence(0)


# --------------------------------------------------------------------------
# the chain form
# --------------------------------------------------------------------------


def test_chain_form_k0_indicator():
    # int of 1 over [-1,1]^2 = 4
    g = GridSpec(1.0, 8)
    one = ScalarField.ones(g)
    assert multilinear_form(one, [one], 0) == pytest.approx(4.0, rel=1e-14)


def test_chain_form_single_cell_closed_form():
    # all factors an indicator of one cell: the only surviving term has both
    # kernel factors at coincidence, h^6 * (w/h)^2 * t-value
    g = GridSpec(1.0, 4)
    vals = np.zeros((4, 4), complex)
    vals[1, 2] = 1.0
    cell = ScalarField(g, vals)
    w = riesz_self_weight(g.h)
    expected = g.h**6 * (w / g.h) ** 2
    got = multilinear_form(cell, [cell, cell, cell], 1)
    assert got == pytest.approx(expected, rel=1e-12)


def test_chain_form_multilinearity():
    g = GridSpec(1.0, 6)
    rng = np.random.default_rng(0)
    t, q0, q1, q2 = (ScalarField(g, rng.random((6, 6)).astype(complex)) for _ in range(4))
    base = multilinear_form(t, [q0, q1, q2], 1)
    doubled = multilinear_form(t, [q0, ScalarField(g, 2 * q1.values), q2], 1)
    assert doubled == pytest.approx(2 * base, rel=1e-12)


def test_chain_form_cost_guard_and_validation():
    g_big = GridSpec(1.0, 18)
    one = ScalarField.ones(g_big)
    with pytest.raises(ValueError):
        multilinear_form(one, [one, one, one], 1)
    g = GridSpec(1.0, 4)
    one4 = ScalarField.ones(g)
    with pytest.raises(ValueError):
        multilinear_form(one4, [one4], 1)  # wrong arity
    with pytest.raises(ValueError):
        multilinear_form(one4, [one4, one4, one4], 3)
    neg = ScalarField(g, -np.ones((4, 4), complex))
    with pytest.raises(ValueError):
        multilinear_form(one4, [neg, one4, one4], 1)


def test_chain_form_k2_matches_bruteforce_loop():
    g = GridSpec(1.0, 4)
    rng = np.random.default_rng(1)
    t = ScalarField(g, rng.random((4, 4)).astype(complex))
    qs = [ScalarField(g, rng.random((4, 4)).astype(complex)) for _ in range(5)]
    got = multilinear_form(t, qs, 2)
    # independent plain-loop oracle
    K = _kernel_matrix(g)
    n = 4
    pts = np.arange(n * n)
    jj, kk = pts // n, pts % n
    tv = t.values.real
    qv = [q.values.real.ravel() for q in qs]
    total = 0.0
    for i0 in pts:
        for i1 in pts:
            for i2 in pts:
                for i3 in pts:
                    ca = jj[i0] - jj[i1] + jj[i2] - jj[i3]
                    cb = kk[i0] - kk[i1] + kk[i2] - kk[i3]
                    for i4 in pts:
                        a, b = ca + jj[i4], cb + kk[i4]
                        if 0 <= a < n and 0 <= b < n:
                            total += (tv[a, b] * qv[0][i0] * qv[1][i1] * qv[2][i2]
                                      * qv[3][i3] * qv[4][i4]
                                      * K[i0, i1] * K[i1, i2] * K[i2, i3] * K[i3, i4])
    expected = total * g.cell_area**5
    assert got == pytest.approx(expected, rel=1e-10)


# --------------------------------------------------------------------------
# reduction step
# --------------------------------------------------------------------------


def test_reduction_step_zero_inputs():
    g = GridSpec(1.0, 6)
    zero = ScalarField.zeros(g)
    one = ScalarField.ones(g)
    t1, q2t = reduction_step(zero, zero, one, 0)
    assert np.all(t1.values == 0) and np.all(q2t.values == 0)


def test_reduction_step_rejects_negative():
    g = GridSpec(1.0, 6)
    one = ScalarField.ones(g)
    neg = ScalarField(g, -np.ones((6, 6), complex))
    with pytest.raises(ValueError):
        reduction_step(neg, one, one, 0)


def test_reduction_step_homogeneity():
    # scaling all inputs by c scales t1 by c and q2~ by c^2
    g = GridSpec(1.0, 6)
    rng = np.random.default_rng(2)
    t, q0, q1 = (ScalarField(g, rng.random((6, 6)).astype(complex)) for _ in range(3))
    t1, q2t = reduction_step(t, q0, q1, 0)
    c = 3.5
    t1c, q2tc = reduction_step(
        ScalarField(g, c * t.values), ScalarField(g, c * q0.values),
        ScalarField(g, c * q1.values), 0,
    )
    assert np.allclose(t1c.values, c * t1.values, rtol=1e-12)
    assert np.allclose(q2tc.values, c**2 * q2t.values, rtol=1e-12)


def test_reduction_inequality_20_seeds():
    # discrete Hoelder chain: I1 <= I0(t1, q2 q2~) with float-only slack;
    # h = 1 aligns the coincident-kernel conventions of the two sides
    g = GridSpec(3.0, 6)
    for seed in range(20):
        rng = np.random.Generator(np.random.Philox(key=seed))
        t, q0, q1, q2 = (ScalarField(g, rng.random((6, 6)).astype(complex)) for _ in range(4))
        i1 = multilinear_form(t, [q0, q1, q2], 1)
        t1, q2t = reduction_step(t, q0, q1, 0)
        i0 = multilinear_form(t1, [ScalarField(g, q2.values * q2t.values)], 0)
        assert i1 <= i0 * (1 + 1e-9)


def test_reduction_norm_contracts():
    # Riesz-potential norm bounds with the sharp constant 2*sqrt(pi) and 5%
    # discretization slack
    g = GridSpec(6.0, 64)
    seq = exponent_sequence(3)
    for seed in range(5):
        f = make_potential("random-smooth", 1.0, "none", 60 + seed, g)
        t = ScalarField(g, np.abs(f.q12.values).astype(complex))
        q0 = ScalarField(g, np.abs(f.q21.values).astype(complex))
        q1v = make_potential("random-smooth", 1.0, "none", 90 + seed, g).q12
        q1 = ScalarField(g, np.abs(q1v.values).astype(complex))
        for j in (0, 1):
            t1, q2t = reduction_step(t, q0, q1, j)
            rj, rjp = float(seq.r[j]), float(seq.r_dual(j))
            pj, pj1 = float(seq.p[j]), float(seq.p[j + 1])
            sj, st1 = float(seq.s[j]), float(seq.s_tilde[j])
            a = SHARP_RIESZ_CONSTANT
            assert lp_norm(t1, pj1) <= a ** (1 / rj) * lp_norm(t, pj) * 1.05
            bound = a ** (1 / rjp) * a * lp_norm(q1, 2.0) * lp_norm(q0, sj) * 1.05
            assert lp_norm(q2t, st1) <= bound


# --------------------------------------------------------------------------
# HLS ratios
# --------------------------------------------------------------------------


def test_hls_ratio_rejects_bad_p():
    g = GridSpec(1.0, 8)
    f = ScalarField.ones(g)
    for p in (1.0, 2.0, 0.5, 4.0):
        with pytest.raises(ValueError):
            hls_ratio(f, p)


def test_hls_ratio_dilation_invariance():
    # dilating the function and the lattice together is the exact discrete
    # change of variables; at the (4/3 -> 4) pair the ratio is scale-free
    def ratio(lam):
        g = GridSpec(24.0 / lam, 256)
        x1, x2 = g.mesh()
        f = np.exp(-(lam * lam) * (x1**2 + x2**2) / 4.0)
        return hls_ratio(ScalarField(g, f.astype(complex)), 4.0 / 3.0)
    r1, rh, r2 = ratio(1.0), ratio(0.5), ratio(2.0)
    assert rh == pytest.approx(r1, abs=1e-3)
    assert r2 == pytest.approx(r1, abs=1e-3)


def test_hls_extremizer_ratio_near_sharp_constant():
    # the discrete ratio approaches 2*sqrt(pi) from below (truncation-limited)
    g = GridSpec(50.0, 256)
    r = hls_ratio(lieb_extremizer(g), 4.0 / 3.0)
    assert 0.95 * np.pi <= r <= SHARP_RIESZ_CONSTANT * 1.005
    assert r / SHARP_RIESZ_CONSTANT > 0.97


def test_riesz_extremizer_closed_form_image():
    # R[(1+|x|^2)^{-3/2}] = 2 pi (1+|x|^2)^{-1/2}; check well inside the box
    g = GridSpec(50.0, 256)
    out = riesz_potential(lieb_extremizer(g)).values.real
    x1, x2 = g.mesh()
    expected = 2 * np.pi * (1 + x1**2 + x2**2) ** -0.5
    inner = np.hypot(x1, x2) < 5.0
    rel = np.abs(out - expected)[inner] / expected[inner]
    assert np.max(rel) < 0.02
