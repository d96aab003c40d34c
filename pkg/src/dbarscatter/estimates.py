"""Numerical lab for the multilinear estimate machinery: the exponent
recurrences (exact rationals), the alternating Riesz chain form evaluated by
brute force, the Hoelder/Riesz reduction step, and empirical HLS ratios.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .fields import ScalarField, lp_norm
from .grids import GridSpec
from .kernels import riesz_self_weight
from .transforms import riesz_potential

__all__ = [
    "ExponentSequence",
    "exponent_sequence",
    "multilinear_form",
    "reduction_step",
    "hls_ratio",
    "lieb_extremizer",
    "SHARP_RIESZ_CONSTANT",
]

# Sharp (4/3 -> 4) operator norm of convolution with 1/|x| in the plane:
# the extremizer (1+|x|^2)^{-3/2} maps to 2*pi*(1+|x|^2)^{-1/2} exactly,
# giving 2*sqrt(pi).
SHARP_RIESZ_CONSTANT = 2.0 * float(np.sqrt(np.pi))


@dataclass(frozen=True)
class ExponentSequence:
    """The exponent ladders p_j, s_j, r_j, s~_j as exact rationals.

    Seeded by p_0 = 2, s_0 = 4 and advanced by
        1/r_j     = 4/(3 p_j)
        1/p_{j+1} = 1/p_j - 1/(2 r_j)
        1/s_{j+1} = 1/s_j + 1/(2 r_j)
        1/s~_j    = 1/s_j - 1/2          (j >= 1)
    """

    jmax: int
    p: tuple[Fraction, ...]
    s: tuple[Fraction, ...]
    r: tuple[Fraction, ...]
    s_tilde: tuple[Fraction, ...]  # index j-1 holds s~_j

    def r_dual(self, j: int) -> Fraction:
        rj = self.r[j]
        return rj / (rj - 1)

    def check_identities(self) -> None:
        """Assert the closed-form identities exactly (no tolerance)."""
        for j in range(self.jmax + 1):
            assert self.p[j] / self.r[j] == Fraction(4, 3)
            assert Fraction(1) / self.p[j] + Fraction(1) / self.s[j] == Fraction(3, 4)
            assert self.s[j] / self.r_dual(j) == Fraction(4, 3)
            if j >= 1:
                assert self.s[j] < 2
        for j in range(1, self.jmax + 1):
            assert Fraction(1) / self.s_tilde[j - 1] == Fraction(1) / self.s[j] - Fraction(1, 2)


def exponent_sequence(jmax: int) -> ExponentSequence:
    if jmax < 1:
        raise ValueError("jmax must be >= 1")
    p = [Fraction(2)]
    s = [Fraction(4)]
    r: list[Fraction] = []
    for j in range(jmax + 1):
        rj = 3 * p[j] / 4
        r.append(rj)
        if j < jmax:
            p.append(1 / (1 / p[j] - 1 / (2 * rj)))
            s.append(1 / (1 / s[j] + 1 / (2 * rj)))
    s_tilde = tuple(1 / (1 / s[j] - Fraction(1, 2)) for j in range(1, jmax + 1))
    seq = ExponentSequence(jmax, tuple(p), tuple(s), tuple(r), s_tilde)
    seq.check_identities()
    return seq


# ---------------------------------------------------------------------------
# the alternating Riesz chain form
# ---------------------------------------------------------------------------

_COST_GUARD = {0: 10**9, 1: 16, 2: 8}


def _kernel_matrix(grid: GridSpec) -> np.ndarray:
    """Pairwise kernel values 1/|x_i - x_j| with the cell-averaged coincident
    value (Riesz self-cell weight divided by h)."""
    pts = grid.lattice().ravel()
    d = np.abs(pts[:, None] - pts[None, :])
    with np.errstate(divide="ignore"):
        k = 1.0 / d
    np.fill_diagonal(k, riesz_self_weight(grid.h) / grid.h)
    return k


def multilinear_form(t: ScalarField, qs: list[ScalarField], k: int) -> float:
    """Direct lattice evaluation of the alternating Riesz chain form.

    For k >= 1 this is the (2k+1)-fold midpoint sum of
    ``t(x0 - x1 + ... + x_{2k}) * prod q_j(x_j) / (|x0-x1| ... |x_{2k-1}-x_{2k}|)``
    with the coincident kernel value from :func:`_kernel_matrix`; for k = 0 it
    is the plain pairing ``h^2 sum t q0``.  The alternating argument of t is a
    signed sum of an odd number of cell centers, hence again a cell center of
    the extended lattice (the index arithmetic below relies on exactly this);
    points outside the box contribute zero.  Guarded against blow-up: k <= 2,
    n <= 16 for k = 1, n <= 8 for k = 2.
    """
    if k not in _COST_GUARD:
        raise ValueError("only k in {0, 1, 2} is supported")
    grid = t.grid
    if grid.n > _COST_GUARD[k]:
        raise ValueError(f"grid n={grid.n} exceeds the cost guard for k={k}")
    if len(qs) != 2 * k + 1:
        raise ValueError(f"need {2 * k + 1} factor fields for k={k}")
    fields = [t] + list(qs)
    for f in fields:
        if f.grid != grid:
            raise ValueError("all fields must share a grid")
        if np.any(f.values.real < 0) or np.any(f.values.imag != 0):
            raise ValueError("inputs must be nonnegative real fields")

    h2 = grid.cell_area
    tv = t.values.real
    if k == 0:
        return float(h2 * np.sum(tv * qs[0].values.real))

    n = grid.n
    K = _kernel_matrix(grid)
    qv = [q.values.real.ravel() for q in qs]
    # t lookup on the extended lattice: index c = j0 - j1 + j2 ... in [-(k)(n-1), ...]
    pad = k * (n - 1)
    tpad = np.zeros((n + 2 * pad, n + 2 * pad))
    tpad[pad:pad + n, pad:pad + n] = tv
    ij = np.arange(n * n)
    j1d, k1d = ij // n, ij % n

    if k == 1:
        total = 0.0
        for i1 in range(n * n):
            a1, b1 = j1d[i1], k1d[i1]
            # T[i0, i2] = t(x0 - x1 + x2)
            ca = j1d[:, None] - a1 + j1d[None, :] + pad
            cb = k1d[:, None] - b1 + k1d[None, :] + pad
            T = tpad[ca, cb]
            w0 = qv[0] * K[:, i1]
            w2 = qv[2] * K[i1, :]
            total += qv[1][i1] * (w0 @ T @ w2)
        return float(total * h2**3)

    # k == 2: loop the two inner indices, vectorize the three outer sums
    total = 0.0
    for i1 in range(n * n):
        a1, b1 = j1d[i1], k1d[i1]
        w0 = qv[0] * K[:, i1]
        for i3 in range(n * n):
            a3, b3 = j1d[i3], k1d[i3]
            w2 = qv[2] * K[i1, :] * K[:, i3]
            w4 = qv[4] * K[i3, :]
            ca = (j1d[:, None, None] - a1 + j1d[None, :, None]
                  - a3 + j1d[None, None, :] + pad)
            cb = (k1d[:, None, None] - b1 + k1d[None, :, None]
                  - b3 + k1d[None, None, :] + pad)
            T = tpad[ca, cb]
            total += qv[1][i1] * qv[3][i3] * np.einsum("i,ijk,j,k->", w0, T, w2, w4)
    return float(total * h2**5)


def reduction_step(
    t: ScalarField, q0: ScalarField, q1: ScalarField, j: int
) -> tuple[ScalarField, ScalarField]:
    """One Hoelder/Riesz reduction of the chain form at ladder index j.

    Returns ``t1 = [R(t^{r_j})]^{1/r_j}`` and
    ``q2~ = R(q1 [R(q0^{r'_j})]^{1/r'_j})`` built from the same discrete Riesz
    potential used everywhere else, so the chain comparison is like-for-like.
    """
    if j < 0:
        raise ValueError("j must be >= 0")
    for f in (t, q0, q1):
        if np.any(f.values.real < 0) or np.any(f.values.imag != 0):
            raise ValueError("inputs must be nonnegative real fields")
    seq = exponent_sequence(max(j + 1, 1))
    rj = float(seq.r[j])
    rjp = float(seq.r_dual(j))
    grid = t.grid
    t1 = riesz_potential(ScalarField(grid, t.values.real**rj)).values.real ** (1.0 / rj)
    q1t = riesz_potential(ScalarField(grid, q0.values.real**rjp)).values.real ** (1.0 / rjp)
    q2t = riesz_potential(ScalarField(grid, q1.values.real * q1t)).values.real
    return ScalarField(grid, t1), ScalarField(grid, q2t)


def hls_ratio(f: ScalarField, p: float) -> float:
    """||R|f|||_{p~} / ||f||_p with 1/p~ = 1/p - 1/2; requires 1 < p < 2."""
    p = float(p)
    if not 1.0 < p < 2.0:
        raise ValueError("p must lie in (1, 2)")
    p_til = 1.0 / (1.0 / p - 0.5)
    absf = ScalarField(f.grid, np.abs(f.values).astype(np.complex128))
    num = lp_norm(riesz_potential(absf), p_til)
    den = lp_norm(f, p)
    if den == 0.0:
        return 0.0
    return num / den


def lieb_extremizer(grid: GridSpec) -> ScalarField:
    """The sharp-HLS extremizer (1 + |x|^2)^{-3/2} sampled on the grid."""
    x1, x2 = grid.mesh()
    return ScalarField(grid, (1.0 + x1**2 + x2**2) ** -1.5)
