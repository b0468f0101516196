"""Symmetric block-tridiagonal matrices commuting with M.

L1, L2, L3 are built entry by entry from their closed forms; every
off-diagonal 2x2 block of these is diagonal, so they are pentadiagonal.
:func:`solve_commutant` computes the whole commutant numerically within the
larger class of symmetric block-tridiagonal matrices.

Indices in docstrings are 1-based, matching the formulas (l_{r,s} = L_{r,s}).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DegenerateParametersError
from .mvop import Params
from .precision import Backend, get_backend


@dataclass(frozen=True)
class BandedSymmetric:
    """Symmetric pentadiagonal matrix whose off-diagonal 2x2 blocks are diagonal.

    ``super1[k]`` holds entry (k, k+1) (0-based) and must vanish for odd k,
    since those positions sit in an off-diagonal block.
    """

    diag: np.ndarray
    super1: np.ndarray
    super2: np.ndarray
    precision: str = "standard"

    def __post_init__(self):
        k = len(self.diag)
        if k % 2 or len(self.super1) != k - 1 or len(self.super2) != max(k - 2, 0):
            raise ValueError("band lengths do not describe a 2(N+1) x 2(N+1) matrix")
        if any(v != 0 for v in self.super1[1::2]):
            raise ValueError("off-diagonal 2x2 blocks must be diagonal")

    @property
    def size(self) -> int:
        return len(self.diag)

    def entry(self, r: int, s: int):
        """l_{r,s} with 1-based indices; zero outside the band."""
        r, s = min(r, s), max(r, s)
        if r < 1 or s > self.size:
            return 0
        if s == r:
            return self.diag[r - 1]
        if s == r + 1:
            return self.super1[r - 1]
        if s == r + 2:
            return self.super2[r - 1]
        return 0

    def toarray(self) -> np.ndarray:
        k = self.size
        be = get_backend(self.precision)
        out = be.zeros((k, k))
        idx = np.arange(k)
        out[idx, idx] = self.diag
        out[idx[:-1], idx[:-1] + 1] = self.super1
        out[idx[:-1] + 1, idx[:-1]] = self.super1
        out[idx[:-2], idx[:-2] + 2] = self.super2
        out[idx[:-2] + 2, idx[:-2]] = self.super2
        return out

    def __array__(self, dtype=None, copy=None):
        a = self.toarray()
        return np.asarray(a, dtype=float if dtype is None else dtype)

    def scaled(self, c) -> "BandedSymmetric":
        return BandedSymmetric(self.diag * c, self.super1 * c, self.super2 * c, self.precision)

    @classmethod
    def from_entries(cls, size: int, entries: dict, be: Backend) -> "BandedSymmetric":
        diag = be.zeros(size)
        s1 = be.zeros(size - 1)
        s2 = be.zeros(max(size - 2, 0))
        for (r, s), v in entries.items():
            r, s = min(r, s), max(r, s)
            {0: diag, 1: s1, 2: s2}[s - r][r - 1] = v
        return cls(diag, s1, s2, be.name)


def _check_sqrt(be, value, what):
    if not value > 0:
        raise ValueError(f"square-root argument for {what} is not positive: {value}")
    return be.sqrt(value)


def _require(params: Params, need_asym: bool):
    if params.alpha == 0:
        raise DegenerateParametersError("L entries contain 1/alpha; alpha = 0 is degenerate")
    if need_asym and params.self_dual:
        raise DegenerateParametersError("L1 and L2 contain 1/(n - 2p); n = 2p is degenerate")


def build_l1(params: Params, precision="standard", unit_diagonal: int = 2) -> BandedSymmetric:
    """L1 from its closed-form entries (k = 1..N+1, l_{2k-1,2k-1} = 0).

    The closed form has l_{2,2} = 1.  ``unit_diagonal`` selects another even
    index 2k whose diagonal entry is rescaled to 1; the whole matrix is
    multiplied by the same constant, which keeps it in the commutant.
    """
    _require(params, need_asym=True)
    be = get_backend(precision)
    n, p, alpha = params.scalars(be)
    N = params.N
    q = n - p
    lead = -(q + N + 1) * (p + N + 1) / (alpha * (p + 1) * (n - 2 * p))
    e = {}
    for k in range(1, N + 2):
        e[2 * k, 2 * k] = (q + k - 1) * (p + k) / ((p + 1) * q)
        e[2 * k - 1, 2 * k] = lead * _check_sqrt(
            be, p * (p + k) * (q + k - 1) / ((q + k) * (p + k - 1) * q), f"l_{2*k-1},{2*k}")
        if k <= N:
            e[2 * k, 2 * k + 2] = (N - k + 1) * (N + n + k + 1) / (alpha * (p + 1) * q) * _check_sqrt(
                be, k * (q + k - 1) * (p + 1 + k) * (n + k)
                / ((n + 2 * k - 1) * (n + 2 * k + 1) * (p + k) * (q + k)), f"l_{2*k},{2*k+2}")
    out = BandedSymmetric.from_entries(params.size, e, be)
    if unit_diagonal != 2:
        if unit_diagonal % 2 or not 2 <= unit_diagonal <= params.size:
            raise ValueError(f"unit_diagonal must be an even index in 2..{params.size}")
        out = out.scaled(1 / out.entry(unit_diagonal, unit_diagonal))
    return out


def build_l2(params: Params, precision="standard") -> BandedSymmetric:
    """L2 from its closed-form entries (l_{2k,2k} = 0)."""
    _require(params, need_asym=True)
    be = get_backend(precision)
    n, p, alpha = params.scalars(be)
    N = params.N
    q = n - p
    lead = (q + N + 1) * (p + N + 1) / (alpha * (q + 1) * (n - 2 * p))
    e = {}
    for k in range(1, N + 2):
        e[2 * k - 1, 2 * k - 1] = (q + k) * (p + k - 1) / (p * (q + 1))
        e[2 * k - 1, 2 * k] = lead * _check_sqrt(
            be, (q + k) * (p + k - 1) * q / (p * (p + k) * (q + k - 1)), f"l_{2*k-1},{2*k}")
        if k <= N:
            e[2 * k - 1, 2 * k + 1] = (N - k + 1) * (N + n + k + 1) / (alpha * p * (q + 1)) * _check_sqrt(
                be, k * (p + k - 1) * (q + 1 + k) * (n + k)
                / ((n + 2 * k - 1) * (n + 2 * k + 1) * (p + k) * (q + k)), f"l_{2*k-1},{2*k+1}")
    return BandedSymmetric.from_entries(params.size, e, be)


def build_l3(params: Params, precision="standard") -> BandedSymmetric:
    """L3 from its closed-form entries; defined at n = 2p as well."""
    _require(params, need_asym=False)
    be = get_backend(precision)
    n, p, alpha = params.scalars(be)
    N = params.N
    q = n - p
    e = {}
    for k in range(1, N + 2):
        e[2 * k, 2 * k] = (k - 1) * (n + k) * p * (q + 1) / ((n + 2) * (p + 1) * q)
        e[2 * k - 1, 2 * k - 1] = (k - 1) * (n + k) / (n + 2)
        e[2 * k - 1, 2 * k] = (k - 1) * (q + N + 1) * (p + N + 1) * (n + k) * be.sqrt(p) / (
            alpha * (p + 1) * (n + 2)
            * _check_sqrt(be, q * (p + k - 1) * (p + k) * (q + k) * (q + k - 1), f"l_{2*k-1},{2*k}"))
        if k <= N:
            tail = _check_sqrt(be, k * (p + k - 1) * (q + 1 + k) * (n + k), "l3 odd band") / _check_sqrt(
                be, (n + 2 * k - 1) * (n + 2 * k + 1) * (p + k) * (q + k), "l3 odd band")
            e[2 * k - 1, 2 * k + 1] = (N - k + 1) * (N + n + k + 1) / (alpha * (n + 2)) * tail
            e[2 * k, 2 * k + 2] = p * (q + 1) * (N - k + 1) * (N + n + k + 1) * _check_sqrt(
                be, k * (q + k - 1) * (p + k + 1) * (n + k), "l3 even band") / (
                alpha * (n + 2) * q * (p + 1)
                * _check_sqrt(be, (n + 2 * k - 1) * (n + 2 * k + 1) * (p + k) * (q + k), "l3 even band"))
    return BandedSymmetric.from_entries(params.size, e, be)


BUILDERS = {1: build_l1, 2: build_l2, 3: build_l3}


class CommutatorNorm(NamedTuple):
    max_abs: float
    relative: float


def _dense(a):
    if isinstance(a, BandedSymmetric):
        return a.toarray()
    return getattr(a, "values", a)


def commutator_norm(a, b) -> CommutatorNorm:
    """max|ab - ba| and that value divided by max|a| * max|b|."""
    a, b = _dense(a), _dense(b)
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise ValueError(f"need equal square shapes, got {a.shape} and {b.shape}")
    c = np.asarray(a @ b - b @ a, dtype=float)
    top = float(np.max(np.abs(c)))
    scale = float(np.max(np.abs(np.asarray(a, dtype=float)))) * float(
        np.max(np.abs(np.asarray(b, dtype=float))))
    return CommutatorNorm(top, top / scale if scale else 0.0)


def block_tridiagonal_det(a):
    """Determinant of a 2x2-block tridiagonal matrix by block elimination.

    Pivots on the 2x2 diagonal blocks (no entrywise pivoting), so it works for
    L1 whose odd diagonal entries are zero.
    """
    a = _dense(a)
    nb = a.shape[0] // 2

    def blk(i, j):
        return a[2 * i : 2 * i + 2, 2 * j : 2 * j + 2]

    def inv2(m):
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / det, det

    d = blk(0, 0)
    total = 1
    for i in range(nb):
        if i:
            d = blk(i, i) - blk(i, i - 1) @ dinv @ blk(i - 1, i)
        dinv, det = inv2(d)
        total = total * det
    return total


def l1_det_formula(l1: BandedSymmetric):
    """(-1)^{N+1} prod_j l_{2j-1,2j}^2."""
    nb = l1.size // 2
    out = 1
    for j in range(1, nb + 1):
        out = out * l1.entry(2 * j - 1, 2 * j) ** 2
    return -out if nb % 2 else out


# -- numerical commutant --------------------------------------------------


def _slots(size: int):
    """Free coordinates of a symmetric block-tridiagonal matrix: 3 per diagonal
    block, 4 per off-diagonal block (7N + 3 in total)."""
    nb = size // 2
    out = []
    for i in range(nb):
        out += [(2 * i, 2 * i), (2 * i, 2 * i + 1), (2 * i + 1, 2 * i + 1)]
    for i in range(nb - 1):
        out += [(2 * i + a, 2 * i + 2 + b) for a in (0, 1) for b in (0, 1)]
    return out


def _unit(size, r, s, be):
    # Frobenius-normalized symmetric unit matrix.
    u = be.zeros((size, size))
    if r == s:
        u[r, r] = be.scalar(1)
    else:
        u[r, s] = u[s, r] = 1 / be.sqrt(be.scalar(2))
    return u


def pentadiagonal_mask(size: int) -> np.ndarray:
    """True where a pentadiagonal matrix with diagonal off-blocks may be nonzero."""
    idx = np.arange(size)
    dist = np.abs(idx[:, None] - idx[None, :])
    mask = dist <= 2
    lo = np.minimum(idx[:, None], idx[None, :])
    mask &= ~((dist == 1) & (lo % 2 == 1))
    return mask


@dataclass(frozen=True)
class CommutantBasis:
    """Numerical kernel of L -> ML - LM over symmetric block-tridiagonal L."""

    basis: list
    singular_values: np.ndarray
    threshold: float
    rank_gap: float
    min_gap: float
    structure_defect: float
    unknowns: int = field(default=0)

    @property
    def dimension(self) -> int:
        return len(self.basis)

    @property
    def conclusive(self) -> bool:
        return self.rank_gap >= self.min_gap

    def projection_residual(self, l) -> float:
        """||L - P L||_F / ||L||_F with P the orthogonal projector onto the span."""
        l = np.asarray(_dense(l), dtype=float)
        proj = np.zeros_like(l)
        for b in self.basis:
            proj += np.sum(b * l) * b
        return float(np.linalg.norm(l - proj) / np.linalg.norm(l))


def constraint_matrix(m, precision=None):
    """Rows: strict upper-triangle entries of [M, B] (the commutator of two
    symmetric matrices is antisymmetric); columns: the 7N + 3 unit matrices B."""
    vals = _dense(m)
    be = get_backend(precision or ("extended" if vals.dtype == object else "standard"))
    size = vals.shape[0]
    iu = np.triu_indices(size, 1)
    cols = []
    for r, s in _slots(size):
        u = _unit(size, r, s, be)
        cols.append((vals @ u - u @ vals)[iu])
    return np.array(cols, dtype=be.dtype).T, be


def solve_commutant(m, threshold: float = 1e-8, min_gap: float = 1e2,
                    precision=None) -> CommutantBasis:
    """Orthonormal basis of the symmetric block-tridiagonal commutant of ``m``.

    Singular values below ``threshold`` times the largest are treated as
    zero; when fewer constraint rows than unknowns exist the missing singular
    values are exact zeros.  ``rank_gap`` is the ratio of the smallest kept to
    the largest discarded singular value; below ``min_gap`` the dimension is
    reported as inconclusive.  An object-dtype (extended precision) ``m`` is
    decomposed with mpmath.
    """
    a, be = constraint_matrix(m, precision)
    rows, cols = a.shape
    if be.name == "standard":
        _, s, vt = np.linalg.svd(a)
        s = np.asarray(s, dtype=float)
    else:
        u, s_mp, v = be.ctx.svd_r(be.ctx.matrix(a.tolist()), full_matrices=True)
        s = np.array([float(x) for x in s_mp])
        vt = np.array(v.tolist(), dtype=float)
    sv = np.zeros(cols)
    sv[: len(s)] = s
    top = sv[0] if sv[0] > 0 else 1.0
    keep = sv > threshold * top
    rank = int(np.count_nonzero(keep))
    kept_min = sv[rank - 1] if rank else np.inf
    dropped_max = sv[rank] if rank < cols else 0.0
    gap = np.inf if dropped_max == 0 else kept_min / dropped_max

    size = _dense(m).shape[0]
    slots = _slots(size)
    mask = pentadiagonal_mask(size)
    basis = []
    defect = 0.0
    for vec in vt[rank:]:
        b = np.zeros((size, size))
        for c, (r, s_) in zip(vec, slots):
            if r == s_:
                b[r, r] = c
            else:
                b[r, s_] = b[s_, r] = c / np.sqrt(2)
        basis.append(b)
        defect = max(defect, float(np.max(np.abs(b[~mask]), initial=0.0)))
    return CommutantBasis(basis=basis, singular_values=sv / top, threshold=threshold,
                          rank_gap=float(gap), min_gap=min_gap, structure_defect=defect,
                          unknowns=cols)


def commutant_for(params: Params, precision="standard", threshold: float = 1e-8,
                  min_gap: float = 1e2, order: int | None = None) -> CommutantBasis:
    """:func:`solve_commutant` fed with whichever of M and Id - M is smaller.

    Both have the same commutant.  For alpha > 0 the eigenvalues of M crowd
    towards 1, so [M, B] computed from M itself loses the digits that
    separate them; Id - M integrated directly keeps full relative accuracy.
    """
    from .limiting import build_m_complement, build_m_quadrature

    if params.alpha > 0:
        m = build_m_complement(params, order=order, precision=precision)
    else:
        m = build_m_quadrature(params, order=order, precision=precision)
    return solve_commutant(m, threshold=threshold, min_gap=min_gap)
