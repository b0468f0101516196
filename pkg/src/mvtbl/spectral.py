"""Eigen-decompositions for M and L1.

The symmetric eigensolver here is a cyclic Jacobi iteration: slow for large
matrices but deterministic, with small backward error even when the spectrum
is tightly clustered, and it runs unchanged on mpmath object arrays.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .commutant import BandedSymmetric, build_l1
from .errors import CertificationError, ConvergenceError
from .limiting import BlockMatrix, build_m_quadrature
from .mvop import Params
from .precision import Backend, get_backend

REJECT_DEFECT = 1e-6


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    min_gap: float
    residual: float
    precision: str = "standard"
    sweeps: int = 0

    @property
    def spread(self) -> float:
        ev = np.asarray(self.eigenvalues, dtype=float)
        return float(ev[-1] - ev[0]) if len(ev) else 0.0


def _as_matrix(a):
    if isinstance(a, BandedSymmetric):
        return a.toarray()
    if isinstance(a, BlockMatrix):
        return a.values
    return np.asarray(a)


def _backend_for(a) -> Backend:
    return get_backend("extended" if a.dtype == object else "standard")


def _fix_signs(vecs, be):
    mags = be.to_float(np.abs(vecs))
    for k in range(vecs.shape[1]):
        i = int(np.argmax(mags[:, k]))  # first index wins ties
        if vecs[i, k] < 0:
            vecs[:, k] = -vecs[:, k]
    return vecs


def _min_gap(ev) -> float:
    ev = np.asarray(ev, dtype=float)
    return float(np.min(np.diff(ev))) if len(ev) > 1 else np.inf


def _residual(a, lam, vecs, be) -> float:
    r = a @ vecs - vecs * lam[None, :]
    r = be.to_float(r)
    return float(np.max(np.linalg.norm(r, axis=0))) if r.size else 0.0


def symmetric_eigen(a, tol: float | None = None, max_sweeps: int = 100) -> Spectrum:
    """Eigenvalues ascending, orthonormal eigenvectors as columns.

    Converged once the off-diagonal Frobenius norm is below ``tol`` times the
    Frobenius norm of ``a`` (1e-14 in double precision).  Each eigenvector is
    signed so that its largest-magnitude component is positive.
    """
    a = _as_matrix(a)
    be = _backend_for(a)
    k = a.shape[0]
    if a.ndim != 2 or a.shape[1] != k:
        raise ValueError("symmetric_eigen needs a square matrix")
    scale = float(np.max(np.abs(be.to_float(a)))) if k else 0.0
    if float(np.max(np.abs(be.to_float(a - a.T)), initial=0.0)) > 1e-12 * scale:
        raise ValueError("matrix is not symmetric")
    if tol is None:
        tol = 1e-14 if be.name == "standard" else 10.0 ** (5 - be.dps)

    w = a.copy() if be.name != "standard" else a.astype(float).copy()
    v = be.eye(k)
    total = be.sqrt(np.sum(w * w))
    one = be.scalar(1)
    offdiag = ~np.eye(k, dtype=bool)
    sweeps = 0
    while True:
        off = be.sqrt(np.sum(w[offdiag] ** 2))
        if not off > tol * total:
            break
        if sweeps == max_sweeps:
            raise ConvergenceError(
                f"Jacobi iteration stalled after {max_sweeps} sweeps", attained=float(off))
        sweeps += 1
        for p in range(k - 1):
            for q in range(p + 1, k):
                apq = w[p, q]
                if apq == 0:
                    continue
                theta = (w[q, q] - w[p, p]) / (2 * apq)
                if abs(theta) > 1e150:
                    t = 1 / (2 * theta)
                else:
                    t = one / (abs(theta) + be.sqrt(theta * theta + 1))
                    if theta < 0:
                        t = -t
                c = 1 / be.sqrt(t * t + 1)
                s = t * c
                cp, cq = w[:, p].copy(), w[:, q].copy()
                w[:, p] = c * cp - s * cq
                w[:, q] = s * cp + c * cq
                rp, rq = w[p, :].copy(), w[q, :].copy()
                w[p, :] = c * rp - s * rq
                w[q, :] = s * rp + c * rq
                w[p, q] = w[q, p] = 0 * apq
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq

    lam = np.diagonal(w).copy()
    order = np.argsort(be.to_float(lam), kind="stable")
    lam = lam[order]
    v = _fix_signs(v[:, order], be)
    return Spectrum(eigenvalues=lam, eigenvectors=v, min_gap=_min_gap(be.to_float(lam)),
                    residual=_residual(a, lam, v, be), precision=be.name, sweeps=sweeps)


class BackSubstitution(NamedTuple):
    vector: np.ndarray
    defect: float

    @property
    def is_eigenvalue(self) -> bool:
        return self.defect <= REJECT_DEFECT


def l1_eigenvector_backsub(l1: BandedSymmetric, lam) -> BackSubstitution:
    """Eigenvector of L1 for the eigenvalue ``lam`` from the band structure.

    The odd equations give x_{2j-1} = l_{2j-1,2j} x_{2j} / lam.  Substituted
    into the even equations they leave a three-term recursion

        l_{2j,2j+2} x_{2j+2} + c_j x_{2j} + l_{2j-2,2j} x_{2j-2} = 0,
        c_j = l_{2j,2j} - lam + l_{2j-1,2j}^2 / lam,

    solved downward from x_{2N+2} = 1.  The j = 1 equation is left over.
    Its value, divided by ||x|| * max|l_{r,s}|, is the returned ``defect``:
    every other equation holds by construction, so this is the relative
    eigen-residual of the normalized vector (about 1e-11 or below at an
    eigenvalue, of the order of the distance to the spectrum otherwise).
    """
    if lam == 0:
        raise ValueError("lam = 0 is never an eigenvalue of L1")
    be = get_backend(l1.precision)
    k = l1.size
    nb = k // 2
    ell = l1.entry
    x = [0 * lam] * (k + 3)  # 1-based, x[k+1], x[k+2] stay zero

    def coeff(j):
        return ell(2 * j, 2 * j) - lam + ell(2 * j - 1, 2 * j) ** 2 / lam

    x[2 * nb] = lam * 0 + 1
    for j in range(nb, 1, -1):
        down = ell(2 * j - 2, 2 * j)
        if down == 0:
            raise ValueError(f"l_{2*j-2},{2*j} vanishes; recursion cannot continue")
        x[2 * j - 2] = -(ell(2 * j, 2 * j + 2) * x[2 * j + 2] + coeff(j) * x[2 * j]) / down
    final = ell(2, 4) * x[4] + coeff(1) * x[2]
    for j in range(1, nb + 1):
        x[2 * j - 1] = ell(2 * j - 1, 2 * j) * x[2 * j] / lam
    vec = np.array(x[1 : k + 1], dtype=be.dtype)
    norm = be.sqrt(np.sum(vec * vec))
    vec = _fix_signs((vec / norm)[:, None], be)[:, 0]
    scale = norm * max(abs(v) for v in (*l1.diag, *l1.super1, *l1.super2))
    return BackSubstitution(vec, float(abs(final) / scale))


class SimplicityReport(NamedTuple):
    simple: bool
    min_gap: float
    tolerance: float
    gaps: np.ndarray


def simplicity_check(s: Spectrum, tol: float | None = None) -> SimplicityReport:
    """Simple spectrum iff every consecutive gap exceeds ``tol`` (1e-8 * spread)."""
    ev = np.asarray(s.eigenvalues, dtype=float)
    gaps = np.diff(ev)
    if tol is None:
        tol = 1e-8 * s.spread
    min_gap = float(gaps.min()) if gaps.size else np.inf
    return SimplicityReport(bool(min_gap > tol), min_gap, float(tol), gaps)


@dataclass(frozen=True)
class AlignmentReport:
    overlap: np.ndarray
    permutation: dict
    pair_overlaps: dict
    unmatched: list


def align_eigenvectors(x, y, min_overlap: float = 0.5) -> AlignmentReport:
    """Match columns of ``y`` to columns of ``x`` by |y^T x|.

    Pairs are taken greedily in order of decreasing overlap, never reusing a
    column.  Columns of ``y`` whose best remaining overlap is below
    ``min_overlap`` are listed as unmatched.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {y.shape}")
    ov = np.abs(y.T @ x)
    order = np.dstack(np.unravel_index(np.argsort(-ov, axis=None, kind="stable"), ov.shape))[0]
    perm, pairs = {}, {}
    used = set()
    for i, j in order:
        if i in perm or j in used:
            continue
        perm[int(i)] = int(j)
        used.add(int(j))
    unmatched = []
    for i in sorted(perm):
        pairs[i] = float(ov[i, perm[i]])
        if pairs[i] < min_overlap:
            unmatched.append(i)
    for i in unmatched:
        del perm[i]
    return AlignmentReport(overlap=ov, permutation=perm, pair_overlaps=pairs,
                           unmatched=unmatched)


def stable_m_eigenbasis(params: Params, m: BlockMatrix | None = None, tol: float = 1e-8,
                        method: str = "eigen") -> Spectrum:
    """Eigenvectors of M computed as eigenvectors of L1.

    Each vector is certified by ||M v - (v^T M v) v|| <= ``tol``; the
    Rayleigh quotients are returned as the eigenvalues of M.  ``method``
    chooses the Jacobi eigensolver ("eigen") or back-substitution ("backsub")
    for the L1 eigenvectors (L1 eigenvalues come from the eigensolver either
    way).
    """
    l1 = build_l1(params)
    if m is None:
        m = build_m_quadrature(params)
    mat = np.asarray(m, dtype=float)
    spec = symmetric_eigen(l1)
    if method == "eigen":
        vecs = np.asarray(spec.eigenvectors, dtype=float)
    elif method == "backsub":
        vecs = np.column_stack([l1_eigenvector_backsub(l1, lam).vector
                                for lam in spec.eigenvalues])
    else:
        raise ValueError(f"unknown method {method!r}")
    mv = mat @ vecs
    rq = np.einsum("ik,ik->k", vecs, mv)
    res = np.linalg.norm(mv - vecs * rq[None, :], axis=0)
    worst = int(np.argmax(res))
    if res[worst] > tol:
        raise CertificationError(
            f"L1 eigenvector {worst} is not an M eigenvector: residual {res[worst]:.3e}",
            residual=float(res[worst]))
    order = np.argsort(rq, kind="stable")
    return Spectrum(eigenvalues=rq[order], eigenvectors=vecs[:, order],
                    min_gap=_min_gap(rq[order]), residual=float(res.max()))
