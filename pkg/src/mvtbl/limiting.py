"""The time-band limiting matrix M = (M^{i,j}), M^{i,j} = int_{-1}^{alpha} Q_i W Q_j^T dx.

Two independent routes are provided: Gauss-Jacobi quadrature
(:func:`build_m_quadrature`) and assembly from closed-form entries
(:func:`build_m_closed_form`).  :func:`build_m_complement` integrates over
the complementary interval [alpha, 1] and so gives Id - M with full
relative accuracy even when every eigenvalue of M is within 1e-15 of 1.

Flat indices r, s used in docstrings are 1-based: block (i, j) occupies rows
2i+1, 2i+2 and columns 2j+1, 2j+2.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConvergenceError, DegenerateParametersError
from .mvop import Params, normalizer_diagonal, p_eval, q_eval
from .precision import Backend, get_backend
from .special import gauss_jacobi_rule, gegenbauer, hyp2f1_terminating

MAX_ORDER = 2048
J = np.array([[0.0, 1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class BlockMatrix:
    """Symmetric 2(N+1) x 2(N+1) matrix viewed as (N+1)^2 blocks of size 2."""

    values: np.ndarray
    route: str
    quadrature_order: int | None = None
    asymmetry_defect: float = 0.0
    precision: str = "standard"

    @property
    def size(self) -> int:
        return self.values.shape[0]

    @property
    def N(self) -> int:
        return self.size // 2 - 1

    def block(self, i: int, j: int) -> np.ndarray:
        return self.values[2 * i : 2 * i + 2, 2 * j : 2 * j + 2]

    def entry(self, r: int, s: int):
        """M_{r,s} with 1-based flat indices."""
        return self.values[r - 1, s - 1]

    def as_float(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float) if self.values.dtype != object else \
            np.vectorize(float, otypes=[float])(self.values)

    def __array__(self, dtype=None, copy=None):
        return self.as_float() if dtype is None else self.as_float().astype(dtype)


@dataclass(frozen=True)
class RescaledBlockMatrix(BlockMatrix):
    """Same layout with blocks int P_i W P_j^T; M^{i,j} = S_i Mt^{i,j} S_j."""

    def rescale(self, params: Params) -> BlockMatrix:
        be = get_backend(self.precision)
        d = _normalizer_vector(params, be)
        vals = d[:, None] * self.values * d[None, :]
        return BlockMatrix(vals, route=self.route, quadrature_order=self.quadrature_order,
                           asymmetry_defect=self.asymmetry_defect, precision=self.precision)


def _normalizer_vector(params: Params, be: Backend) -> np.ndarray:
    d = be.zeros(params.size)
    for w in range(params.N + 1):
        d[2 * w], d[2 * w + 1] = normalizer_diagonal(params, w, be)
    return d


def _max_abs(a) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


def _integrate(params: Params, order: int, side: str, normalized: bool, be: Backend):
    """Gram blocks of Q_w (or P_w) over [-1, alpha] ("cap") or [alpha, 1] ("complement").

    The endpoint factor (1 -/+ x)^(n/2-1) at the far end of the interval is
    absorbed into a Gauss-Jacobi weight; what remains is smooth there.
    """
    n, p, alpha = params.scalars(be)
    beta = n / 2 - 1
    rule = gauss_jacobi_rule(order, beta, be)
    t = rule.nodes
    if side == "cap":
        h = 1 + alpha
        x = h * t - 1
    else:
        h = 1 - alpha
        x = 1 - h * t
    fac = rule.weights * (2 - h * t) ** beta * h ** (beta + 1)
    w0 = np.array([[p * x * x + n - p, -n * x], [-n * x, (n - p) * x * x + p]])
    evaluate = q_eval if normalized else p_eval
    f = np.stack([evaluate(params, w, x, be) for w in range(params.N + 1)])
    fw = np.einsum("iabq,bcq->iacq", f, w0)
    blocks = np.einsum("iacq,jdcq,q->iajd", fw, f, fac)
    return blocks.reshape(params.size, params.size)


def _default_order(params: Params) -> int:
    return max(2 * params.N + params.n + 8, 40)


def _converged_gram(params, order, side, normalized, be, tol):
    if order is not None:
        vals = _integrate(params, int(order), side, normalized, be)
        return vals, int(order)
    m = _default_order(params)
    prev = _integrate(params, m, side, normalized, be)
    while True:
        nxt = 2 * m
        if nxt > MAX_ORDER:
            raise ConvergenceError(
                f"quadrature did not settle below {tol:g} with {m} nodes", attained=m
            )
        cur = _integrate(params, nxt, side, normalized, be)
        change = _max_abs(be.to_float(cur - prev))
        scale = max(_max_abs(be.to_float(cur)), np.finfo(float).tiny)
        if change <= tol * scale:
            return cur, nxt
        prev, m = cur, nxt


def _tolerance(be: Backend) -> float:
    return 1e-12 if be.name == "standard" else 10.0 ** (10 - be.dps)


def _finish(vals, be, route, order, cls=BlockMatrix):
    defect = _max_abs(be.to_float(vals - vals.T))
    sym = (vals + vals.T) / 2
    return cls(sym, route=route, quadrature_order=order, asymmetry_defect=defect,
               precision=be.name)


def build_m_quadrature(params: Params, order: int | None = None, precision="standard",
                       tol: float | None = None, side: str = "auto") -> BlockMatrix:
    """M by Gauss-Jacobi quadrature.

    ``side="cap"`` integrates over [-1, alpha] via x = -1 + (1 + alpha) t;
    ``side="complement"`` integrates over [alpha, 1] and returns Id minus
    that.  The default picks the shorter interval (the complement for
    alpha > 0): entries of M that are tiny because of near-orthogonality
    are then obtained directly instead of as a cancelling sum, so every
    entry carries full relative accuracy.

    Without an explicit ``order`` the node count starts at
    max(2N + n + 8, 40) and doubles until no entry moves by more than
    ``tol`` times the largest entry of the integrated matrix (1e-12 in
    double precision); past 2048 nodes a :class:`ConvergenceError` is
    raised.  alpha = 1 returns the identity.
    """
    be = get_backend(precision)
    if side == "auto":
        side = "complement" if params.alpha > 0 else "cap"
    if side not in ("cap", "complement"):
        raise ValueError(f"side must be 'auto', 'cap' or 'complement', got {side!r}")
    if params.alpha == 1:
        return BlockMatrix(be.eye(params.size), route="identity", precision=be.name)
    vals, used = _converged_gram(params, order, side, True, be, tol or _tolerance(be))
    if side == "cap":
        return _finish(vals, be, "quadrature", used)
    c = _finish(vals, be, "quadrature_complement", used)
    return replace(c, values=be.eye(params.size) - c.values)


def build_m_tilde_quadrature(params: Params, order: int | None = None,
                             precision="standard") -> RescaledBlockMatrix:
    """Mt^{i,j} = int_{-1}^{alpha} P_i W P_j^T by the same quadrature."""
    be = get_backend(precision)
    vals, used = _converged_gram(params, order, "cap", False, be, _tolerance(be))
    return _finish(vals, be, "quadrature", used, RescaledBlockMatrix)


def build_m_complement(params: Params, order: int | None = None,
                       precision="standard") -> BlockMatrix:
    """Id - M, integrated directly over [alpha, 1]."""
    be = get_backend(precision)
    if params.alpha == 1:
        return BlockMatrix(be.zeros((params.size, params.size)), route="complement",
                           precision=be.name)
    vals, used = _converged_gram(params, order, "complement", True, be, _tolerance(be))
    return _finish(vals, be, "complement", used)


# -- closed forms ---------------------------------------------------------


def _cap_factor(n, alpha):
    return (1 - alpha * alpha) ** (n / 2)


def tilde_offdiag(params: Params, i: int, j: int, precision="standard"):
    """(Mt^{i,j}_{12}, Mt^{i,j}_{21}), valid for all 0 <= i, j <= N."""
    be = get_backend(precision)
    n, p, alpha = params.scalars(be)
    lam = (n + 1) / 2
    common = _cap_factor(n, alpha) * p * (n - p) / (n + 1) ** 2
    cc = gegenbauer(i, lam, alpha) * gegenbauer(j, lam, alpha)
    return common * cc / ((p + i) * (n - p + j)), common * cc / ((p + j) * (n - p + i))


def tilde_block_diag_11(params: Params, a: int, b: int, precision="standard"):
    """Mt^{a,b}_{11} for blocks a != b.

    Mt^{a,b}_{22} is the same expression with p replaced by n - p.
    """
    if a == b:
        raise ValueError("only off-diagonal blocks have this closed form")
    be = get_backend(precision)
    n, p, alpha = params.scalars(be)
    lam = (n + 1) / 2
    j, k = a + 1, b + 1

    def c(w):
        return gegenbauer(w, lam, alpha)

    q = n - p
    bracket = (
        j * (q + j - 1) * (q + k) / (n + 2 * j - 1) * c(j) * c(k - 1)
        - k * (q + k - 1) * (q + j) / (n + 2 * k - 1) * c(j - 1) * c(k)
        + (p + j) * (n + j - 1) * (q + j) * (q + k) / ((p + j - 1) * (n + 2 * j - 1))
        * c(j - 2) * c(k - 1)
        - (p + k) * (n + k - 1) * (q + j) * (q + k) / ((p + k - 1) * (n + 2 * k - 1))
        * c(j - 1) * c(k - 2)
    )
    return p * _cap_factor(n, alpha) / ((k - j) * (j + k + n - 1) * (n + 1) ** 2) * bracket


def _gamma_ratio(n, be: Backend):
    """Gamma(n/2 + 3/2) / (sqrt(pi) Gamma(n/2 + 1))."""
    return be.exp(be.lgamma(n / 2 + be.scalar(3) / 2) - be.lgamma(n / 2 + 1)) / be.sqrt(be.pi)


def _hyp2f1(a, b, c, z, n: int, be: Backend):
    # a = 1 - n/2 terminates for even n.
    if n % 2 == 0:
        return hyp2f1_terminating(n // 2 - 1, b, c, z)
    return be.hyp2f1(a, b, c, z)


def m00_11(params: Params, precision="standard"):
    """M^{0,0}_{11} from the antiderivative in terms of 2F1 at alpha^2 (plus 1/2 from x = -1)."""
    be = get_backend(precision)
    n, p, alpha = params.scalars(be)
    z = alpha * alpha
    a = 1 - n / 2
    three_half = be.scalar(3) / 2
    f1 = _hyp2f1(a, three_half, three_half + 1, z, params.n, be)
    f2 = _hyp2f1(a, three_half - 1, three_half, z, params.n, be)
    body = p * alpha ** 3 / 3 * f1 + (n - p) * alpha * f2
    return _gamma_ratio(n, be) * body / (n - p + 1) + be.scalar(1) / 2


def m00_12(params: Params, precision="standard"):
    be = get_backend(precision)
    n, p, alpha = params.scalars(be)
    return _gamma_ratio(n, be) * _cap_factor(n, alpha) / be.sqrt((p + 1) * (n - p + 1))


def build_m_closed_form(params: Params, precision="standard") -> BlockMatrix:
    """M assembled from closed-form entries, without any numerical integration.

    Off-diagonal entries of every block and both diagonals of off-diagonal
    blocks are explicit; the main diagonal is propagated from M_{1,1} through
    two entries of M L1 - L1 M = 0::

        (2j-1, 2j):  l_{2j-1,2j} (M_{2j,2j} - M_{2j-1,2j-1})
                       = M_{2j-1,2j} l_{2j,2j} + M_{2j-1,2j-2} l_{2j-2,2j}
                         + M_{2j-1,2j+2} l_{2j,2j+2}
        (2j, 2j+2):  l_{2j,2j+2} (M_{2j+2,2j+2} - M_{2j,2j})
                       = M_{2j,2j+2} (l_{2j+2,2j+2} - l_{2j,2j}) + M_{2j,2j+1} l_{2j+1,2j+2}
                         - M_{2j-1,2j+2} l_{2j-1,2j} + M_{2j,2j+4} l_{2j+2,2j+4}
                         - M_{2j-2,2j+2} l_{2j-2,2j}

    in the order M_{1,1} -> M_{2,2} -> M_{4,4} -> M_{3,3} -> M_{6,6} -> ...
    """
    from .commutant import build_l1

    if params.alpha == 0 or params.self_dual:
        raise DegenerateParametersError(
            "closed-form assembly divides by alpha and n - 2p; "
            f"got alpha={params.alpha}, n={params.n}, p={params.p}"
        )
    be = get_backend(precision)
    N, K = params.N, params.size
    dual = params.dual()

    tilde = be.zeros((K, K))
    for i in range(N + 1):
        for j in range(N + 1):
            tilde[2 * i, 2 * j + 1], tilde[2 * i + 1, 2 * j] = tilde_offdiag(params, i, j, be)
            if i != j:
                tilde[2 * i, 2 * j] = tilde_block_diag_11(params, i, j, be)
                tilde[2 * i + 1, 2 * j + 1] = tilde_block_diag_11(dual, i, j, be)
    d = _normalizer_vector(params, be)
    m = d[:, None] * tilde * d[None, :]
    m[0, 0] = m00_11(params, be)

    ell = build_l1(params, precision=be).toarray()

    def M(r, s):
        return m[r - 1, s - 1] if 1 <= r <= K and 1 <= s <= K else 0

    def L(r, s):
        return ell[r - 1, s - 1] if 1 <= r <= K and 1 <= s <= K else 0

    for j in range(1, N + 2):
        rhs = (M(2 * j - 1, 2 * j) * L(2 * j, 2 * j) + M(2 * j - 1, 2 * j - 2) * L(2 * j - 2, 2 * j)
               + M(2 * j - 1, 2 * j + 2) * L(2 * j, 2 * j + 2)) / L(2 * j - 1, 2 * j)
        if j == 1:
            m[1, 1] = m[0, 0] + rhs
        else:
            # M_{2j,2j} is already known from the previous (2j-2, 2j) step.
            m[2 * j - 2, 2 * j - 2] = m[2 * j - 1, 2 * j - 1] - rhs
        if j <= N:
            rhs = (M(2 * j, 2 * j + 2) * (L(2 * j + 2, 2 * j + 2) - L(2 * j, 2 * j))
                   + M(2 * j, 2 * j + 1) * L(2 * j + 1, 2 * j + 2)
                   - M(2 * j - 1, 2 * j + 2) * L(2 * j - 1, 2 * j)
                   + M(2 * j, 2 * j + 4) * L(2 * j + 2, 2 * j + 4)
                   - M(2 * j - 2, 2 * j + 2) * L(2 * j - 2, 2 * j)) / L(2 * j, 2 * j + 2)
            m[2 * j + 1, 2 * j + 1] = m[2 * j - 1, 2 * j - 1] + rhs
    return _finish(m, be, "closed_form", None)


def duality_map(m: BlockMatrix, params: Params | None = None) -> BlockMatrix:
    """Conjugate every block by J = [[0, 1], [1, 0]].

    The result is M for (n, n - p, N, alpha) because J W_{p,n} J = W_{n-p,n}.
    """
    perm = np.arange(m.size).reshape(-1, 2)[:, ::-1].ravel()
    vals = m.values[np.ix_(perm, perm)].copy()
    return replace(m, values=vals, route=m.route + "+dual")


def residual_relative(a: BlockMatrix | np.ndarray, b: BlockMatrix | np.ndarray) -> float:
    """max|a - b| / max|b|: entrywise error measured against the matrix scale."""
    fa = np.asarray(a, dtype=float)
    fb = np.asarray(b, dtype=float)
    return _max_abs(fa - fb) / max(_max_abs(fb), np.finfo(float).tiny)
