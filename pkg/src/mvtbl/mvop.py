"""The 2x2 weight W_{p,n} on [-1, 1], its orthogonal polynomials P_w, their
norms, the diagonal normalizers S_w and the orthonormal family Q_w = S_w P_w.

2x2 values are returned as numpy arrays of shape (2, 2) when ``x`` is a
scalar and (2, 2, m) when ``x`` holds m sample points.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Integral, Real

import numpy as np

from .errors import InvalidParametersError
from .precision import get_backend
from .special import gegenbauer


@dataclass(frozen=True)
class Params:
    """Problem data (n, p, N, alpha).

    ``p`` and ``alpha`` may be given as ``Fraction`` so that the extended
    backend sees them exactly (the usual alpha = 9/10 is not a binary float).
    """

    n: int
    p: Real
    N: int
    alpha: Real = Fraction(9, 10)

    def __post_init__(self):
        if not isinstance(self.n, Integral) or self.n < 1:
            raise InvalidParametersError(f"n must be an integer >= 1, got {self.n!r}")
        if not isinstance(self.N, Integral) or self.N < 0:
            raise InvalidParametersError(f"N must be an integer >= 0, got {self.N!r}")
        if not 0 < self.p < self.n:
            raise InvalidParametersError(f"need 0 < p < n, got p={self.p}, n={self.n}")
        if not -1 < self.alpha <= 1:
            raise InvalidParametersError(f"need -1 < alpha <= 1, got {self.alpha}")

    @property
    def size(self) -> int:
        return 2 * (self.N + 1)

    @property
    def self_dual(self) -> bool:
        """n = 2p: the closed forms for L1, L2 divide by n - 2p."""
        return 2 * self.p == self.n

    @property
    def outside_displayed_range(self) -> bool:
        return self.n <= 2

    def dual(self) -> "Params":
        """Parameters with p replaced by n - p."""
        return Params(self.n, self.n - self.p, self.N, self.alpha)

    def with_alpha(self, alpha) -> "Params":
        return Params(self.n, self.p, self.N, alpha)

    def scalars(self, precision="standard"):
        """(n, p, alpha) converted to the backend's scalar type."""
        be = get_backend(precision)
        return be.scalar(self.n), be.scalar(self.p), be.scalar(self.alpha)

    def as_dict(self) -> dict:
        return {"n": int(self.n), "p": float(self.p), "N": int(self.N), "alpha": float(self.alpha)}


def _stack(a11, a12, a21, a22):
    return np.array([[a11, a12], [a21, a22]])


def weight_eval(params: Params, x, precision="standard"):
    """W_{p,n}(x) = (1 - x^2)^(n/2 - 1) [[p x^2 + n - p, -n x], [-n x, (n - p) x^2 + p]]."""
    be = get_backend(precision)
    n, p, _ = params.scalars(be)
    x = _cast(x, be)
    pref = (1 - x * x) ** (n / 2 - 1)
    return _stack(
        pref * (p * x * x + n - p), -pref * n * x, -pref * n * x, pref * ((n - p) * x * x + p)
    )


def p_eval(params: Params, w: int, x, precision="standard"):
    """P_w(x).  The entries combine C_w^{(n+1)/2} with C_{w-1}, C_{w-2} of
    index (n+3)/2; Gegenbauer polynomials of negative degree vanish."""
    if w < 0:
        raise ValueError("w must be nonnegative")
    be = get_backend(precision)
    n, p, _ = params.scalars(be)
    x = _cast(x, be)
    lam0 = (n + 1) / 2
    lam1 = (n + 3) / 2
    c0 = gegenbauer(w, lam0, x) / (n + 1)
    c1 = gegenbauer(w - 1, lam1, x)
    c2 = gegenbauer(w - 2, lam1, x)
    return _stack(c0 + c2 / (p + w), c1 / (p + w), c1 / (n - p + w), c0 + c2 / (n - p + w))


def _norm_scale_log(n, w: int, be):
    """log of the scalar prefactor of ||P_w||^2."""
    h = w // 2
    log = be.log
    out = (
        log(be.pi) / 2
        + h * log(be.scalar(2))
        + be.lgamma(n / 2 + 1 + h)
        - be.lgamma(be.scalar(w + 1))
        - log(n + 1)
        - log(n + 2 * w + 1)
        - be.lgamma(n / 2 + be.scalar(3) / 2)
    )
    for k in range((w - 1) // 2 + 1):
        out = out + log(n + 2 * k + 1)
    return out


def norm_squared(params: Params, w: int, precision="standard"):
    """<P_w, P_w> over [-1, 1]; always diagonal.  Gamma ratios go through
    log-gamma so large n does not overflow."""
    be = get_backend(precision)
    n, p, _ = params.scalars(be)
    c = be.exp(_norm_scale_log(n, w, be))
    out = be.zeros((2, 2))
    out[0, 0] = c * p * (n - p + w + 1) / (p + w)
    out[1, 1] = c * (n - p) * (p + w + 1) / (n - p + w)
    return out


def normalizer_diagonal(params: Params, w: int, precision="standard"):
    """The two diagonal entries of S_w = ||P_w||^{-1}."""
    be = get_backend(precision)
    n, p, _ = params.scalars(be)
    half = be.exp(-_norm_scale_log(n, w, be) / 2)
    s11 = half * be.sqrt((p + w) / (p * (n - p + w + 1)))
    s22 = half * be.sqrt((n - p + w) / ((n - p) * (p + w + 1)))
    return s11, s22


def normalizer(params: Params, w: int, precision="standard"):
    be = get_backend(precision)
    s11, s22 = normalizer_diagonal(params, w, be)
    out = be.zeros((2, 2))
    out[0, 0] = s11
    out[1, 1] = s22
    return out


def q_eval(params: Params, w: int, x, precision="standard"):
    """Q_w(x) = S_w P_w(x)."""
    s11, s22 = normalizer_diagonal(params, w, precision)
    pw = p_eval(params, w, x, precision)
    pw[0] = s11 * pw[0]
    pw[1] = s22 * pw[1]
    return pw


def _cast(x, be):
    if isinstance(x, (np.ndarray, list, tuple)):
        x = np.asarray(x, dtype=object if be.name != "standard" else None)
        if be.name == "standard":
            return x.astype(float)
        return np.frompyfunc(be.scalar, 1, 1)(x).astype(object)
    return be.scalar(x)
