"""Scalar backends: IEEE double (numpy) or an isolated mpmath context.

Library routines take a ``precision`` argument that is either a backend
instance or one of the strings ``"standard"`` / ``"extended"``.  Arrays built
by the extended backend have ``dtype=object`` and hold ``mpf`` entries.
"""
from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import numpy as np
import scipy.special

EXTENDED_DPS = 40


class Backend:
    name: str
    dtype: object
    eps: float

    def scalar(self, x):
        raise NotImplementedError

    def array(self, values):
        return np.array(values, dtype=self.dtype)

    def zeros(self, shape):
        raise NotImplementedError

    def eye(self, k):
        out = self.zeros((k, k))
        for i in range(k):
            out[i, i] = self.scalar(1)
        return out

    def to_float(self, a):
        return np.asarray(a, dtype=float)


class StandardBackend(Backend):
    name = "standard"
    dtype = float
    eps = float(np.finfo(float).eps)

    def scalar(self, x):
        if isinstance(x, Fraction):
            return x.numerator / x.denominator
        return float(x)

    def zeros(self, shape):
        return np.zeros(shape)

    sqrt = staticmethod(np.sqrt)
    exp = staticmethod(np.exp)
    log = staticmethod(np.log)
    # pi/lgamma are scalar-only helpers
    pi = math.pi

    @staticmethod
    def lgamma(x):
        return math.lgamma(x)

    @staticmethod
    def hyp2f1(a, b, c, z):
        return float(scipy.special.hyp2f1(a, b, c, z))


class ExtendedBackend(Backend):
    name = "extended"
    dtype = object

    def __init__(self, dps: int = EXTENDED_DPS):
        self.ctx = mpmath.MPContext()
        self.ctx.dps = dps
        self.dps = dps
        self.eps = float(self.ctx.eps)
        self.pi = self.ctx.pi

    def scalar(self, x):
        if isinstance(x, Fraction):
            return self.ctx.mpf(x.numerator) / x.denominator
        if isinstance(x, (int, np.integer)):
            return self.ctx.mpf(int(x))
        return self.ctx.mpf(x)

    def zeros(self, shape):
        out = np.empty(shape, dtype=object)
        out[...] = self.ctx.mpf(0)
        return out

    def _map(self, f, x):
        if isinstance(x, np.ndarray):
            return np.frompyfunc(f, 1, 1)(x).astype(object)
        return f(x)

    def sqrt(self, x):
        return self._map(self.ctx.sqrt, x)

    def exp(self, x):
        return self._map(self.ctx.exp, x)

    def log(self, x):
        return self._map(self.ctx.log, x)

    def lgamma(self, x):
        return self.ctx.loggamma(x)

    def hyp2f1(self, a, b, c, z):
        return self.ctx.hyp2f1(a, b, c, z)

    def to_float(self, a):
        return np.vectorize(float, otypes=[float])(np.asarray(a, dtype=object))


STANDARD = StandardBackend()
EXTENDED = ExtendedBackend()


def get_backend(precision: str | Backend = "standard") -> Backend:
    if isinstance(precision, Backend):
        return precision
    if precision == "standard":
        return STANDARD
    if precision == "extended":
        return EXTENDED
    raise ValueError(f"unknown precision {precision!r}; use 'standard' or 'extended'")

