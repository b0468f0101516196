"""Scalar kernels: Pochhammer symbols, terminating 2F1 series, Gegenbauer
polynomials and Gauss-Jacobi rules on [0, 1].

Every routine works on floats, ``Fraction`` (where the arithmetic allows it)
and mpmath numbers; the quadrature builder takes an explicit precision.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .precision import Backend, get_backend


def pochhammer(a, k: int):
    """Rising factorial a(a+1)...(a+k-1); 1 for k = 0."""
    if k < 0:
        raise ValueError("k must be a nonnegative integer")
    out = a * 0 + 1
    for j in range(k):
        out = out * (a + j)
    return out


def hyp2f1_terminating(w: int, b, c, z):
    """Sum_{j=0}^{w} (-w)_j (b)_j / ((c)_j j!) z^j.

    Raises ZeroDivisionError when c + j = 0 for some j < w.
    """
    if w < 0:
        raise ValueError("w must be a nonnegative integer")
    term = z * 0 + 1
    total = term
    for j in range(w):
        denom = (c + j) * (j + 1)
        if denom == 0:
            raise ZeroDivisionError(f"c + {j} = 0 in the denominator of the series")
        term = term * ((j - w) * (b + j)) / denom * z
        total = total + term
    return total


def gegenbauer(w: int, lam, x):
    """C_w^lam(x) by the three-term recurrence; zero for negative w.

    ``x`` may be a scalar or a numpy array (float or object dtype).
    """
    zero = x * 0
    if w < 0:
        return zero
    prev = zero + 1
    if w == 0:
        return prev
    cur = 2 * lam * x
    for k in range(2, w + 1):
        prev, cur = cur, (2 * x * (k + lam - 1) * cur - (k + 2 * lam - 2) * prev) / k
    return cur


def gegenbauer_series(w: int, lam, x):
    """C_w^lam(x) = (2 lam)_w / w! * 2F1(-w, w + 2 lam; lam + 1/2; (1 - x)/2).

    Reference form only; it alternates and loses digits as w grows.
    """
    if w < 0:
        return x * 0
    fact = 1
    for j in range(2, w + 1):
        fact *= j
    half = (lam * 0 + 1) / 2
    return pochhammer(2 * lam, w) / fact * hyp2f1_terminating(
        w, w + 2 * lam, lam + half, (1 - x) / 2
    )


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss rule for the weight t**beta on [0, 1]."""

    nodes: np.ndarray
    weights: np.ndarray
    beta: object
    order: int

    def integrate(self, values):
        """Apply the rule to g sampled at the nodes (last axis)."""
        return np.asarray(values) @ self.weights


def _recurrence(order: int, beta, be: Backend):
    # Monic Jacobi recurrence for (1-u)^0 (1+u)^beta, mapped to t = (1+u)/2.
    one = be.scalar(1)
    a = be.scalar(0)
    b = beta
    diag = []
    offsq = []
    for k in range(order):
        s = 2 * k + a + b
        if k == 0:
            ak = (b - a) / (a + b + 2)
        else:
            ak = (b * b - a * a) / (s * (s + 2))
        diag.append((ak + one) / 2)
    for k in range(1, order):
        s = 2 * k + a + b
        bk = 4 * k * (k + a) * (k + b) * (k + a + b) / (s * s * (s + 1) * (s - 1))
        offsq.append(bk / 4)
    return diag, offsq


def _polish(t, diag, off, p0, order, tol):
    """Newton refinement of one node; returns the node and its Christoffel weight."""
    for _ in range(60):
        p_prev, p = 0 * t, p0
        d_prev, d = 0 * t, 0 * t
        sumsq = p * p
        for k in range(order):
            bk = off[k] if k < order - 1 else 1
            bkm = off[k - 1] if k > 0 else 0
            p_new = ((t - diag[k]) * p - bkm * p_prev) / bk
            d_new = ((t - diag[k]) * d + p - bkm * d_prev) / bk
            p_prev, p = p, p_new
            d_prev, d = d, d_new
            if k < order - 1:
                sumsq = sumsq + p * p
        step = p / d
        t = t - step
        if abs(step) <= tol * abs(t):
            break
    return t, 1 / sumsq


def gauss_jacobi_rule(order: int, beta, precision="standard") -> QuadratureRule:
    """Nodes/weights with sum w_i g(t_i) ~ int_0^1 t^beta g(t) dt.

    Exact for polynomial g of degree <= 2*order - 1.  Nodes come from the
    eigenvalues of the symmetric Jacobi matrix (Golub-Welsch); in extended
    precision they are refined by Newton steps on the recurrence and the
    weights recomputed from the Christoffel function.
    """
    if int(order) != order or order < 1:
        raise ValueError("order must be a positive integer")
    order = int(order)
    be = get_backend(precision)
    beta = be.scalar(beta)
    if not beta > -1:
        raise ValueError(f"beta must exceed -1, got {beta}")
    mu0 = 1 / (beta + 1)

    diag, offsq = _recurrence(order, beta, be)
    d = np.array([float(v) for v in diag])
    if order == 1:
        nodes, vecs = d, np.ones((1, 1))
    else:
        e = np.sqrt(np.array([float(v) for v in offsq]))
        nodes, vecs = eigh_tridiagonal(d, e)
    if be.name == "standard":
        return QuadratureRule(nodes=nodes, weights=vecs[0] ** 2 * mu0, beta=beta, order=order)

    off = [be.sqrt(v) for v in offsq]
    p0 = 1 / be.sqrt(mu0)
    tol = be.scalar(10) ** (4 - be.dps)
    xs = be.zeros(order)
    ws = be.zeros(order)
    for i, t0 in enumerate(nodes):
        xs[i], ws[i] = _polish(be.scalar(t0), diag, off, p0, order, tol)
    return QuadratureRule(nodes=xs, weights=ws, beta=beta, order=order)
