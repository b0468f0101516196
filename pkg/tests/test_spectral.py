from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import ortho_group

from mvtbl.commutant import build_l1, l1_det_formula
from mvtbl.errors import CertificationError, ConvergenceError
from mvtbl.limiting import build_m_quadrature
from mvtbl.mvop import Params
from mvtbl.spectral import (align_eigenvectors, l1_eigenvector_backsub, simplicity_check,
                            stable_m_eigenbasis, symmetric_eigen)

from conftest import REF, grid

REFERENCE_L1 = [-5.61601, -5.54541, -5.4863, 6.46314, 6.55601, 6.63761]
# Columns of Y (the L1 eigenvectors) for the eigenvalue 6.46314 (reference values).
REFERENCE_Y_FIRST = [0.641473, 0.688247, -0.229364, -0.24584, 0.028825, 0.0308702]


def test_identity_spectrum():
    s = symmetric_eigen(np.eye(5))
    assert np.all(s.eigenvalues == 1) and s.residual == 0 and s.sweeps == 0
    assert np.array_equal(s.eigenvectors, np.eye(5))


def test_round_trip_conjugation():
    q = ortho_group.rvs(3, random_state=7)
    a = q @ np.diag([1.0, 2.0, 3.0]) @ q.T
    s = symmetric_eigen((a + a.T) / 2)
    assert np.max(np.abs(s.eigenvalues - [1, 2, 3])) <= 1e-12


sym = st.integers(2, 9).flatmap(
    lambda k: st.lists(st.floats(-10, 10), min_size=k * k, max_size=k * k).map(
        lambda v: np.array(v).reshape(k, k)))


@given(sym)
def test_spectrum_invariants(a):
    a = a + a.T
    s = symmetric_eigen(a)
    v, lam = s.eigenvectors, s.eigenvalues
    norm = max(np.linalg.norm(a), 1e-300)
    assert np.all(np.diff(lam) >= 0)
    assert np.max(np.abs(v.T @ v - np.eye(len(lam)))) <= 1e-12
    assert s.residual <= 1e-11 * norm
    assert np.max(np.abs(v @ np.diag(lam) @ v.T - a)) <= 1e-11 * norm
    assert np.allclose(lam, np.linalg.eigvalsh(a), atol=1e-11 * norm)
    for k in range(v.shape[1]):
        i = int(np.argmax(np.abs(v[:, k])))
        assert v[i, k] > 0


def test_determinism_and_validation():
    a = build_m_quadrature(REF).as_float()
    s1, s2 = symmetric_eigen(a), symmetric_eigen(a.copy())
    assert np.array_equal(s1.eigenvalues, s2.eigenvalues)
    assert np.array_equal(s1.eigenvectors, s2.eigenvectors)
    with pytest.raises(ValueError):
        symmetric_eigen(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        symmetric_eigen(np.ones((2, 3)))
    with pytest.raises(ConvergenceError):
        symmetric_eigen(np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 5.0], [3.0, 5.0, 6.0]]), max_sweeps=1, tol=1e-300)


def test_reference_l1_spectrum():
    s = symmetric_eigen(build_l1(REF, unit_diagonal=4))
    assert np.max(np.abs(np.asarray(s.eigenvalues) - REFERENCE_L1)) <= 5e-4
    assert np.prod(symmetric_eigen(build_l1(REF)).eigenvalues) == pytest.approx(
        l1_det_formula(build_l1(REF)), rel=1e-8)


def test_extended_eigensolver():
    l1 = build_l1(REF, precision="extended")
    s = symmetric_eigen(l1)
    assert s.precision == "extended" and s.residual < 1e-35
    assert np.allclose(np.array(s.eigenvalues, dtype=float), symmetric_eigen(build_l1(REF)).eigenvalues, rtol=1e-14)


def test_backsub_reference_vector():
    l1 = build_l1(REF, unit_diagonal=4)
    lam = symmetric_eigen(l1).eigenvalues[3]
    assert lam == pytest.approx(REFERENCE_L1[3], abs=5e-4)
    v = l1_eigenvector_backsub(l1, lam).vector
    sign = np.sign(v[0])
    assert np.max(np.abs(sign * v - REFERENCE_Y_FIRST)) <= 5e-4


def test_backsub_residual_and_rejection():
    l1 = build_l1(REF)
    a = l1.toarray()
    lam = symmetric_eigen(l1).eigenvalues
    for x in lam:
        b = l1_eigenvector_backsub(l1, x)
        assert b.is_eigenvalue and b.defect <= 1e-8
        assert np.linalg.norm(a @ b.vector - x * b.vector) <= 1e-8
        assert np.linalg.norm(b.vector) == pytest.approx(1, abs=1e-15)
    for lo, hi in zip(lam[:-1], lam[1:]):
        b = l1_eigenvector_backsub(l1, (lo + hi) / 2)
        assert b.defect > 1e-3 and not b.is_eigenvalue
    with pytest.raises(ValueError):
        l1_eigenvector_backsub(l1, 0.0)


def test_backsub_extended():
    l1 = build_l1(REF, precision="extended")
    s = symmetric_eigen(l1)
    for k, x in enumerate(s.eigenvalues):
        b = l1_eigenvector_backsub(l1, x)
        assert b.defect < 1e-30
        assert max(abs(u - w) for u, w in zip(b.vector, s.eigenvectors[:, k])) < 1e-30


def test_backsub_agrees_with_eigensolver_on_grid():
    for P in grid(levels=(1, 2, 5)):
        l1 = build_l1(P)
        s = symmetric_eigen(l1)
        for k, x in enumerate(s.eigenvalues):
            b = l1_eigenvector_backsub(l1, x)
            assert b.defect <= 1e-8
            assert np.max(np.abs(b.vector - s.eigenvectors[:, k])) <= 1e-8, (P, k)


def test_simplicity():
    s = symmetric_eigen(build_l1(REF, unit_diagonal=4))
    rep = simplicity_check(s)
    assert rep.simple and 0.05 <= rep.min_gap <= 0.1
    assert len(rep.gaps) == 5
    m = symmetric_eigen(build_m_quadrature(REF).as_float())
    assert simplicity_check(m).min_gap < 0.05
    assert not simplicity_check(symmetric_eigen(np.eye(4))).simple


def test_alignment():
    q = ortho_group.rvs(5, random_state=3)
    rep = align_eigenvectors(q, q)
    assert rep.permutation == {i: i for i in range(5)} and not rep.unmatched
    assert all(abs(v - 1) <= 1e-12 for v in rep.pair_overlaps.values())
    perm = [3, 0, 4, 1, 2]
    y = q[:, perm] * np.array([1, -1, 1, -1, -1])
    rep = align_eigenvectors(q, y)
    assert rep.permutation == {i: perm[i] for i in range(5)}
    assert np.all(rep.overlap <= 1 + 1e-12) and np.all(rep.overlap >= 0)
    with pytest.raises(ValueError):
        align_eigenvectors(q, q[:, :3])


def test_alignment_m_vs_l1_extended():
    # M eigenvectors from 40-digit arithmetic line up with the double L1 ones.
    m = build_m_quadrature(Params(27, Fraction(15), 2, Fraction(9, 10)), precision="extended")
    x = np.array(symmetric_eigen(m.values).eigenvectors, dtype=float)
    y = symmetric_eigen(build_l1(REF)).eigenvectors
    rep = align_eigenvectors(x, y)
    assert not rep.unmatched
    assert min(rep.pair_overlaps.values()) >= 1 - 1e-6


def test_stable_route_reference():
    s = stable_m_eigenbasis(REF)
    assert len(s.eigenvalues) == 6 and s.residual <= 1e-8
    assert np.all(np.abs(s.eigenvalues - 1) < 0.05)
    assert stable_m_eigenbasis(REF, method="backsub").residual <= 1e-8
    with pytest.raises(ValueError):
        stable_m_eigenbasis(REF, method="qr")


def test_stable_route_full_interval():
    s = stable_m_eigenbasis(REF.with_alpha(1))
    assert np.max(np.abs(s.eigenvalues - 1)) <= 1e-12


def test_certification_failure():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((6, 6))
    with pytest.raises(CertificationError) as err:
        stable_m_eigenbasis(REF, m=a + a.T)
    assert err.value.residual > 1e-8


def test_certification_on_grid():
    worst = 0.0
    for P in grid(levels=(1, 2, 5)):
        worst = max(worst, stable_m_eigenbasis(P).residual)
    assert worst <= 1e-8
