import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from opclass_lab.errors import NonSquare, NotHermitian, NotPositiveDefinite, NotPSD
from opclass_lab.harness import make_rng, random_dense, random_psd
from opclass_lab.numkernel import (
    DEFAULT_TOL,
    ToleranceProfile,
    direct_sum,
    herm_eig,
    jacobi_eigh,
    loewner_leq,
    matrix_log,
    norm,
    pinv_sqrt,
    polar,
    psd_power,
    range_projection,
)

seeds = st.integers(0, 2**32 - 1)


def random_hermitian(seed, dim):
    x = random_dense(make_rng(seed), dim)
    return x + x.conj().T


def test_tolerance_profile_rejects_negative():
    with pytest.raises(ValueError):
        ToleranceProfile(psd_tol=-1.0)
    with pytest.raises(ValueError):
        ToleranceProfile(eq_rtol=float("nan"))


class TestHermEig:
    def test_diagonal(self):
        w, v = herm_eig(np.diag([2.0, 1.0]))
        assert np.allclose(w, [1, 2])
        assert np.allclose(np.abs(v), [[0, 1], [1, 0]])

    def test_swap(self):
        w, _ = herm_eig(np.array([[0, 1], [1, 0]]))
        assert np.allclose(w, [-1, 1])

    def test_identity(self):
        w, v = herm_eig(np.eye(3))
        assert np.allclose(w, 1)
        assert np.allclose(v.conj().T @ v, np.eye(3))

    def test_errors(self):
        with pytest.raises(NonSquare):
            herm_eig(np.ones((2, 3)))
        with pytest.raises(NotHermitian):
            herm_eig(np.array([[0, 1], [0, 0]]))

    @settings(max_examples=40, deadline=None)
    @given(seeds, st.integers(1, 16), st.sampled_from(["lapack", "jacobi"]))
    def test_round_trip(self, seed, dim, method):
        m = random_hermitian(seed, dim)
        w, v = herm_eig(m, method=method)
        assert np.all(np.diff(w) >= 0)
        assert norm((v * w) @ v.conj().T - m) <= 1e-10 * norm(m)
        assert norm(v.conj().T @ v - np.eye(dim)) <= DEFAULT_TOL.proj_tol

    @settings(max_examples=30, deadline=None)
    @given(seeds, st.integers(1, 20))
    def test_jacobi_matches_lapack(self, seed, dim):
        m = random_hermitian(seed, dim)
        w_j, _ = jacobi_eigh(m)
        assert np.allclose(w_j, np.linalg.eigvalsh(m), atol=1e-12 * max(norm(m), 1))


class TestPsdPower:
    def test_examples(self):
        assert np.allclose(psd_power(np.diag([4.0, 9.0]), 0.5), np.diag([2, 3]))
        assert np.allclose(psd_power(np.eye(3), 0.37), np.eye(3))
        m = np.array([[2.0, 1.0], [1.0, 2.0]])
        assert np.allclose(psd_power(m, 2), m @ m)

    def test_rejects_indefinite(self):
        with pytest.raises(NotPSD):
            psd_power(np.diag([1.0, -1.0]), 0.5)

    @settings(max_examples=30, deadline=None)
    @given(seeds, st.integers(1, 8), st.sampled_from([1 / 3, 0.5, 2.0]), st.sampled_from([1 / 3, 0.5, 2.0]))
    def test_semigroup(self, seed, dim, p, q):
        m = random_psd(make_rng(seed), dim)
        lhs = psd_power(psd_power(m, p), q)
        assert norm(lhs - psd_power(m, p * q)) <= 1e-9 * max(norm(lhs), 1e-300)

    @settings(max_examples=30, deadline=None)
    @given(seeds, st.integers(1, 8), st.floats(0.1, 4.0))
    def test_matches_scipy(self, seed, dim, p):
        m = random_psd(make_rng(seed), dim)
        oracle = sla.fractional_matrix_power(m, p)
        assert norm(psd_power(m, p) - oracle) <= 1e-9 * norm(oracle)


class TestMatrixLog:
    def test_examples(self):
        assert np.allclose(matrix_log(np.eye(2)), 0)
        assert np.allclose(matrix_log(np.diag([np.e, np.e**2])), np.diag([1, 2]))
        m = np.array([[2.0, 1.0], [1.0, 2.0]])
        assert np.allclose(np.linalg.eigvalsh(matrix_log(m)), [0.0, np.log(3)])
        assert np.allclose(matrix_log(m), sla.logm(m))

    def test_singular(self):
        with pytest.raises(NotPositiveDefinite):
            matrix_log(np.diag([1.0, 0.0]))


class TestLoewner:
    def test_examples(self):
        assert loewner_leq(np.zeros((2, 2)), np.eye(2))
        assert not loewner_leq(np.diag([1.0, -1.0]), np.zeros((2, 2)))
        assert not loewner_leq(np.diag([0.0, 1.0]), np.diag([1.0, 0.0]))

    @settings(max_examples=30, deadline=None)
    @given(seeds, st.integers(1, 6))
    def test_transitive(self, seed, dim):
        rng = make_rng(seed)
        x = random_psd(rng, dim)
        y = x + random_psd(rng, dim, 0.01, 1.0)
        z = y + random_psd(rng, dim, 0.01, 1.0)
        assert loewner_leq(x, y) and loewner_leq(y, z) and loewner_leq(x, z)


class TestPolar:
    def test_unitary(self):
        u = np.array([[0, 1j], [1, 0]])
        mod, w = polar(u)
        assert np.allclose(mod, np.eye(2)) and np.allclose(w, u)

    def test_rank_deficient(self):
        mod, w = polar(np.diag([3.0, 0.0]))
        assert np.allclose(mod, np.diag([3, 0]))
        assert np.allclose(w, np.diag([1, 0]))
        mod, _ = polar(np.array([[0, 0], [2, 0]]))
        assert np.allclose(mod, np.diag([2, 0]))

    @settings(max_examples=30, deadline=None)
    @given(seeds, st.integers(1, 16))
    def test_reconstruction_and_scipy(self, seed, dim):
        t = random_dense(make_rng(seed), dim)
        mod, w = polar(t)
        assert norm(w @ mod - t) <= 1e-10 * norm(t)
        u_sp, p_sp = sla.polar(t)
        assert norm(mod - p_sp) <= 1e-10 * norm(t)


class TestPinvSqrt:
    def test_examples(self):
        assert np.allclose(pinv_sqrt(np.eye(2)), np.eye(2))
        assert np.allclose(pinv_sqrt(np.diag([4.0, 0.0])), np.diag([0.5, 0]))
        m = np.array([[2.0, 1.0], [1.0, 2.0]])
        assert np.allclose(pinv_sqrt(m), np.linalg.inv(sla.sqrtm(m)))

    @settings(max_examples=30, deadline=None)
    @given(seeds, st.integers(1, 8), st.integers(0, 8))
    def test_projection_onto_range(self, seed, dim, rank):
        b = random_psd(make_rng(seed), dim, rank=min(rank, dim))
        prod = pinv_sqrt(b) @ psd_power(b, 0.5)
        assert norm(prod - range_projection(b)) <= DEFAULT_TOL.proj_tol


def test_direct_sum_skips_absent():
    out = direct_sum(None, np.eye(1), 2 * np.eye(2))
    assert np.allclose(out, np.diag([1, 2, 2]))
