import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from opclass_lab.errors import ExponentTooSmall, GapTooSmall, NotNormal
from opclass_lab.harness import make_rng, random_dense, random_normal, random_unitary
from opclass_lab.numkernel import herm_eig, norm
from opclass_lab.roots import (
    PRINCIPAL,
    BranchRule,
    flatness_search,
    normal_eig,
    spectral_nth_root,
    verify_kupia,
    verify_root,
    verify_rowm,
)

ROT = np.array([[0.0, -1.0], [1.0, 0.0]])
JORDAN = np.array([[0.0, 1.0], [0.0, 0.0]])
seeds = st.integers(0, 2**32 - 1)


class TestNormalEig:
    def test_hermitian_agrees(self):
        x = random_dense(make_rng(0), 4)
        h = x + x.conj().T
        mu, _ = normal_eig(h)
        assert np.allclose(np.sort(mu.real), herm_eig(h)[0]) and np.allclose(mu.imag, 0)

    def test_rotation(self):
        mu, u = normal_eig(ROT)
        assert np.allclose(sorted(mu, key=lambda z: z.imag), [-1j, 1j])
        assert np.allclose((u * mu) @ u.conj().T, ROT)

    def test_unitary_diagonal(self):
        theta = np.array([0.3, -2.0, 2.9])
        mu, _ = normal_eig(np.diag(np.exp(1j * theta)))
        assert np.allclose(np.sort(np.angle(mu)), np.sort(theta))

    def test_not_normal(self):
        with pytest.raises(NotNormal):
            normal_eig(JORDAN)

    def test_repeated_real_parts(self):
        # Eigenvalues sharing a real part need the imaginary-part pass.
        u = random_unitary(make_rng(2), 4)
        n = (u * np.array([1 + 1j, 1 - 1j, 1 + 0.5j, -2])) @ u.conj().T
        mu, v = normal_eig(n)
        assert norm((v * mu) @ v.conj().T - n) <= 1e-12


class TestSpectralRoot:
    def test_examples(self):
        assert np.allclose(spectral_nth_root(np.diag([4.0]), 2), [[2]])
        assert np.allclose(spectral_nth_root(np.diag([-1.0]), 2), [[1j]])
        r = spectral_nth_root(ROT, 2)
        assert np.allclose(r @ r, ROT) and norm(r @ r.conj().T - r.conj().T @ r) < 1e-12
        assert np.allclose(sorted(np.angle(np.linalg.eigvals(r))), [-math.pi / 4, math.pi / 4])

    def test_branch_rules(self):
        z = cmath.exp(0.9j * math.pi)
        assert PRINCIPAL.root(z, 2) == pytest.approx(cmath.exp(0.45j * math.pi))
        rot = BranchRule("rotated", offset=math.pi / 2)
        assert rot.root(cmath.exp(-0.9j * math.pi), 2) == pytest.approx(cmath.exp(0.55j * math.pi))
        custom = BranchRule("custom", table=((0.0, math.pi + 1, 1),))
        assert custom.root(z, 2) == pytest.approx(-cmath.exp(0.45j * math.pi))

    @settings(max_examples=60, deadline=None)
    @given(seeds, st.integers(1, 8), st.sampled_from([2, 3, 5]))
    def test_reconstruction(self, seed, dim, n):
        nm = random_normal(make_rng(seed), dim, 0.0, 2.0)
        r = spectral_nth_root(nm, n)
        assert norm(np.linalg.matrix_power(r, n) - nm) <= 1e-9 * max(norm(nm), 1)
        assert norm(r @ nm - nm @ r) <= 1e-9 * max(norm(nm), 1)
        other = spectral_nth_root(nm, n, BranchRule("rotated", offset=1.0))
        assert verify_root(other, nm, n) == verify_root(r, nm, n) is True

    @settings(max_examples=30, deadline=None)
    @given(seeds, st.integers(1, 6), st.sampled_from([(2, 2), (2, 3)]))
    def test_composition(self, seed, dim, ab):
        a, b = ab
        nm = random_normal(make_rng(seed), dim)
        r = np.linalg.matrix_power(spectral_nth_root(nm, a * b), a)
        assert verify_root(r, nm, b)

    def test_verify_root_examples(self):
        assert verify_root(2 * np.eye(2), 4 * np.eye(2), 2)
        assert verify_root(np.array([[1.0, 1.0], [0.0, -1.0]]), np.eye(2), 2)
        assert not verify_root(np.eye(2), 2 * np.eye(2), 2)


class TestFlatness:
    def test_rowm_examples(self):
        rep = verify_rowm(np.diag([1.0, 2.0]), 1, 3)
        assert rep.chain_equal and rep.quasinormal_verdict
        rep = verify_rowm(JORDAN, 1, 3)
        assert not rep.chain_equal and not rep.class_a and not rep.violation
        rep = verify_rowm(np.zeros((2, 2)), 1, 3)
        assert rep.chain_equal and rep.quasinormal_verdict
        with pytest.raises(GapTooSmall):
            verify_rowm(JORDAN, 2, 3)

    def test_kupia_examples(self):
        rep = verify_kupia(random_normal(make_rng(4), 3), 2, 2)
        assert rep.single_eq_ok and rep.class_a and rep.quasinormal_verdict
        rep = verify_kupia(JORDAN, 2, 2)
        assert rep.single_eq_ok and not rep.class_a and not rep.violation
        assert all(verify_kupia(np.diag([1.0, 2.0]), 3, 2)[:3])
        with pytest.raises(ExponentTooSmall):
            verify_kupia(JORDAN, 1, 2)

    def test_search_examples(self):
        assert flatness_search(2, 0, 3) == []
        assert flatness_search(2, 50, 3, family="normal") == []

    def test_search_random_negative(self):
        assert flatness_search(2, 2000, 3, rng_seed=42) == []
