import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from opclass_lab.errors import HorizonTooSmall, NotCommuting, NotNormal, ShiftFactorNotUnit, TruncationTooSmall
from opclass_lab.harness import make_rng, random_brown_form, random_normal, random_periodic_shift
from opclass_lab.numkernel import norm
from opclass_lab.shifts import (
    BrownForm,
    WeightSequence,
    bluk_target,
    check_porws,
    construct_bluk_root,
    construct_nrits_root,
    construct_piurwa,
    piurwa_from_draws,
    porws_matrix_condition,
    shift_is_quasinormal,
    shift_is_subnormal,
    shift_moments,
    trunc_matrix,
    weight_at,
)

U = WeightSequence.unilateral()
HALF = WeightSequence.periodic([2.0, 0.5])
seeds = st.integers(0, 2**32 - 1)


def entrywise_power_oracle(w, n, m):
    """(W^n)_{k+n,k} = w_k ... w_{k+n-1}, all other entries zero."""
    out = np.zeros((m, m))
    for k in range(m - n):
        out[k + n, k] = np.prod([weight_at(w, j) for j in range(k, k + n)])
    return out


class TestWeights:
    def test_weight_at(self):
        assert weight_at(U, 10) == 1
        assert weight_at(HALF, 3) == 0.5
        assert weight_at(WeightSequence.constant(1.0, prefix=(3.0,)), 0) == 3

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            WeightSequence.periodic([1.0, 0.0])

    def test_json_round_trip(self):
        w = WeightSequence.periodic([2.0, 3.0], prefix=(0.5,))
        assert WeightSequence.from_json(w.to_json()) == w

    def test_trunc(self):
        assert np.array_equal(trunc_matrix(U, 2), [[0, 0], [1, 0]])
        sq = np.linalg.matrix_power(trunc_matrix(HALF, 3), 2)
        assert np.count_nonzero(sq) == 1 and sq[2, 0] == 1
        assert np.linalg.matrix_power(trunc_matrix(WeightSequence.constant(2.0), 3), 2)[2, 0] == 4

    @settings(max_examples=40, deadline=None)
    @given(seeds, st.integers(1, 5), st.integers(2, 12))
    def test_power_of_truncation(self, seed, n, m):
        w, _ = random_periodic_shift(make_rng(seed))
        got = np.linalg.matrix_power(trunc_matrix(w, m), n).real
        assert np.allclose(got, entrywise_power_oracle(w, n, m), rtol=1e-14, atol=0)


class TestPorws:
    def test_examples(self):
        assert check_porws(HALF, 2, 10) == (True, True, True)
        assert check_porws(WeightSequence.constant(2.0), 2, 10) == (False, False, True)
        assert check_porws(WeightSequence.periodic([2.0, 3.0, 1 / 6]), 3, 10) == (True, True, True)
        with pytest.raises(HorizonTooSmall):
            check_porws(HALF, 2, 1)

    @settings(max_examples=100, deadline=None)
    @given(seeds)
    def test_three_way_agreement(self, seed):
        w, n = random_periodic_shift(make_rng(seed))
        res = check_porws(w, n, n + w.period_length)
        cond_i, _ = porws_matrix_condition(w, n, n + w.period_length + 2)
        assert res.cond_ii == res.cond_iii == cond_i

    def test_prefix_breaks_periodicity(self):
        w = WeightSequence.periodic([2.0, 0.5], prefix=(3.0,))
        res = check_porws(w, 2, 10)
        assert res.agree and not res.cond_ii


class TestPiurwa:
    def test_from_draws(self):
        assert piurwa_from_draws([2.0]).tail == (2.0, 0.5)
        assert piurwa_from_draws([2.0, 3.0]).tail == pytest.approx((2.0, 3.0, 1 / 6))

    @settings(max_examples=40, deadline=None)
    @given(seeds, st.integers(2, 6))
    def test_contract(self, seed, n):
        w = construct_piurwa(n, seed)
        assert not shift_is_quasinormal(w)
        assert check_porws(w, n, 3 * n) == (True, True, True)
        assert porws_matrix_condition(w, n)[0]
        assert all(0.5 <= x <= 2 for x in w.tail[:-1])

    def test_deterministic(self):
        assert construct_piurwa(3, 7) == construct_piurwa(3, 7)


class TestMoments:
    def test_quasinormal(self):
        assert shift_is_quasinormal(WeightSequence.constant(3.0))
        assert not shift_is_quasinormal(HALF)
        assert shift_is_quasinormal(WeightSequence.constant(1.0, prefix=(1.0,)))

    def test_moments(self):
        assert shift_moments(U, 4).tolist() == [1, 1, 1, 1, 1]
        assert shift_moments(WeightSequence.constant(2.0), 3).tolist() == [1, 4, 16, 64]
        assert shift_moments(HALF, 3).tolist() == [1, 4, 1, 4]

    def test_subnormal(self):
        assert shift_is_subnormal(U)
        assert not shift_is_subnormal(HALF, 4)
        assert shift_is_subnormal(WeightSequence.constant(1.7))

    @settings(max_examples=40, deadline=None)
    @given(seeds)
    def test_multiplicative(self, seed):
        w, _ = random_periodic_shift(make_rng(seed))
        g = shift_moments(w, 10)
        assert np.array_equal(g[1:], g[:-1] * w.head(10) ** 2)


class TestNrits:
    def test_scalar_example(self):
        q = BrownForm(U, np.array([[2.0]]))
        res = construct_nrits_root(q, 2, 4, shift=HALF)
        assert np.allclose(res.T, 4 * np.linalg.matrix_power(trunc_matrix(U, 4), 2))
        assert np.allclose(res.R, 2 * trunc_matrix(HALF, 4))
        assert np.array_equal(res.R @ res.R, res.T)
        assert not res.R_is_quasinormal

    def test_with_normal_part(self):
        q = BrownForm(U, np.eye(1), np.eye(1))
        res = construct_nrits_root(q, 2, 5, 0)
        expected_t = np.zeros((6, 6))
        expected_t[0, 0] = 1
        expected_t[1:, 1:] = np.linalg.matrix_power(trunc_matrix(U, 5), 2).real
        assert np.allclose(res.T, expected_t)
        assert norm(res.R @ res.R - res.T) <= 1e-12

    def test_guards(self):
        with pytest.raises(ShiftFactorNotUnit):
            construct_nrits_root(BrownForm(WeightSequence.constant(2.0), np.eye(2)), 2, 4)
        with pytest.raises(TruncationTooSmall):
            construct_nrits_root(BrownForm(U, np.eye(2)), 3, 3)
        with pytest.raises(ValueError):
            BrownForm(U, np.diag([1.0, 0.0]))

    @settings(max_examples=40, deadline=None)
    @given(seeds, st.integers(2, 4), st.integers(0, 7))
    def test_contract(self, seed, n, extra):
        rng = make_rng(seed)
        q = random_brown_form(rng)
        res = construct_nrits_root(q, n, n + 1 + extra, rng)
        assert res.root_residual <= 1e-12
        assert not res.R_is_quasinormal


class TestBluk:
    def test_examples(self):
        s = construct_bluk_root(None, np.eye(1), np.eye(1))
        assert np.array_equal(s, [[1, 1], [0, -1]]) and np.allclose(s @ s, np.eye(2))
        s = construct_bluk_root(None, np.zeros((1, 1)), np.eye(1))
        assert np.array_equal(s, [[0, 1], [0, 0]]) and np.allclose(s @ s, 0)
        s = construct_bluk_root(None, np.diag([1.0, 2.0]), np.eye(2))
        assert np.allclose(s @ s, np.diag([1, 4, 1, 4]))

    def test_guards(self):
        with pytest.raises(NotNormal):
            construct_bluk_root(None, np.array([[0.0, 1.0], [0.0, 0.0]]), np.eye(2))
        with pytest.raises(NotCommuting):
            construct_bluk_root(None, np.diag([1.0, 2.0]), np.array([[0.0, 1.0], [0.0, 0.0]]))

    @settings(max_examples=40, deadline=None)
    @given(seeds, st.integers(1, 4), st.integers(0, 2))
    def test_lower_bound(self, seed, kdim, adim):
        rng = make_rng(seed)
        b = random_normal(rng, kdim)
        c = 0.7 * b @ b + 0.2 * np.eye(kdim)
        a = random_normal(rng, adim) if adim else None
        s = construct_bluk_root(a, b, c)
        target = bluk_target(a, b)
        assert norm(s @ s - target) <= 1e-10 * max(norm(target), 1)
        assert norm(s @ s.conj().T - s.conj().T @ s) >= norm(c @ c.conj().T) - 1e-9
