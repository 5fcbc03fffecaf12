"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line (printed in the pytest terminal summary,
or directly when this file is run as a script) and enforces its runtime
budget.
"""

import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from opclass_lab import formats
from opclass_lab.cli import RunConfig, run
from opclass_lab.harness import (
    campaign,
    gen_bluk,
    gen_pupra,
    eval_pupra,
    make_rng,
    polar_identity_triple,
    random_brown_form,
    random_dense,
    random_normal,
)
from opclass_lab.intertwine import IntertwineInstance, check_condition_i, check_condition_ii
from opclass_lab.measures import is_stieltjes, recover_atomic_measure
from opclass_lab.numkernel import DEFAULT_TOL, gram, norm
from opclass_lab.opclass import embry_battery, quasinormal_residual, yamazaki_chain
from opclass_lab.shifts import (
    bluk_target,
    construct_bluk_root,
    construct_nrits_root,
    construct_piurwa,
    porws_matrix_condition,
    shift_is_quasinormal,
)

RESULTS: list = []
FULL = frozenset(range(2, 6))


@contextmanager
def criterion(number, title, budget):
    start = time.perf_counter()
    status = "FAIL"
    try:
        yield
        elapsed = time.perf_counter() - start
        assert elapsed < budget, f"runtime {elapsed:.1f}s exceeds {budget}s"
        status = "PASS"
    finally:
        elapsed = time.perf_counter() - start
        line = f"[{status}] criterion {number:2d}: {title} ({elapsed:.1f}s, budget {budget}s)"
        RESULTS.append(line)
        print(line)


def _dim(rng, lo=2, hi=8):
    return int(rng.integers(lo, hi + 1))


def test_c01_embry_equivalence():
    with criterion(1, "Embry battery on normal and non-normal matrices", 30):
        for i in range(500):
            rng = make_rng(101, i)
            rep = embry_battery(random_normal(rng, _dim(rng)), 5)
            assert rep.identity_set == FULL and rep.root_set == FULL
            assert rep.spectral_ok and rep.tail_ok
        checked = 0
        for i in range(500):
            rng = make_rng(102, i)
            t = random_dense(rng, _dim(rng))
            if quasinormal_residual(t) > 1e-6:
                checked += 1
                assert embry_battery(t, 5).identity_set != FULL
        assert checked > 450


def test_c02_yamazaki_chain():
    with criterion(2, "Yamazaki chains constant on normal family, no class-A monotonicity break", 120):
        for i in range(500):
            rng = make_rng(201, i)
            y = yamazaki_chain(random_normal(rng, _dim(rng)), 5)
            assert y.ascending_ok and y.descending_ok
            assert y.ascending_spread <= 1e-9 and y.descending_spread <= 1e-9
        res = campaign("yama", 10_000, seed=202, dim_min=2, dim_max=6)
        assert res.trials == 10_000 and res.violations == 0


def test_c03_intertwining():
    with criterion(3, "polar-identity family and 1e4-trial (i)<=>(ii) campaign", 180):
        for i in range(500):
            rng = make_rng(301, i)
            base = polar_identity_triple(rng, _dim(rng), int(rng.integers(0, 3)))
            for alpha, beta in ((0.5, 1.0), (2.0, math.pi)):
                inst = IntertwineInstance(base.A, base.B, base.C, alpha, beta)
                ci, cii = check_condition_i(inst), check_condition_ii(inst)
                assert ci.leq_ok and ci.moment_ok and cii.equality_ok and cii.intertwine_ok
                assert max(ci.residuals.values()) <= 1e-8 and max(cii.residuals.values()) <= 1e-8
        res = campaign("bblem", 10_000, seed=302, dim_min=2, dim_max=6)
        assert res.violations == 0


def test_c04_quasinormality_criterion():
    with criterion(4, "condition (i) with C = B versus quasinormality", 60):
        for i in range(500):
            rng = make_rng(401, i)
            a = random_normal(rng, _dim(rng))
            ci = check_condition_i(IntertwineInstance(a, gram(a), gram(a), 1.0, 2.0))
            assert ci.leq_ok and ci.moment_ok and max(ci.residuals.values()) <= 1e-8
        checked = 0
        for i in range(500):
            rng = make_rng(402, i)
            a = random_dense(rng, _dim(rng))
            if quasinormal_residual(a) <= 1e-6:
                continue
            checked += 1
            ci = check_condition_i(IntertwineInstance(a, gram(a), gram(a), 1.0, 2.0))
            assert not (ci.leq_ok and ci.moment_ok)
        assert checked > 450


def test_c05_kadison():
    with criterion(5, "Kadison inequality and equality characterisation, 1e4 pairs", 60):
        res = campaign("kadison", 10_000, seed=501, dim_min=2, dim_max=6)
        assert all(r["verdicts"]["inequality"] for r in res.records)
        assert res.violations == 0


def test_c06_pov_determination():
    with criterion(6, "two-moment determination of POV measures", 30):
        outcomes = {"none": [], "scale": [], "jitter": []}
        i = 0
        while len(outcomes["none"]) < 200:
            rng = make_rng(601, i)
            inst = gen_pupra(rng, int(rng.integers(2, 7)), {})
            verdicts, _, _ = eval_pupra(inst, DEFAULT_TOL)
            outcomes[inst["mode"]].append((verdicts["hypothesis"], verdicts["conclusion"]))
            i += 1
        assert set(outcomes["none"]) == {(True, True)}
        assert outcomes["scale"] and outcomes["jitter"]
        assert all(not h for mode in ("scale", "jitter") for h, _ in outcomes[mode])
        assert not any(o == (True, False) for s in outcomes.values() for o in s)


def test_c07_periodic_shifts():
    with criterion(7, "periodic shift three-way agreement and piurwa construction", 10):
        res = campaign("porws", 200, seed=701)
        assert res.violations == 0
        for r in res.records:
            if r["verdicts"]["i"]:
                assert r["residuals"]["matrix_max_abs_diff"] <= 1e-12
        for i in range(200):
            n = 2 + i % 5
            w = construct_piurwa(n, make_rng(702, i))
            assert not shift_is_quasinormal(w)
            assert porws_matrix_condition(w, n)[1] <= 1e-12


def test_c08_nrits_construction():
    with criterion(8, "non-quasinormal roots of truncated quasinormal powers", 30):
        for i in range(100):
            rng = make_rng(801, i)
            q = random_brown_form(rng)
            n = int(rng.integers(2, 5))
            m = int(rng.integers(n + 1, 13))
            res = construct_nrits_root(q, n, m, rng)
            assert norm(np.linalg.matrix_power(res.R, n) - res.T) <= 1e-12 * norm(res.T)
            assert not res.R_is_quasinormal


def test_c09_bluk_square_root():
    with criterion(9, "block square root with commuting (B, C)", 10):
        for i in range(100):
            rng = make_rng(901, i)
            inst = gen_bluk(rng, int(rng.integers(1, 5)), {})
            b, c = inst["B"], inst["C"]
            assert norm(c) > 0 and norm(b @ c - c @ b) <= 1e-12
            s = construct_bluk_root(inst["A"], b, c)
            target = bluk_target(inst["A"], b)
            assert norm(s @ s - target) <= 1e-10 * norm(target)
            assert norm(s @ s.conj().T - s.conj().T @ s) >= norm(c @ c.conj().T) - 1e-9


def test_c10_moment_machinery():
    with criterion(10, "Stieltjes certificate and atom recovery", 1):
        assert is_stieltjes([1, 2.5, 8.5, 32.5])
        atoms = recover_atomic_measure([1, 2.5, 8.5, 32.5], 2)
        assert np.allclose(atoms, [(1, 0.5), (4, 0.5)], atol=1e-7)
        assert not is_stieltjes([1, 4, 1, 4])
        assert np.linalg.det(np.array([[1.0, 4.0], [4.0, 1.0]])) == pytest.approx(-15)


def test_c11_flatness_falsification():
    with criterion(11, "flatness gap 2 and single-equation campaigns, 1e4 trials each", 180):
        for theorem in ("rowm", "kupia"):
            res = campaign(theorem, 10_000, seed=1101, dim_min=2, dim_max=6, opts={"family": "nonnormal"})
            assert res.trials == 10_000 and res.violations == 0


def test_c12_determinism():
    with criterion(12, "byte-identical reports for repeated seeded campaigns", 120):
        for theorem in ("bblem", "sewer", "achtwdw", "kadison", "yama", "rowm", "kupia", "porws", "nrits", "pupra"):
            config = RunConfig("verify", theorem, trials=40, seed=1201)
            first, _ = run(config)
            second, _ = run(config)
            first.pop("wall_time"), second.pop("wall_time")
            assert formats.dumps(first) == formats.dumps(second)
            assert first["stability_hash"] == second["stability_hash"]


if __name__ == "__main__":
    import sys

    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_c")]
    failed = 0
    for fn in tests:
        try:
            fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
