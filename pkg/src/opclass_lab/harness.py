"""Seeded instance generators and falsification campaigns.

Randomness: every trial owns an independent stream,
``Generator(Philox(SeedSequence(seed, spawn_key=(trial,))))``. Philox is a
counter-based generator and ``SeedSequence`` spawn keys make it
splittable, so trial ``i`` draws the same numbers no matter which worker
runs it or in what order.

A campaign is a pair of functions per theorem: ``generate(rng, dim, opts)``
builds an instance (a dict of matrices, numbers, weight sequences and
measures) and ``evaluate(instance, tol)`` returns verdicts, residuals and
whether the instance violates the theorem. Violating instances are dumped
in the JSON wire formats and can be re-evaluated with :func:`replay`.
"""

from __future__ import annotations

import hashlib
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import formats
from .errors import UnknownTheorem
from .intertwine import IntertwineInstance, kadison_check, verify_achtwdw, verify_bblem, verify_sewer
from .measures import DiscretePovMeasure, spectral_measure, verify_two_moment_determination
from .numkernel import DEFAULT_TOL, ToleranceProfile, gram, cogram, norm, psd_power
from .opclass import band, class_a_residual, embry_battery, quasinormal_residual, yamazaki_chain
from .roots import verify_kupia, verify_rowm
from .shifts import (
    BrownForm,
    WeightSequence,
    bluk_target,
    check_porws,
    construct_bluk_root,
    construct_nrits_root,
    porws_matrix_condition,
)

THREADS_ENV = "OPCLASS_LAB_THREADS"
CONTRACTION_SLACK = 1e-6
EXPONENT_PAIRS = ((1.0, 2.0), (0.5, 1.5), (0.5, math.pi), (1.0, math.e))


def make_rng(seed: int = 0, *keys: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))))


# generators -------------------------------------------------------------


def random_dense(rng, rows: int, cols: int | None = None, scale: float = 1.0) -> np.ndarray:
    cols = rows if cols is None else cols
    z = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    return scale * z / np.sqrt(2 * max(rows, cols))


def random_unitary(rng, dim: int) -> np.ndarray:
    q, r = np.linalg.qr(random_dense(rng, dim))
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_isometry(rng, rows: int, cols: int) -> np.ndarray:
    q, r = np.linalg.qr(random_dense(rng, rows, cols))
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_normal(rng, dim: int, rmin: float = 0.5, rmax: float = 1.0) -> np.ndarray:
    """U diag(mu) U* with |mu| uniform on [rmin, rmax] and uniform phases.

    The modulus range keeps the Embry chain well conditioned: k-th roots of
    eigenvalues near zero amplify roundoff by a factor eps^(1/k).
    """
    u = random_unitary(rng, dim)
    mu = rng.uniform(rmin, rmax, dim) * np.exp(1j * rng.uniform(-np.pi, np.pi, dim))
    return (u * mu) @ u.conj().T


def random_psd(rng, dim: int, lo: float = 0.1, hi: float = 1.0, rank: int | None = None) -> np.ndarray:
    u = random_unitary(rng, dim)
    w = rng.uniform(lo, hi, dim)
    if rank is not None:
        w[rank:] = 0.0
    return ((u * w) @ u.conj().T + ((u * w) @ u.conj().T).conj().T) / 2


def random_contraction(rng, rows: int, cols: int) -> np.ndarray:
    v = random_dense(rng, rows, cols)
    return v / (norm(v) * (1.0 + CONTRACTION_SLACK))


def near_quasinormal(rng, dim: int) -> np.ndarray:
    """Normal matrix plus eps * random, eps log-uniform on [1e-4, 1e-1]."""
    eps = 10.0 ** rng.uniform(-4, -1)
    return random_normal(rng, dim) + eps * random_dense(rng, dim)


def polar_identity_triple(rng, dim: int, pad: int = 0, alpha: float = 1.0, beta: float = 2.0) -> IntertwineInstance:
    a = random_dense(rng, dim + pad, dim)
    return IntertwineInstance(a, gram(a), cogram(a), alpha, beta)


def random_periodic_shift(rng, max_period: int = 6, lo: float = 0.25, hi: float = 4.0, closing: bool | None = None,
                          n: int | None = None):
    """(weights, n): a periodic shift and an exponent.

    With ``closing`` the period divides n and has product 1, so W^n = U^n.
    """
    if n is None:
        n = int(rng.integers(1, 6))
    if closing is None:
        closing = bool(rng.random() < 0.5)
    if closing:
        divisors = [p for p in range(1, min(n, max_period) + 1) if n % p == 0]
        p = divisors[int(rng.integers(len(divisors)))]
        draws = np.exp(rng.uniform(np.log(lo), np.log(hi), p - 1))
        period = list(draws) + [1.0 / float(np.prod(draws))] if p > 1 else [1.0]
    else:
        p = int(rng.integers(1, max_period + 1))
        period = list(np.exp(rng.uniform(np.log(lo), np.log(hi), p)))
    return WeightSequence.periodic(period), n


def random_brown_form(rng, max_s: int = 3, max_n: int = 2) -> BrownForm:
    s_dim = int(rng.integers(1, max_s + 1))
    n_dim = int(rng.integers(0, max_n + 1))
    s = random_psd(rng, s_dim, 0.5, 2.0)
    nm = random_normal(rng, n_dim) if n_dim else None
    return BrownForm(WeightSequence.unilateral(), s, nm)


@dataclass(frozen=True)
class GenSpec:
    family: str
    dim: int = 3
    scale: tuple = (1.0, 1.0)
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if not 1 <= self.dim <= 64:
            raise ValueError("dim must lie in [1, 64]")
        if not (0 < self.scale[0] <= self.scale[1]):
            raise ValueError("scale range must be positive and ordered")


def _scale(rng, spec: GenSpec) -> float:
    lo, hi = spec.scale
    return float(np.exp(rng.uniform(np.log(lo), np.log(hi)))) if hi > lo else lo


FAMILIES: dict[str, Callable] = {
    "random_dense": lambda rng, spec: _scale(rng, spec) * random_dense(rng, spec.dim),
    "normal": lambda rng, spec: _scale(rng, spec) * random_normal(rng, spec.dim),
    "psd": lambda rng, spec: _scale(rng, spec) * random_psd(rng, spec.dim),
    "unitary": lambda rng, spec: random_unitary(rng, spec.dim),
    "polar_identity_triple": lambda rng, spec: polar_identity_triple(rng, spec.dim, int(rng.integers(0, 3))),
    "brown_form": lambda rng, spec: random_brown_form(rng),
    "periodic_shift": lambda rng, spec: random_periodic_shift(rng, closing=True, n=max(spec.dim, 1))[0],
    "near_quasinormal": lambda rng, spec: _scale(rng, spec) * near_quasinormal(rng, spec.dim),
}


def generate(spec: GenSpec, rng: np.random.Generator | None = None):
    """One instance of ``spec.family``; deterministic in ``spec.seed``."""
    rng = make_rng(spec.seed) if rng is None else rng
    return FAMILIES[spec.family](rng, spec)


# theorem campaigns ------------------------------------------------------


def _pick_exponents(rng, opts):
    if opts.get("alpha") is not None and opts.get("beta") is not None:
        return float(opts["alpha"]), float(opts["beta"])
    return EXPONENT_PAIRS[int(rng.integers(len(EXPONENT_PAIRS)))]


def _rank_one_psd(rng, dim):
    x = random_dense(rng, dim, 1)
    return x @ x.conj().T / max(norm(x) ** 2, 1e-300)


BBLEM_MODES = ("identity", "intertwined", "rank_deficient", "majorized", "perturbed_c", "scaled_b", "free")


def gen_bblem(rng, dim, opts):
    alpha, beta = _pick_exponents(rng, opts)
    dk = dim + int(rng.integers(0, 3))
    mode = BBLEM_MODES[int(rng.integers(len(BBLEM_MODES)))]
    a = random_dense(rng, dk, dim)
    if mode == "rank_deficient":
        r = int(rng.integers(0, dim))
        a = a @ random_psd(rng, dim, 1.0, 1.0, rank=r)
    b = gram(a)
    c = cogram(a)
    if mode == "intertwined":
        # Extra PSD mass on null(A*) keeps AB = CA.
        _, s, vh = np.linalg.svd(a.conj().T)
        null = vh[int(np.sum(s > 1e-12)):].conj().T
        if null.shape[1]:
            z = random_psd(rng, null.shape[1])
            c = c + null @ z @ null.conj().T
    elif mode == "majorized":
        b = b + random_psd(rng, dim, 0.0, 0.5, rank=int(rng.integers(1, dim + 1)))
    elif mode == "perturbed_c":
        c = c + 0.1 * _rank_one_psd(rng, dk)
    elif mode == "scaled_b":
        b = b * float(rng.uniform(1.1, 2.0))
    elif mode == "free":
        b = random_psd(rng, dim)
        c = random_psd(rng, dk)
        a = a * float(np.sqrt(np.linalg.eigvalsh(b)[0])) / max(norm(a), 1e-300)
    return {"mode": mode, "A": a, "B": b, "C": c, "alpha": alpha, "beta": beta}


def eval_bblem(inst, tol):
    res = verify_bblem(IntertwineInstance(inst["A"], inst["B"], inst["C"], inst["alpha"], inst["beta"]), tol)
    return {"i": res.i_holds, "ii": res.ii_holds}, res.residuals, not res.equivalence_respected


def gen_sewer(rng, dim, opts):
    alpha, beta = _pick_exponents(rng, opts)
    count = int(rng.integers(1, 4))
    b = random_psd(rng, dim)
    c_weights = rng.dirichlet(np.ones(count))
    mode = ("split", "perturbed", "free")[int(rng.integers(3))]
    pairs = []
    for i in range(count):
        dk = dim + int(rng.integers(0, 3))
        x = random_isometry(rng, dk, dim)
        a_i = x @ psd_power(c_weights[i] * b, 0.5)
        c_i = x @ b @ x.conj().T
        if dk > dim:
            comp = np.eye(dk) - x @ x.conj().T
            c_i = c_i + comp @ random_psd(rng, dk) @ comp
        pairs.append([a_i, (c_i + c_i.conj().T) / 2])
    if mode == "perturbed":
        j = int(rng.integers(count))
        pairs[j][1] = 2.0 * pairs[j][1]
    elif mode == "free":
        pairs = [[random_dense(rng, dim, dim) / np.sqrt(count), random_psd(rng, dim)] for _ in range(count)]
        b = gram(np.vstack([p[0] for p in pairs])) + random_psd(rng, dim, 0.0, 0.2)
    return {"mode": mode, "A": [p[0] for p in pairs], "C": [p[1] for p in pairs], "B": b, "alpha": alpha, "beta": beta}


def eval_sewer(inst, tol):
    res = verify_sewer(list(zip(inst["A"], inst["C"])), inst["B"], inst["alpha"], inst["beta"], tol)
    residuals = dict(res.residuals)
    residuals.update({f"index_intertwine[{i}]": r for i, r in enumerate(res.index_intertwine)})
    return {"i": res.i_holds, "ii": res.ii_holds}, residuals, not res.equivalence_respected


def gen_achtwdw(rng, dim, opts):
    alpha, beta = _pick_exponents(rng, opts)
    mode = ("normal", "dense", "near", "majorized")[int(rng.integers(4))]
    if mode == "normal":
        a = random_normal(rng, dim)
    elif mode == "near":
        a = near_quasinormal(rng, dim)
    else:
        a = random_dense(rng, dim)
    b = gram(a)
    if mode == "majorized":
        b = b + random_psd(rng, dim, 0.0, 0.5)
    return {"mode": mode, "A": a, "B": b, "alpha": alpha, "beta": beta}


def eval_achtwdw(inst, tol):
    res = verify_achtwdw(inst["A"], inst["B"], inst["alpha"], inst["beta"], tol)
    return {"i": res.i_holds, "ii": res.ii_holds}, res.residuals, not res.equivalence_respected


def gen_kadison(rng, dim, opts):
    mode = ("generic", "kills_range", "isometric_invariant", "isometric_generic")[int(rng.integers(4))]
    dh = int(rng.integers(1, dim + 1))
    dk = dim
    t = random_dense(rng, dk)
    if mode in ("generic", "kills_range"):
        v = random_contraction(rng, dk, dh)
        if mode == "kills_range":
            q, _ = np.linalg.qr(v)
            t = t @ (np.eye(dk) - q @ q.conj().T)
    else:
        full = random_unitary(rng, dk)
        v = full[:, :dh]
        if mode == "isometric_invariant":
            blocks = random_dense(rng, dk)
            blocks[dh:, :dh] = 0.0
            t = full @ blocks @ full.conj().T
    return {"mode": mode, "V": v, "T": t}


def eval_kadison(inst, tol):
    res = kadison_check(inst["V"], inst["T"], tol)
    clear_break = band(res.residuals["inequality"], tol.psd_tol) == "fails"
    verdicts = {"inequality": res.inequality_ok, "equality": res.equality}
    return verdicts, res.residuals, clear_break or not res.equality_iff_ok


def _mixed_matrix(rng, dim, family):
    if family == "mixed":
        family = ("normal", "random_dense", "near_quasinormal")[int(rng.integers(3))]
    elif family == "nonnormal":
        family = ("random_dense", "near_quasinormal")[int(rng.integers(2))]
    if family == "normal":
        return random_normal(rng, dim), family
    if family == "random_dense":
        return random_dense(rng, dim), family
    if family == "near_quasinormal":
        return near_quasinormal(rng, dim), family
    raise ValueError(f"unknown matrix family {family!r}")


def gen_yama(rng, dim, opts):
    t, fam = _mixed_matrix(rng, dim, opts.get("family", "mixed"))
    return {"family": fam, "T": t, "kmax": int(opts.get("kmax") or 5)}


def eval_yama(inst, tol):
    y = yamazaki_chain(inst["T"], inst["kmax"], tol)
    ca = class_a_residual(inst["T"], tol)
    residuals = {
        "class_a": ca,
        "ascending_max_deficit": max(y.ascending_deficits),
        "descending_max_deficit": max(y.descending_deficits),
        "ascending_spread": y.ascending_spread,
        "descending_spread": y.descending_spread,
    }
    violation = band(ca, tol.psd_tol) == "holds" and max(y.ascending_deficits) > 2 * tol.psd_tol
    return {"ascending": y.ascending_ok, "descending": y.descending_ok, "class_a": ca <= tol.psd_tol}, residuals, violation


def gen_rowm(rng, dim, opts):
    t, fam = _mixed_matrix(rng, dim, opts.get("family", "mixed"))
    n = int(opts.get("n") or rng.integers(1, 4))
    k = n + 2 + int(rng.integers(0, 2))
    return {"family": fam, "T": t, "n": n, "k": k}


def eval_rowm(inst, tol):
    rep = verify_rowm(inst["T"], inst["n"], inst["k"], tol)
    residuals = {k: v for k, v in rep.residuals.items() if k != "tolerances"}
    verdicts = {"chain_equal": rep.chain_equal, "class_a": rep.class_a, "quasinormal": rep.quasinormal_verdict}
    return verdicts, residuals, rep.violation


def gen_kupia(rng, dim, opts):
    t, fam = _mixed_matrix(rng, dim, opts.get("family", "mixed"))
    n = int(opts.get("n") or rng.integers(2, 4))
    kappa = int(opts.get("kappa") or rng.integers(2, 4))
    return {"family": fam, "T": t, "n": n, "kappa": kappa}


def eval_kupia(inst, tol):
    rep = verify_kupia(inst["T"], inst["n"], inst["kappa"], tol)
    residuals = {k: v for k, v in rep.residuals.items() if k != "tolerances"}
    verdicts = {"single_eq": rep.single_eq_ok, "class_a": rep.class_a, "quasinormal": rep.quasinormal_verdict}
    return verdicts, residuals, rep.violation


def gen_porws(rng, dim, opts):
    w, n = random_periodic_shift(rng, n=int(opts["n"]) if opts.get("n") else None)
    return {"W": w, "n": n}


def eval_porws(inst, tol):
    w, n = inst["W"], inst["n"]
    res = check_porws(w, n, n + len(w.prefix) + w.period_length)
    m = n + len(w.prefix) + w.period_length + 2
    cond_i, diff = porws_matrix_condition(w, n, m)
    agree = res.cond_ii == res.cond_iii == cond_i
    return {"i": cond_i, "ii": res.cond_ii, "iii": res.cond_iii}, {"matrix_max_abs_diff": diff}, not agree


def gen_nrits(rng, dim, opts):
    q = random_brown_form(rng)
    n = int(opts.get("n") or rng.integers(2, 5))
    m = int(opts.get("truncation") or rng.integers(n + 1, 13))
    return {"S": q.positive_factor, "N": q.normal_part, "n": n, "m": m, "shift_seed": int(rng.integers(2**31))}


def eval_nrits(inst, tol):
    q = BrownForm(WeightSequence.unilateral(), inst["S"], inst["N"])
    res = construct_nrits_root(q, inst["n"], inst["m"], make_rng(inst["shift_seed"]), tol)
    violation = res.root_residual > 1e-12 or res.R_is_quasinormal
    return ({"R_is_quasinormal": res.R_is_quasinormal},
            {"root_residual": res.root_residual, "quasinormal": res.quasinormal_residual}, violation)


PUPRA_MODES = ("none", "scale", "jitter")


def gen_pupra(rng, dim, opts):
    alpha, beta = _pick_exponents(rng, opts)
    t = random_psd(rng, dim, 0.2, 2.0)
    f = spectral_measure(t)
    mode = PUPRA_MODES[int(rng.integers(len(PUPRA_MODES)))]
    atoms = f.atoms()
    j = int(rng.integers(len(atoms)))
    if mode == "scale":
        x, w = atoms[j]
        atoms[j] = (x, float(rng.uniform(0.5, 0.999)) * w)
    elif mode == "jitter":
        x, w = atoms[j]
        delta = float(10.0 ** rng.uniform(-3, -1)) * (1 if rng.random() < 0.5 else -1)
        atoms[j] = (max(x + delta, 0.0), w)
    perturbed = DiscretePovMeasure.from_atoms(atoms, dim=f.dim)
    return {"mode": mode, "T": t, "F": perturbed, "alpha": alpha, "beta": beta}


def eval_pupra(inst, tol):
    res = verify_two_moment_determination(inst["T"], inst["F"], inst["alpha"], inst["beta"], tol)
    violation = res.hypothesis_ok and not res.conclusion_ok
    if inst["mode"] == "none":
        violation = violation or not (res.hypothesis_ok and res.conclusion_ok)
    else:
        violation = violation or res.hypothesis_ok
    residuals = {f"moment({p:g})": r for p, r in zip((inst["alpha"], inst["beta"]), res.moment_residuals)}
    return {"hypothesis": res.hypothesis_ok, "conclusion": res.conclusion_ok}, residuals, violation


def gen_embry(rng, dim, opts):
    t, fam = _mixed_matrix(rng, dim, opts.get("family", "mixed"))
    return {"family": fam, "T": t, "kmax": int(opts.get("kmax") or 5)}


def eval_embry(inst, tol):
    t, kmax = inst["T"], inst["kmax"]
    rep = embry_battery(t, kmax, tol)
    qn = quasinormal_residual(t)
    full = frozenset(range(2, kmax + 1))
    if band(qn, tol.eq_rtol) == "holds":
        violation = not (rep.identity_set == full and rep.root_set == full and rep.spectral_ok and rep.tail_ok)
    elif qn > 1e-6:
        violation = rep.identity_set == full
    else:
        violation = False
    residuals = {"quasinormal": qn, "identity_max": max(rep.identity_residuals.values()),
                 "root_max": max(rep.root_residuals.values())}
    verdicts = {"identity_set": sorted(rep.identity_set), "root_set": sorted(rep.root_set),
                "spectral_ok": rep.spectral_ok, "tail_ok": rep.tail_ok}
    return verdicts, residuals, violation


def gen_bluk(rng, dim, opts):
    kdim = int(rng.integers(1, max(dim, 1) + 1))
    adim = int(rng.integers(0, 3))
    b = random_normal(rng, kdim, 0.0, 1.0)
    # A polynomial in B commutes with B.
    coeffs = rng.standard_normal(kdim) + 1j * rng.standard_normal(kdim)
    c = sum(coeffs[j] * np.linalg.matrix_power(b, j) for j in range(kdim))
    if norm(c) < 1e-3:
        c = np.eye(kdim)
    a = random_normal(rng, adim) if adim else None
    return {"A": a, "B": b, "C": c}


def eval_bluk(inst, tol):
    s = construct_bluk_root(inst["A"], inst["B"], inst["C"], tol)
    target = bluk_target(inst["A"], inst["B"])
    root_res = norm(s @ s - target) / max(norm(target), 1.0)
    nonnormal = norm(s @ s.conj().T - s.conj().T @ s)
    cc = norm(inst["C"] @ inst["C"].conj().T)
    violation = root_res > 1e-10 or nonnormal < cc - 1e-9
    return {"square_root": root_res <= 1e-10}, {"root": root_res, "commutator": nonnormal, "cc_star": cc}, violation


THEOREMS = {
    "bblem": (gen_bblem, eval_bblem),
    "sewer": (gen_sewer, eval_sewer),
    "achtwdw": (gen_achtwdw, eval_achtwdw),
    "kadison": (gen_kadison, eval_kadison),
    "yama": (gen_yama, eval_yama),
    "rowm": (gen_rowm, eval_rowm),
    "kupia": (gen_kupia, eval_kupia),
    "porws": (gen_porws, eval_porws),
    "nrits": (gen_nrits, eval_nrits),
    "pupra": (gen_pupra, eval_pupra),
    "embry": (gen_embry, eval_embry),
    "bluk": (gen_bluk, eval_bluk),
}


# serialisation ----------------------------------------------------------


def _encode(value):
    if isinstance(value, np.ndarray):
        return {"matrix": formats.matrix_to_json(value)}
    if isinstance(value, WeightSequence):
        return {"weights": value.to_json()}
    if isinstance(value, DiscretePovMeasure):
        return {"measure": value.to_json()}
    if isinstance(value, list):
        return {"list": [_encode(v) for v in value]}
    if value is None or isinstance(value, (bool, int, float, str)):
        return {"value": value}
    if isinstance(value, (np.integer, np.floating)):
        return {"value": value.item()}
    raise TypeError(f"cannot serialise {type(value).__name__}")


def _decode(obj):
    (kind, payload), = obj.items()
    if kind == "matrix":
        return formats.matrix_from_json(payload)
    if kind == "weights":
        return WeightSequence.from_json(payload)
    if kind == "measure":
        return DiscretePovMeasure.from_json(payload)
    if kind == "list":
        return [_decode(v) for v in payload]
    return payload


def instance_to_json(inst: dict) -> dict:
    return {k: _encode(v) for k, v in sorted(inst.items())}


def instance_from_json(obj: dict) -> dict:
    return {k: _decode(v) for k, v in obj.items()}


def instance_hash(inst: dict) -> str:
    text = formats.dumps(instance_to_json(inst))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


# campaign driver --------------------------------------------------------


@dataclass
class CampaignResult:
    theorem: str
    records: list = field(default_factory=list)
    witnesses: list = field(default_factory=list)

    @property
    def trials(self) -> int:
        return len(self.records)

    @property
    def violations(self) -> int:
        return sum(1 for r in self.records if r["violation"])

    def max_residuals(self) -> dict:
        out: dict = {}
        for r in self.records:
            for k, v in r["residuals"].items():
                if v is not None:
                    out[k] = max(out.get(k, 0.0), float(v))
        return dict(sorted(out.items()))

    def summary(self) -> dict:
        return {"trials": self.trials, "violations": self.violations, "max_residuals": self.max_residuals()}


def run_trial(theorem: str, trial: int, seed: int, dim_min: int, dim_max: int, tol: ToleranceProfile, opts: dict):
    gen, ev = THEOREMS[theorem]
    rng = make_rng(seed, trial)
    dim = int(rng.integers(dim_min, dim_max + 1))
    inst = gen(rng, dim, opts)
    verdicts, residuals, violation = ev(inst, tol)
    record = {
        "trial": trial,
        "dim": dim,
        "instance_hash": instance_hash(inst),
        "verdicts": verdicts,
        "residuals": {k: float(v) for k, v in sorted(residuals.items())},
        "violation": bool(violation),
    }
    witness = None
    if violation:
        witness = {"theorem": theorem, "trial": trial, "instance": instance_to_json(inst)}
    return record, witness


def _run_chunk(args):
    theorem, trials, seed, dim_min, dim_max, tol, opts = args
    return [run_trial(theorem, i, seed, dim_min, dim_max, tol, opts) for i in trials]


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def campaign(theorem: str, trials: int, seed: int = 0, dim_min: int = 2, dim_max: int = 6,
             tol: ToleranceProfile = DEFAULT_TOL, opts: dict | None = None, workers: int | None = None) -> CampaignResult:
    """Run ``trials`` seeded trials of one theorem and count violations."""
    if theorem not in THEOREMS:
        raise UnknownTheorem(f"unknown theorem {theorem!r}; choose from {', '.join(sorted(THEOREMS))}")
    if trials < 0:
        raise ValueError("trials must be nonnegative")
    if not 1 <= dim_min <= dim_max <= 64:
        raise ValueError("need 1 <= dim_min <= dim_max <= 64")
    opts = dict(opts or {})
    workers = worker_count() if workers is None else workers
    result = CampaignResult(theorem)
    if workers <= 1 or trials < 2 * workers:
        pairs = _run_chunk((theorem, range(trials), seed, dim_min, dim_max, tol, opts))
    else:
        chunks = [range(i, trials, workers) for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_run_chunk, [(theorem, c, seed, dim_min, dim_max, tol, opts) for c in chunks])
            pairs = [p for part in parts for p in part]
        pairs.sort(key=lambda p: p[0]["trial"])
    for record, witness in pairs:
        result.records.append(record)
        if witness is not None:
            result.witnesses.append(witness)
    return result


def replay(witness: dict, tol: ToleranceProfile = DEFAULT_TOL):
    """Re-evaluate a dumped witness in isolation: (verdicts, residuals, violation)."""
    theorem = witness["theorem"]
    if theorem not in THEOREMS:
        raise UnknownTheorem(theorem)
    return THEOREMS[theorem][1](instance_from_json(witness["instance"]), tol)
