"""Two-exponent intertwining checks and their relatives.

Conventions: ``A`` maps H to K and is stored as a ``d_K x d_H`` array,
``B`` acts on H and ``C`` on K. All residuals are relative and are compared
with ``eq_rtol`` (equalities) or ``psd_tol`` (Loewner comparisons).
Equivalence checks use the hysteresis rule of :func:`opclass.band`: a side
counts as holding only when every residual is below tol/10 and as failing
only when some residual exceeds 10*tol.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import AlphaBetaEqual, DimensionMismatch, MajorizationFails, NotContraction
from .numkernel import (
    DEFAULT_TOL,
    ToleranceProfile,
    as_matrix,
    direct_sum,
    gram,
    loewner_leq,
    loewner_margin,
    norm,
    pinv_sqrt,
    psd_power,
    range_split,
)
from .opclass import band, quasinormal_residual


@dataclass(frozen=True, eq=False)
class IntertwineInstance:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    alpha: float = 1.0
    beta: float = 2.0

    def __post_init__(self):
        a = as_matrix(self.A)
        b = as_matrix(self.B, square=True)
        c = as_matrix(self.C, square=True)
        if a.shape != (c.shape[0], b.shape[0]):
            raise DimensionMismatch(f"A is {a.shape}, B is {b.shape}, C is {c.shape}")
        if self.alpha == self.beta:
            raise AlphaBetaEqual("alpha and beta must differ")
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("alpha and beta must be positive")
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", b)
        object.__setattr__(self, "C", c)

    @property
    def exponents(self):
        return (self.alpha, self.beta)


def _leq_deficit(x, y) -> float:
    return max(0.0, -loewner_margin(x, y))


class ConditionI(NamedTuple):
    leq_ok: bool
    moment_ok: bool
    residuals: dict


class ConditionII(NamedTuple):
    equality_ok: bool
    intertwine_ok: bool
    residuals: dict


def check_condition_i(inst: IntertwineInstance, tol: ToleranceProfile = DEFAULT_TOL) -> ConditionI:
    """A*A <= B and A* C^s A = B^(s+1) for s = alpha, beta."""
    a, b, c = inst.A, inst.B, inst.C
    res = {"leq": _leq_deficit(gram(a), b)}
    for s in inst.exponents:
        lhs = a.conj().T @ psd_power(c, s, tol) @ a
        rhs = psd_power(b, s + 1, tol)
        res[f"moment({s:g})"] = norm(lhs - rhs) / (1.0 + norm(b) ** (s + 1))
    moment_ok = all(v <= tol.eq_rtol for k, v in res.items() if k != "leq")
    return ConditionI(res["leq"] <= tol.psd_tol, moment_ok, res)


def check_condition_ii(inst: IntertwineInstance, tol: ToleranceProfile = DEFAULT_TOL) -> ConditionII:
    """A*A = B and AB = CA."""
    a, b, c = inst.A, inst.B, inst.C
    res = {
        "equality": norm(gram(a) - b) / (1.0 + norm(b)),
        "intertwine": norm(a @ b - c @ a) / (1.0 + norm(a) * norm(b)),
    }
    return ConditionII(res["equality"] <= tol.eq_rtol, res["intertwine"] <= tol.eq_rtol, res)


def _side_band(residuals: dict, tol: ToleranceProfile) -> str:
    bands = [band(v, tol.psd_tol if k == "leq" else tol.eq_rtol) for k, v in residuals.items()]
    if "fails" in bands:
        return "fails"
    if all(b == "holds" for b in bands):
        return "holds"
    return "edge"


def equivalence_respected(band_i: str, band_ii: str) -> bool:
    return not ({band_i, band_ii} == {"holds", "fails"})


class EquivalenceResult(NamedTuple):
    i_holds: bool
    ii_holds: bool
    equivalence_respected: bool
    residuals: dict


def verify_bblem(inst: IntertwineInstance, tol: ToleranceProfile = DEFAULT_TOL) -> EquivalenceResult:
    ci = check_condition_i(inst, tol)
    cii = check_condition_ii(inst, tol)
    ok = equivalence_respected(_side_band(ci.residuals, tol), _side_band(cii.residuals, tol))
    residuals = {**{f"i.{k}": v for k, v in ci.residuals.items()}, **{f"ii.{k}": v for k, v in cii.residuals.items()}}
    return EquivalenceResult(ci.leq_ok and ci.moment_ok, cii.equality_ok and cii.intertwine_ok, ok, residuals)


class TupleResult(NamedTuple):
    i_holds: bool
    ii_holds: bool
    equivalence_respected: bool
    residuals: dict
    index_intertwine: tuple


def stack_tuple(pairs: Sequence, b, alpha: float, beta: float) -> IntertwineInstance:
    """Single instance on K_1 + ... + K_n: stacked A, block-diagonal C."""
    b = as_matrix(b, square=True)
    a_list, c_list = [], []
    for a_i, c_i in pairs:
        a_i = as_matrix(a_i)
        if a_i.shape[1] != b.shape[0]:
            raise DimensionMismatch(f"A_i has {a_i.shape[1]} columns, B has dim {b.shape[0]}")
        a_list.append(a_i)
        c_list.append(as_matrix(c_i, square=True))
    if not a_list:
        raise ValueError("need at least one (A_i, C_i) pair")
    return IntertwineInstance(np.vstack(a_list), b, direct_sum(*c_list), alpha, beta)


def verify_sewer(pairs: Sequence, b, alpha: float, beta: float, tol: ToleranceProfile = DEFAULT_TOL) -> TupleResult:
    """Tuple version, by reduction to one stacked instance."""
    inst = stack_tuple(pairs, b, alpha, beta)
    res = verify_bblem(inst, tol)
    bm = inst.B
    per_index = []
    for a_i, c_i in pairs:
        a_i = as_matrix(a_i)
        c_i = as_matrix(c_i)
        per_index.append(norm(a_i @ bm - c_i @ a_i) / (1.0 + norm(a_i) * norm(bm)))
    return TupleResult(res.i_holds, res.ii_holds, res.equivalence_respected, res.residuals, tuple(per_index))


def verify_achtwdw(a, b, alpha: float = 1.0, beta: float = 2.0, tol: ToleranceProfile = DEFAULT_TOL) -> EquivalenceResult:
    """Quasinormality criterion: condition (i) with C = B versus 'A quasinormal and B = A*A'."""
    a = as_matrix(a, square=True)
    b = as_matrix(b, square=True)
    if a.shape != b.shape:
        raise DimensionMismatch(f"A is {a.shape}, B is {b.shape}")
    inst = IntertwineInstance(a, b, b, alpha, beta)
    ci = check_condition_i(inst, tol)
    res_ii = {
        "quasinormal": quasinormal_residual(a),
        "modulus": norm(b - gram(a)) / (1.0 + norm(b)),
    }
    ii_holds = all(v <= tol.eq_rtol for v in res_ii.values())
    ok = equivalence_respected(_side_band(ci.residuals, tol), _side_band(res_ii, tol))
    residuals = {**{f"i.{k}": v for k, v in ci.residuals.items()}, **{f"ii.{k}": v for k, v in res_ii.items()}}
    return EquivalenceResult(ci.leq_ok and ci.moment_ok, ii_holds, ok, residuals)


def douglas_factor(a, b, tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
    """Q = A B^(-1/2) on range(B), zero on null(B), so that A = Q B^(1/2) and ||Q|| <= 1."""
    a = as_matrix(a)
    b = as_matrix(b, square=True)
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatch(f"A is {a.shape}, B is {b.shape}")
    if not loewner_leq(gram(a), b, tol):
        raise MajorizationFails("A*A is not dominated by B")
    return a @ pinv_sqrt(b, tol)


class KadisonResult(NamedTuple):
    inequality_ok: bool
    equality: bool
    equality_iff_ok: bool
    residuals: dict


def kadison_check(v, t, tol: ToleranceProfile = DEFAULT_TOL) -> KadisonResult:
    """(V*TV)*(V*TV) <= V*T*TV for a contraction V, and when equality holds.

    Equality is compared with TV = VV*TV under the hysteresis rule.
    """
    v = as_matrix(v)
    t = as_matrix(t, square=True)
    if t.shape[0] != v.shape[0]:
        raise DimensionMismatch(f"V is {v.shape}, T is {t.shape}")
    if norm(v) > 1.0 + tol.psd_tol:
        raise NotContraction(f"||V|| = {norm(v):.6g} > 1")
    compressed = v.conj().T @ t @ v
    lhs = gram(compressed)
    tv = t @ v
    rhs = gram(tv)
    scale = 1.0 + norm(t) ** 2
    res = {
        "inequality": _leq_deficit(lhs, rhs),
        "equality": norm(rhs - lhs) / scale,
        "range": norm(tv - v @ (v.conj().T @ tv)) / (1.0 + norm(t)),
    }
    equality = res["equality"] <= tol.eq_rtol
    ok = equivalence_respected(band(res["equality"], tol.eq_rtol), band(res["range"], tol.eq_rtol))
    return KadisonResult(res["inequality"] <= tol.psd_tol, equality, ok, res)


@dataclass
class KernelSplit:
    """Blocks of A along H = closure(range B) + null(B).

    ``A_tilde`` maps range to range and ``C_block`` range to kernel; the two
    right-hand blocks describe A on null(B) and vanish when A*A <= B.
    """

    range_basis: np.ndarray
    kernel_basis: np.ndarray
    A_tilde: np.ndarray
    C_block: np.ndarray
    top_right: np.ndarray
    bottom_right: np.ndarray
    majorized: bool
    kernel_column_norm: float

    def reassemble(self) -> np.ndarray:
        u = np.hstack([self.range_basis, self.kernel_basis])
        blocks = np.block([[self.A_tilde, self.top_right], [self.C_block, self.bottom_right]])
        return u @ blocks @ u.conj().T


def split_by_kernel(a, b, tol: ToleranceProfile = DEFAULT_TOL) -> KernelSplit:
    a = as_matrix(a, square=True)
    b = as_matrix(b, square=True)
    if a.shape != b.shape:
        raise DimensionMismatch(f"A is {a.shape}, B is {b.shape}")
    r, k, _ = range_split(b, tol)
    ar = a @ r
    ak = a @ k
    return KernelSplit(
        range_basis=r,
        kernel_basis=k,
        A_tilde=r.conj().T @ ar,
        C_block=k.conj().T @ ar,
        top_right=r.conj().T @ ak,
        bottom_right=k.conj().T @ ak,
        majorized=loewner_leq(gram(a), b, tol),
        kernel_column_norm=norm(ak),
    )

