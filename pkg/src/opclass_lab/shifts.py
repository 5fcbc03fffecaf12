"""Unilateral weighted shifts described by a finite prefix and a tail rule.

``W e_k = w_k e_{k+1}``. Truncating to the first m basis vectors gives a
strictly subdiagonal matrix, and powers of such matrices are themselves
truncations of the operator powers, so identities like W^n = U^n can be
checked entrywise on the matrices.

Tensor products are ordered (shift index) x (factor index), i.e.
``np.kron(shift_matrix, S)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import formats
from .errors import (
    HorizonTooSmall,
    NotCommuting,
    NotNormal,
    ParseError,
    ShiftFactorNotUnit,
    TooFewMoments,
    TruncationTooSmall,
)
from .measures import is_stieltjes
from .numkernel import DEFAULT_TOL, ToleranceProfile, as_matrix, direct_sum, is_normal, norm
from .opclass import quasinormal_residual

ROUNDOFF_ATOL = 1e-12


@dataclass(frozen=True)
class WeightSequence:
    prefix: tuple = ()
    tail_kind: str = "constant"
    tail: tuple = (1.0,)

    def __post_init__(self):
        if self.tail_kind not in ("constant", "periodic"):
            raise ValueError(f"unknown tail kind {self.tail_kind!r}")
        prefix = tuple(float(x) for x in self.prefix)
        tail = tuple(float(x) for x in self.tail)
        if not tail or (self.tail_kind == "constant" and len(tail) != 1):
            raise ValueError("constant tail needs one value, periodic tail a nonempty period")
        for x in prefix + tail:
            if not (math.isfinite(x) and x > 0):
                raise ValueError(f"weights must be positive and finite, got {x!r}")
        object.__setattr__(self, "prefix", prefix)
        object.__setattr__(self, "tail", tail)

    @classmethod
    def constant(cls, c: float = 1.0, prefix=()):
        return cls(tuple(prefix), "constant", (c,))

    @classmethod
    def periodic(cls, period, prefix=()):
        return cls(tuple(prefix), "periodic", tuple(period))

    @classmethod
    def unilateral(cls):
        return cls.constant(1.0)

    @property
    def period_length(self) -> int:
        return len(self.tail)

    def head(self, count: int) -> np.ndarray:
        return np.array([weight_at(self, k) for k in range(count)])

    def to_json(self) -> dict:
        value = self.tail[0] if self.tail_kind == "constant" else list(self.tail)
        return {"prefix": list(self.prefix), "tail": {"kind": self.tail_kind, "value": value}}

    @classmethod
    def from_json(cls, obj):
        try:
            prefix = formats.real_list_from_json(obj.get("prefix", []), "prefix")
            kind = obj["tail"]["kind"]
            value = obj["tail"]["value"]
        except (KeyError, TypeError, AttributeError) as exc:
            raise ParseError(f"bad weight sequence JSON: {exc}") from None
        if kind == "constant":
            (c,) = formats.real_list_from_json([value], "tail value")
            tail = (c,)
        elif kind == "periodic":
            tail = tuple(formats.real_list_from_json(value, "tail value"))
        else:
            raise ParseError(f"unknown tail kind {kind!r}")
        try:
            return cls(tuple(prefix), kind, tail)
        except ValueError as exc:
            raise ParseError(str(exc)) from None


def weight_at(w: WeightSequence, k: int) -> float:
    if k < len(w.prefix):
        return w.prefix[k]
    return w.tail[(k - len(w.prefix)) % len(w.tail)]


class PorwsResult(NamedTuple):
    cond_ii: bool
    cond_iii: bool
    agree: bool


def _porws_horizon(w: WeightSequence, n: int, khorizon: int) -> int:
    # Past the prefix every window pattern repeats with period lcm(n, p).
    return max(khorizon, len(w.prefix) + math.lcm(n, w.period_length) + n)


def check_porws(w: WeightSequence, n: int, khorizon: int, tol: float = ROUNDOFF_ATOL) -> PorwsResult:
    """Sliding products versus 'first product is 1 and weights are n-periodic'.

    Both conditions are evaluated up to ``khorizon``, extended when needed
    so that the tail pattern is covered completely.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if khorizon < n + len(w.prefix) + w.period_length:
        raise HorizonTooSmall(f"khorizon must be at least {n + len(w.prefix) + w.period_length}")
    horizon = _porws_horizon(w, n, khorizon)
    lam = w.head(horizon + n + 1)
    cond_ii = all(abs(np.prod(lam[k : k + n]) - 1.0) <= tol for k in range(horizon + 1))
    first = abs(np.prod(lam[:n]) - 1.0) <= tol
    periodic = all(abs(lam[k] - lam[k % n]) <= tol * lam[k % n] for k in range(n, horizon + n + 1))
    cond_iii = bool(first and periodic)
    return PorwsResult(bool(cond_ii), cond_iii, bool(cond_ii) == cond_iii)


def trunc_matrix(w: WeightSequence, m: int) -> np.ndarray:
    """m x m compression of W: entry (k+1, k) is w_k."""
    if m < 1:
        raise ValueError("m must be at least 1")
    out = np.zeros((m, m), dtype=complex)
    idx = np.arange(m - 1)
    out[idx + 1, idx] = w.head(m - 1)
    return out


def porws_matrix_condition(w: WeightSequence, n: int, m: int | None = None, atol: float = ROUNDOFF_ATOL):
    """Whether trunc(W, m)^n equals trunc(U, m)^n entrywise (to ``atol``).

    ``m`` defaults to a size where every window of the tail appears.
    Returns ``(holds, max_abs_difference)``.
    """
    if m is None:
        m = n + len(w.prefix) + w.period_length + 2
    lhs = np.linalg.matrix_power(trunc_matrix(w, m), n)
    rhs = np.linalg.matrix_power(trunc_matrix(WeightSequence.unilateral(), m), n)
    diff = float(np.max(np.abs(lhs - rhs)))
    return diff <= atol, diff


def piurwa_from_draws(draws) -> WeightSequence:
    """Periodic weights (d_0, ..., d_{n-2}, 1/prod(d)) with period product 1."""
    draws = [float(x) for x in draws]
    last = 1.0 / float(np.prod(draws))
    return WeightSequence.periodic(draws + [last])


def construct_piurwa(n: int, rng_seed=0) -> WeightSequence:
    """A non-constant n-periodic weight sequence with W^n = U^n.

    The first n-1 weights are log-uniform on [1/2, 2]; the last closes the
    period product to 1. Redrawn if the period comes out constant.
    """
    from .harness import make_rng

    if n < 2:
        raise ValueError("n must be at least 2")
    rng = make_rng(rng_seed) if not isinstance(rng_seed, np.random.Generator) else rng_seed
    while True:
        draws = np.exp(rng.uniform(np.log(0.5), np.log(2.0), size=n - 1))
        w = piurwa_from_draws(draws)
        if np.ptp(w.tail) > 1e-12:
            return w


def shift_is_quasinormal(w: WeightSequence, rtol: float = ROUNDOFF_ATOL) -> bool:
    """Only tU is quasinormal among positive-weight shifts: all weights equal."""
    lam = np.array(w.prefix + w.tail)
    return bool(np.all(np.abs(lam - lam[0]) <= rtol * lam[0]))


def shift_moments(w: WeightSequence, m: int) -> np.ndarray:
    """gamma_0..gamma_m with gamma_k = ||W^k e_0||^2 = prod_{j<k} w_j^2."""
    if m < 2:
        raise TooFewMoments("m must be at least 2")
    lam = w.head(m)
    return np.concatenate([[1.0], np.cumprod(lam**2)])


def shift_is_subnormal(w: WeightSequence, m: int = 8, tol: ToleranceProfile = DEFAULT_TOL) -> bool:
    """Stieltjes test on the first m+1 moments; a necessary condition only."""
    if m < 4:
        raise TooFewMoments("m must be at least 4")
    return is_stieltjes(shift_moments(w, m), tol)


@dataclass(frozen=True, eq=False)
class BrownForm:
    """N + (W (x) S) with N normal (optional) and S positive definite."""

    shift_factor: WeightSequence
    positive_factor: np.ndarray
    normal_part: np.ndarray | None = None
    tol: ToleranceProfile = DEFAULT_TOL

    def __post_init__(self):
        s = as_matrix(self.positive_factor, square=True)
        if norm(s - s.conj().T) > self.tol.eq_rtol * norm(s):
            raise ValueError("S must be Hermitian")
        w = np.linalg.eigvalsh((s + s.conj().T) / 2)
        if not w[0] > self.tol.psd_tol * max(abs(w[-1]), 0.0):
            raise ValueError("S must be positive definite")
        object.__setattr__(self, "positive_factor", s)
        if self.normal_part is not None:
            nm = as_matrix(self.normal_part, square=True)
            if not is_normal(nm, self.tol):
                raise NotNormal("N must be normal")
            object.__setattr__(self, "normal_part", nm)

    def truncation(self, m: int) -> np.ndarray:
        return direct_sum(self.normal_part, np.kron(trunc_matrix(self.shift_factor, m), self.positive_factor))


class NritsResult(NamedTuple):
    T: np.ndarray
    R: np.ndarray
    R_is_quasinormal: bool
    weights: WeightSequence
    root_residual: float
    quasinormal_residual: float


def construct_nrits_root(q: BrownForm, n: int, m: int, rng_seed=0, tol: ToleranceProfile = DEFAULT_TOL,
                         shift: WeightSequence | None = None) -> NritsResult:
    """Non-quasinormal n-th root of the truncated quasinormal power Q^n.

    T = N^n + (U_m^n (x) S^n) and R = N + (W_m (x) S), with W from
    :func:`construct_piurwa` (or ``shift`` when given).
    """
    sf = q.shift_factor
    if sf.prefix or sf.tail_kind != "constant" or sf.tail[0] != 1.0:
        raise ShiftFactorNotUnit("the Brown form must use the unweighted unilateral shift")
    if n < 2:
        raise ValueError("n must be at least 2")
    if m < n + 1:
        raise TruncationTooSmall(f"truncation {m} must be at least n+1 = {n + 1}")
    w = shift if shift is not None else construct_piurwa(n, rng_seed)
    s = q.positive_factor
    nm = q.normal_part
    u_pow = np.linalg.matrix_power(trunc_matrix(sf, m), n)
    t = direct_sum(
        None if nm is None else np.linalg.matrix_power(nm, n),
        np.kron(u_pow, np.linalg.matrix_power(s, n)),
    )
    r = direct_sum(nm, np.kron(trunc_matrix(w, m), s))
    residual = norm(np.linalg.matrix_power(r, n) - t) / max(norm(t), 1e-300)
    qres = quasinormal_residual(r)
    return NritsResult(t, r, bool(qres <= tol.eq_rtol), w, residual, qres)


def construct_bluk_root(a, b, c, tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
    """S = A + [[B, C], [0, -B]], a square root of A^2 + B^2 + B^2.

    Needs B normal and BC = CB; S is non-normal whenever C is nonzero.
    """
    b = as_matrix(b, square=True)
    c = as_matrix(c, square=True)
    if b.shape != c.shape:
        raise ValueError(f"B is {b.shape}, C is {c.shape}")
    if not is_normal(b, tol):
        raise NotNormal("B must be normal")
    if a is not None:
        a = as_matrix(a, square=True)
        if not is_normal(a, tol):
            raise NotNormal("A must be normal")
    if norm(b @ c - c @ b) > tol.eq_rtol * (1.0 + norm(b) * norm(c)):
        raise NotCommuting("C must commute with B")
    block = np.block([[b, c], [np.zeros_like(b), -b]])
    return direct_sum(a, block)


def bluk_target(a, b) -> np.ndarray:
    """A^2 + B^2 + B^2."""
    b = as_matrix(b, square=True)
    return direct_sum(None if a is None else as_matrix(a, square=True) @ as_matrix(a, square=True), b @ b, b @ b)
