"""Spectral n-th roots of normal matrices and the flatness-type verifiers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch, ExponentTooSmall, GapTooSmall, NotNormal
from .numkernel import (
    DEFAULT_TOL,
    ToleranceProfile,
    as_matrix,
    cogram,
    gram,
    herm_eig,
    hermitian_part,
    norm,
    psd_power,
)
from .opclass import band, class_a_residual, normalized, quasinormal_residual, star_power_gram

CLUSTER_RTOL = 1e-8


@dataclass(frozen=True)
class BranchRule:
    """Choice of n-th root branch, piecewise in the principal argument.

    ``principal``: arg in (-pi, pi] maps to arg/n.
    ``rotated``: the cut is moved to ``offset``; arg is taken in
    (offset - pi, offset + pi].
    ``custom``: ``table`` lists ``(lo, hi, k)``; a principal argument in
    [lo, hi) gets the principal root times exp(2 pi i k / n).
    """

    kind: str = "principal"
    offset: float = 0.0
    table: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in ("principal", "rotated", "custom"):
            raise ValueError(f"unknown branch kind {self.kind!r}")

    def root(self, z: complex, n: int) -> complex:
        z = complex(z)
        r = abs(z)
        if r == 0.0:
            return 0j
        theta = math.atan2(z.imag, z.real)
        if theta == -math.pi:
            theta = math.pi
        if self.kind == "rotated":
            lo = self.offset - math.pi
            theta = lo + ((theta - lo) % (2 * math.pi))
            if theta == lo:
                theta += 2 * math.pi
        base = r ** (1.0 / n) * complex(math.cos(theta / n), math.sin(theta / n))
        if self.kind == "custom":
            for lo, hi, k in self.table:
                if lo <= theta < hi:
                    return base * complex(math.cos(2 * math.pi * k / n), math.sin(2 * math.pi * k / n))
        return base


PRINCIPAL = BranchRule()


def _cluster_ranges(values: np.ndarray, thr: float):
    start = 0
    for i in range(1, len(values) + 1):
        if i == len(values) or values[i] - values[i - 1] > thr:
            yield start, i
            start = i


def normal_eig(nm, tol: ToleranceProfile = DEFAULT_TOL):
    """Eigenvalues and a unitary diagonaliser of a normal matrix.

    Diagonalises the Hermitian real part, then the imaginary part inside
    each (clustered) eigenspace of the real part.
    """
    nm = as_matrix(nm, square=True)
    scale = norm(nm)
    if norm(gram(nm) - cogram(nm)) > tol.eq_rtol * scale**2:
        raise NotNormal("matrix is not normal within eq_rtol")
    re = (nm + nm.conj().T) / 2
    im = (nm - nm.conj().T) / 2j
    w, v = herm_eig(re, tol)
    thr = CLUSTER_RTOL * max(scale, 1e-300)
    cols = []
    for lo, hi in _cluster_ranges(w, thr):
        block = v[:, lo:hi]
        # The compression is Hermitian up to roundoff; symmetrise before the check.
        _, inner = herm_eig(hermitian_part(block.conj().T @ im @ block), tol)
        cols.append(block @ inner)
    u = np.hstack(cols)
    mu = np.einsum("ij,ik,kj->j", u.conj(), nm, u)
    return mu, u


def spectral_nth_root(nm, n: int, branch: BranchRule = PRINCIPAL, tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
    """Apply a branch of z -> z^(1/n) to the spectrum of a normal matrix."""
    if n < 2:
        raise ValueError("n must be at least 2")
    mu, u = normal_eig(nm, tol)
    roots = np.array([branch.root(z, n) for z in mu])
    return (u * roots) @ u.conj().T


def verify_root(r, t, n: int, tol: ToleranceProfile = DEFAULT_TOL) -> bool:
    """||R^n - T|| <= eq_rtol (1 + ||T||)."""
    return root_residual(r, t, n) <= tol.eq_rtol


def root_residual(r, t, n: int) -> float:
    r = as_matrix(r, square=True)
    t = as_matrix(t, square=True)
    if r.shape != t.shape:
        raise DimensionMismatch(f"{r.shape} vs {t.shape}")
    return norm(np.linalg.matrix_power(r, n) - t) / (1.0 + norm(t))


@dataclass
class FlatnessReport:
    n: int
    k: int
    gap: int
    chain_equal: bool
    quasinormal_verdict: bool
    class_a: bool
    residuals: dict

    @property
    def violation(self) -> bool:
        """Clear hypothesis (class A, equal chain terms) with a clear non-quasinormal T."""
        tol = self.residuals["tolerances"]
        return (
            band(self.residuals["class_a"], tol["psd"]) == "holds"
            and band(self.residuals["chain"], tol["eq"]) == "holds"
            and band(self.residuals["quasinormal"], tol["eq"]) == "fails"
        )


def chain_term(t, k: int, tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
    """(T*^k T^k)^(1/k) of the normalised T."""
    return psd_power(star_power_gram(normalized(t), k), 1.0 / k, tol)


def verify_rowm(t, n: int, k: int, tol: ToleranceProfile = DEFAULT_TOL) -> FlatnessReport:
    """Equal chain terms at distance >= 2, class A, and quasinormality."""
    t = as_matrix(t, square=True)
    if n < 1:
        raise ValueError("n must be positive")
    if k - n < 2:
        raise GapTooSmall(f"k - n = {k - n} < 2")
    chain = norm(chain_term(t, n, tol) - chain_term(t, k, tol))
    ca = class_a_residual(t, tol)
    qn = quasinormal_residual(t)
    res = {"chain": chain, "class_a": ca, "quasinormal": qn, "tolerances": {"eq": tol.eq_rtol, "psd": tol.psd_tol}}
    return FlatnessReport(n, k, k - n, chain <= tol.eq_rtol, qn <= tol.eq_rtol, ca <= tol.psd_tol, res)


class KupiaReport(NamedTuple):
    single_eq_ok: bool
    class_a: bool
    quasinormal_verdict: bool
    residuals: dict

    @property
    def violation(self) -> bool:
        tol = self.residuals["tolerances"]
        return (
            band(self.residuals["class_a"], tol["psd"]) == "holds"
            and band(self.residuals["single_eq"], tol["eq"]) == "holds"
            and band(self.residuals["quasinormal"], tol["eq"]) == "fails"
        )


def verify_kupia(t, n: int, kappa: int, tol: ToleranceProfile = DEFAULT_TOL) -> KupiaReport:
    """X = T^n with X*^kappa X^kappa = (X*X)^kappa, plus class A and quasinormality of T."""
    t = as_matrix(t, square=True)
    if n < 2 or kappa < 2:
        raise ExponentTooSmall("n and kappa must both be at least 2")
    x = normalized(np.linalg.matrix_power(normalized(t), n))
    single = norm(star_power_gram(x, kappa) - np.linalg.matrix_power(gram(x), kappa))
    ca = class_a_residual(t, tol)
    qn = quasinormal_residual(t)
    res = {"single_eq": single, "class_a": ca, "quasinormal": qn, "tolerances": {"eq": tol.eq_rtol, "psd": tol.psd_tol}}
    return KupiaReport(single <= tol.eq_rtol, ca <= tol.psd_tol, qn <= tol.eq_rtol, res)


def flatness_search(n: int, trials: int, dim: int, rng_seed=0, tol: ToleranceProfile = DEFAULT_TOL,
                    family: str = "mixed") -> list:
    """Look for class A matrices with (T*^nT^n)^(1/n) = (T*^(n+1)T^(n+1))^(1/(n+1)) that are not quasinormal.

    ``family``: ``mixed`` draws D + eps K (D normal, eps in {0.1, 0.01}) or a
    fully random matrix with equal odds; ``normal`` and ``random`` restrict
    to one stream. Returns the candidates found (normally none).
    """
    from .harness import make_rng, random_dense, random_normal

    if n < 2:
        raise ValueError("the flatness question is only open for n >= 2")
    candidates = []
    for trial in range(trials):
        rng = make_rng(rng_seed, trial)
        pick = family
        if family == "mixed":
            pick = "near" if rng.random() < 0.5 else "random"
        if pick == "normal":
            t = random_normal(rng, dim)
        elif pick == "near":
            eps = (0.1, 0.01)[int(rng.integers(2))]
            t = random_normal(rng, dim) + eps * random_dense(rng, dim)
        elif pick == "random":
            t = random_dense(rng, dim)
        else:
            raise ValueError(f"unknown family {family!r}")
        if class_a_residual(t, tol) > tol.psd_tol:
            continue
        if norm(chain_term(t, n, tol) - chain_term(t, n + 1, tol)) > tol.eq_rtol:
            continue
        if quasinormal_residual(t) > tol.eq_rtol:
            candidates.append(t)
    return candidates
