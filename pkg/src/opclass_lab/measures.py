"""Finitely atomic operator-valued measures on [0, inf) and scalar moments.

A :class:`DiscretePovMeasure` is a list of points with PSD weights. Spectral
measures of Hermitian matrices, integrals against such measures, the
completion that pushes missing mass to the origin, two-moment determination,
and the Hankel/Jacobi-matrix machinery for scalar Stieltjes sequences all
live here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple

import numpy as np

from . import formats
from .errors import (
    AlphaBetaEqual,
    DimensionMismatch,
    MassExceedsIdentity,
    NonFiniteFunctionValue,
    NotPositiveInjective,
    NotPSD,
    NotStieltjes,
    ParseError,
    RankDeficient,
    TooFewMoments,
)
from .numkernel import (
    DEFAULT_TOL,
    ToleranceProfile,
    as_matrix,
    herm_eig,
    hermitian_part,
    loewner_leq,
    norm,
    psd_power,
)

MERGE_RTOL = 1e-8


def _merge_threshold(points) -> float:
    return MERGE_RTOL * (1.0 + (max(points) if len(points) else 0.0))


@dataclass(frozen=True, eq=False)
class DiscretePovMeasure:
    """Finitely supported positive-operator-valued measure.

    ``points`` is strictly increasing and nonnegative; ``weights[i]`` is the
    PSD mass sitting at ``points[i]``.
    """

    points: np.ndarray
    weights: np.ndarray
    dim: int

    @classmethod
    def from_atoms(cls, atoms: Iterable, dim: int | None = None, tol: ToleranceProfile = DEFAULT_TOL):
        """Build from ``(point, weight)`` pairs, merging points that nearly coincide."""
        pairs = [(float(x), as_matrix(w, square=True)) for x, w in atoms]
        if dim is None:
            if not pairs:
                raise ValueError("dim is required for a measure without atoms")
            dim = pairs[0][1].shape[0]
        for x, w in pairs:
            if not np.isfinite(x) or x < 0:
                raise ValueError(f"atom point {x!r} is not a finite nonnegative real")
            if w.shape != (dim, dim):
                raise DimensionMismatch(f"weight of shape {w.shape} in a measure of dim {dim}")
            wn = norm(w)
            if norm(w - w.conj().T) > tol.eq_rtol * wn + tol.eq_atol:
                raise NotPSD(f"weight at {x} is not Hermitian")
            if wn > 0 and np.linalg.eigvalsh(hermitian_part(w))[0] < -tol.psd_tol * wn:
                raise NotPSD(f"weight at {x} is not positive semidefinite")
        pairs.sort(key=lambda p: p[0])
        thr = _merge_threshold([x for x, _ in pairs])
        merged: list[list] = []
        for x, w in pairs:
            if merged and x - merged[-1][2] <= thr:
                group = merged[-1]
                group[0].append(x)
                group[1] = group[1] + w
                group[2] = x
            else:
                merged.append([[x], hermitian_part(w), x])
        points = np.array([np.mean(g[0]) for g in merged], dtype=float)
        weights = np.array([hermitian_part(g[1]) for g in merged], dtype=complex).reshape(-1, dim, dim)
        points.flags.writeable = False
        weights.flags.writeable = False
        return cls(points, weights, int(dim))

    def __len__(self):
        return len(self.points)

    def atoms(self):
        return list(zip(self.points.tolist(), self.weights))

    def total(self) -> np.ndarray:
        if len(self) == 0:
            return np.zeros((self.dim, self.dim), dtype=complex)
        return self.weights.sum(axis=0)

    def is_semispectral(self, tol: ToleranceProfile = DEFAULT_TOL) -> bool:
        return norm(self.total() - np.eye(self.dim)) <= tol.eq_atol + tol.eq_rtol

    def is_spectral(self, tol: ToleranceProfile = DEFAULT_TOL) -> bool:
        if not self.is_semispectral(tol):
            return False
        for i, w in enumerate(self.weights):
            if norm(w @ w - w) > tol.proj_tol:
                return False
            for v in self.weights[i + 1 :]:
                if norm(w @ v) > tol.proj_tol:
                    return False
        return True

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "atoms": [{"x": float(x), "w": formats.matrix_to_json(w)} for x, w in self.atoms()],
        }

    @classmethod
    def from_json(cls, obj, tol: ToleranceProfile = DEFAULT_TOL):
        if not isinstance(obj, dict) or "dim" not in obj or "atoms" not in obj:
            raise ParseError("measure JSON needs 'dim' and 'atoms'")
        dim = obj["dim"]
        if not isinstance(dim, int) or dim < 1:
            raise ParseError("'dim' must be a positive integer")
        atoms = []
        for a in obj["atoms"]:
            if not isinstance(a, dict) or "x" not in a or "w" not in a:
                raise ParseError("each atom needs 'x' and 'w'")
            (x,) = formats.real_list_from_json([a["x"]], "x")
            atoms.append((x, formats.matrix_from_json(a["w"])))
        return cls.from_atoms(atoms, dim=dim, tol=tol)


def spectral_measure(h, tol: ToleranceProfile = DEFAULT_TOL) -> DiscretePovMeasure:
    """Projection-valued measure of a PSD matrix, one atom per distinct eigenvalue."""
    w, v = herm_eig(h, tol)
    scale = max(abs(w[0]), abs(w[-1]))
    if w[0] < -tol.psd_tol * scale:
        raise NotPSD("spectral measure on [0, inf) needs a PSD matrix")
    w = np.clip(w, 0.0, None)
    thr = _merge_threshold(w)
    atoms = []
    start = 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > thr:
            block = v[:, start:i]
            atoms.append((float(np.mean(w[start:i])), block @ block.conj().T))
            start = i
    return DiscretePovMeasure.from_atoms(atoms, dim=len(w), tol=tol)


def pov_integral(f_measure: DiscretePovMeasure, f: Callable[[float], float]) -> np.ndarray:
    """Sum of f(x_i) W_i over the atoms."""
    out = np.zeros((f_measure.dim, f_measure.dim), dtype=complex)
    for x, w in f_measure.atoms():
        value = f(x)
        if not np.isfinite(value):
            raise NonFiniteFunctionValue(f"f({x}) = {value!r}")
        out = out + value * w
    return out


def _power(p: float):
    # 0**p = 0 for the positive exponents used here.
    return lambda x: x**p


def completion_measure(f_measure: DiscretePovMeasure, tol: ToleranceProfile = DEFAULT_TOL) -> DiscretePovMeasure:
    """Add the defect I - F([0, inf)) as an atom at 0."""
    eye = np.eye(f_measure.dim)
    total = f_measure.total()
    if not loewner_leq(total, eye, tol):
        raise MassExceedsIdentity("total mass is not dominated by the identity")
    defect = hermitian_part(eye - total)
    if norm(defect) <= tol.eq_atol + tol.eq_rtol:
        return f_measure
    return DiscretePovMeasure.from_atoms([(0.0, defect)] + f_measure.atoms(), dim=f_measure.dim, tol=tol)


class MomentDetermination(NamedTuple):
    hypothesis_ok: bool
    conclusion_ok: bool
    moment_residuals: tuple
    mass_ok: bool


def measures_match(f_measure: DiscretePovMeasure, g_measure: DiscretePovMeasure, scale: float = 1.0,
                   tol: ToleranceProfile = DEFAULT_TOL) -> bool:
    """Same atoms (points within eq tolerance) and same weights."""
    if f_measure.dim != g_measure.dim or len(f_measure) != len(g_measure):
        return False
    if not np.all(np.abs(f_measure.points - g_measure.points) <= tol.eq_atol + tol.eq_rtol * scale):
        return False
    return all(norm(a - b) <= tol.eq_atol + tol.eq_rtol for a, b in zip(f_measure.weights, g_measure.weights))


def verify_two_moment_determination(t, f_measure: DiscretePovMeasure, alpha: float, beta: float,
                                    tol: ToleranceProfile = DEFAULT_TOL) -> MomentDetermination:
    """Check both sides of two-moment determination for a positive injective T.

    ``hypothesis_ok``: T**p equals the p-th moment of F for p = alpha, beta and
    F([0, inf)) <= I. ``conclusion_ok``: F is the spectral measure of T.
    The two are computed independently so that a campaign can look for the
    pattern (True, False).
    """
    t = as_matrix(t, square=True)
    if alpha == beta:
        raise AlphaBetaEqual("alpha and beta must differ")
    if not (alpha > 0 and beta > 0):
        raise ValueError("alpha and beta must be positive")
    if t.shape[0] != f_measure.dim:
        raise DimensionMismatch(f"T has dim {t.shape[0]}, measure has dim {f_measure.dim}")
    scale = norm(t)
    if norm(t - t.conj().T) > tol.eq_rtol * scale:
        raise NotPositiveInjective("T is not Hermitian")
    w = np.linalg.eigvalsh(hermitian_part(t))
    if not w[0] > tol.psd_tol * scale:
        raise NotPositiveInjective(f"smallest eigenvalue {w[0]:.3e} is not strictly positive")
    residuals = []
    for p in (alpha, beta):
        target = psd_power(t, p, tol)
        moment = pov_integral(f_measure, _power(p))
        residuals.append(norm(target - moment) / (1.0 + norm(target)))
    mass_ok = loewner_leq(f_measure.total(), np.eye(f_measure.dim), tol)
    hypothesis_ok = mass_ok and all(r <= tol.eq_rtol for r in residuals)
    conclusion_ok = measures_match(f_measure, spectral_measure(t, tol), scale, tol)
    return MomentDetermination(hypothesis_ok, conclusion_ok, tuple(residuals), mass_ok)


# scalar moments ---------------------------------------------------------


def _gamma(g) -> np.ndarray:
    gamma = np.asarray(g, dtype=float).reshape(-1)
    if not np.all(np.isfinite(gamma)):
        raise ValueError("moment sequence has non-finite entries")
    return gamma


def hankel_matrices(g):
    """The largest square Hankel matrices (gamma_{i+j}) and (gamma_{i+j+1})."""
    gamma = _gamma(g)
    m = len(gamma) - 1
    n0 = m // 2 + 1
    n1 = (m - 1) // 2 + 1
    r0 = np.arange(n0)
    r1 = np.arange(n1)
    return gamma[r0[:, None] + r0[None, :]], gamma[r1[:, None] + r1[None, :] + 1]


def is_stieltjes(g, tol: ToleranceProfile = DEFAULT_TOL) -> bool:
    """Double Hankel positivity test for gamma_0..gamma_m (m >= 2)."""
    gamma = _gamma(g)
    if len(gamma) - 1 < 2:
        raise TooFewMoments("need gamma_0..gamma_m with m >= 2")
    scale = np.max(np.abs(gamma))
    if scale == 0:
        return True
    h0, h1 = hankel_matrices(gamma)
    lo = min(np.linalg.eigvalsh(h0)[0], np.linalg.eigvalsh(h1)[0])
    return bool(lo >= -tol.psd_tol * scale)


def atomic_moments(atoms, m: int) -> np.ndarray:
    """gamma_0..gamma_m of a finite sum of point masses ``[(x, mass), ...]``."""
    out = np.zeros(m + 1)
    for x, mass in atoms:
        out += mass * float(x) ** np.arange(m + 1)
    return out


def _recurrence_from_moments(gamma: np.ndarray, natoms: int, tol: ToleranceProfile):
    """Three-term recurrence coefficients from ordinary moments (Chebyshev algorithm).

    Uses gamma_0..gamma_{2n-1}. Stops early when the norm of the next monic
    orthogonal polynomial vanishes, which signals fewer atoms than asked.
    """
    n = natoms
    sig_prev = np.zeros(2 * n)
    sig = gamma[: 2 * n].astype(float).copy()
    a = [sig[1] / sig[0]]
    b = [sig[0]]
    for k in range(1, n):
        new = np.zeros(2 * n)
        for ell in range(k, 2 * n - k):
            new[ell] = sig[ell + 1] - a[k - 1] * sig[ell] - b[k - 1] * sig_prev[ell]
        if new[k] <= tol.psd_tol * abs(sig[k - 1]) * max(1.0, abs(a[k - 1])) ** 2:
            return np.array(a), np.array(b), k
        a.append(new[k + 1] / new[k] - sig[k] / sig[k - 1])
        b.append(new[k] / sig[k - 1])
        sig_prev, sig = sig, new
    return np.array(a), np.array(b), n


def recover_atomic_measure(g, natoms: int, tol: ToleranceProfile = DEFAULT_TOL):
    """Atoms ``[(point, mass), ...]`` reproducing gamma_0..gamma_{2n-1}.

    Gauss quadrature from the Jacobi matrix of the moment recurrence:
    nodes are its eigenvalues, masses gamma_0 times squared first
    eigenvector components. Raises :class:`RankDeficient` (carrying the
    smaller atom set) when the data support fewer atoms than ``natoms``.
    """
    gamma = _gamma(g)
    if natoms < 1:
        raise ValueError("natoms must be at least 1")
    if 2 * natoms > len(gamma):
        raise TooFewMoments(f"{natoms} atoms need {2 * natoms} moments, got {len(gamma)}")
    if len(gamma) >= 3 and not is_stieltjes(gamma, tol):
        raise NotStieltjes("Hankel test failed")
    if not gamma[0] > 0:
        raise NotStieltjes("gamma_0 must be positive")
    a, b, found = _recurrence_from_moments(gamma, natoms, tol)
    jac = np.diag(a[:found]) + np.diag(np.sqrt(b[1:found]), 1) + np.diag(np.sqrt(b[1:found]), -1)
    nodes, vecs = herm_eig(jac, tol)
    masses = b[0] * np.abs(vecs[0, :]) ** 2
    span = max(1.0, float(np.max(np.abs(nodes))))
    if nodes[0] < -tol.psd_tol * span * 1e3:
        raise NotStieltjes(f"recovered node {nodes[0]:.3e} is negative")
    atoms = [(max(float(x), 0.0), float(mass)) for x, mass in zip(nodes, masses)]
    if found < natoms:
        raise RankDeficient(f"only {found} genuine atoms", atoms)
    return atoms
