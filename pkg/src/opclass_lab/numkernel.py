"""Dense complex linear algebra for small operators.

Hermitian eigendecomposition, functions of positive semidefinite matrices,
polar decomposition, Loewner comparison and the pseudoinverse square root.
Matrices are plain ``numpy`` complex arrays; nothing here mutates its input.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import (
    DimensionMismatch,
    NonSquare,
    NotHermitian,
    NotPositiveDefinite,
    NotPSD,
    ParseError,
)


@dataclass(frozen=True)
class ToleranceProfile:
    """Thresholds shared by every approximate predicate.

    ``psd_tol`` is relative to the spectral norm of the matrices compared.
    """

    eq_atol: float = 1e-10
    eq_rtol: float = 1e-9
    psd_tol: float = 1e-9
    proj_tol: float = 1e-9

    def __post_init__(self):
        for name in ("eq_atol", "eq_rtol", "psd_tol", "proj_tol"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and nonnegative, got {value!r}")


DEFAULT_TOL = ToleranceProfile()


class HermitianEigen(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_matrix(x, *, square: bool = False) -> np.ndarray:
    """Coerce ``x`` to a finite 2-D complex array (a copy-free view when possible)."""
    m = np.asarray(x, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ParseError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ParseError("matrix has non-finite entries")
    if square and m.shape[0] != m.shape[1]:
        raise NonSquare(f"expected a square matrix, got shape {m.shape}")
    return m


def adjoint(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return (m + m.conj().T) / 2


def norm(m: np.ndarray) -> float:
    """Spectral norm; 0 for empty matrices."""
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def gram(t: np.ndarray) -> np.ndarray:
    """T*T, symmetrised against roundoff."""
    return hermitian_part(t.conj().T @ t)


def cogram(t: np.ndarray) -> np.ndarray:
    """TT*, symmetrised against roundoff."""
    return hermitian_part(t @ t.conj().T)


def jacobi_eigh(m: np.ndarray, rtol: float = 1e-13, max_sweeps: int = 60):
    """Cyclic Jacobi eigensolver for a Hermitian matrix.

    Each rotation first removes the phase of the pivot, then applies the
    real symmetric rotation that annihilates it. Stops once the off-diagonal
    Frobenius norm drops to ``rtol * ||m||``. Returns ascending eigenvalues
    and the unitary matrix of eigenvectors (columns).
    """
    a = np.array(m, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = norm(a)
    if n == 1 or scale == 0.0:
        w = np.real(np.diag(a)).copy()
        order = np.argsort(w, kind="stable")
        return w[order], v[:, order]
    thresh = rtol * scale
    for _ in range(max_sweeps):
        off = np.linalg.norm(a[~np.eye(n, dtype=bool)])
        if off <= thresh:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                phase = apq / mag
                theta = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                g = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = g.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                v[:, idx] = v[:, idx] @ g
    w = np.real(np.diag(a)).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def herm_eig(m, tol: ToleranceProfile = DEFAULT_TOL, method: str = "lapack") -> HermitianEigen:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    ``method="jacobi"`` runs :func:`jacobi_eigh`; the default delegates to
    LAPACK, which is much faster for the campaign workloads.
    """
    m = as_matrix(m, square=True)
    scale = norm(m)
    if norm(m - m.conj().T) > tol.eq_rtol * scale:
        raise NotHermitian("matrix is not Hermitian within eq_rtol")
    h = hermitian_part(m)
    if method == "jacobi":
        w, v = jacobi_eigh(h)
    elif method == "lapack":
        w, v = np.linalg.eigh(h)
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    return HermitianEigen(w, v)


def _checked_psd_eig(m, tol: ToleranceProfile):
    w, v = herm_eig(m, tol)
    scale = max(abs(w[0]), abs(w[-1]))
    if w[0] < -tol.psd_tol * scale:
        raise NotPSD(f"eigenvalue {w[0]:.3e} below -psd_tol*||M||")
    return np.clip(w, 0.0, None), v, scale


def _rebuild(v: np.ndarray, w: np.ndarray) -> np.ndarray:
    return hermitian_part((v * w) @ v.conj().T)


def psd_function(m, f: Callable[[np.ndarray], np.ndarray], tol: ToleranceProfile = DEFAULT_TOL):
    """Apply ``f`` to the clamped spectrum of a PSD matrix."""
    w, v, _ = _checked_psd_eig(m, tol)
    return _rebuild(v, f(w))


def psd_power(m, p: float, tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
    """M**p for PSD M and p > 0; slightly negative eigenvalues are clamped to 0."""
    if not p > 0:
        raise ValueError(f"exponent must be positive, got {p!r}")
    if p == 1:
        return hermitian_part(as_matrix(m, square=True))
    return psd_function(m, lambda w: w**p, tol)


def matrix_log(m, tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
    w, v = herm_eig(m, tol)
    scale = max(abs(w[0]), abs(w[-1]))
    if not w[0] > tol.psd_tol * scale:
        raise NotPositiveDefinite(f"smallest eigenvalue {w[0]:.3e} is not strictly positive")
    return _rebuild(v, np.log(w))


def loewner_margin(x, y, tol: ToleranceProfile = DEFAULT_TOL) -> float:
    """Smallest eigenvalue of Y - X divided by max(||X||, ||Y||, 1).

    Nonnegative exactly when X <= Y; ``loewner_leq`` compares this to
    ``-psd_tol``.
    """
    x = as_matrix(x, square=True)
    y = as_matrix(y, square=True)
    if x.shape != y.shape:
        raise DimensionMismatch(f"{x.shape} vs {y.shape}")
    scale = max(norm(x), norm(y), 1.0)
    lo = np.linalg.eigvalsh(hermitian_part(y - x))[0]
    return float(lo / scale)


def loewner_leq(x, y, tol: ToleranceProfile = DEFAULT_TOL) -> bool:
    """X <= Y in the Loewner order, up to ``psd_tol``."""
    return loewner_margin(x, y, tol) >= -tol.psd_tol


def polar(t, tol: ToleranceProfile = DEFAULT_TOL):
    """Polar decomposition T = W|T|.

    Returns ``(modulus, partial_isometry)``. The modulus is built from the
    SVD, which is more accurate than the square root of T*T on small
    singular values; the partial isometry vanishes on the numerical kernel
    (singular values at most ``psd_tol * ||T||``).
    """
    t = as_matrix(t, square=True)
    u, s, vh = np.linalg.svd(t)
    modulus = hermitian_part((vh.conj().T * s) @ vh)
    keep = s > tol.psd_tol * (s[0] if s.size else 0.0)
    w = (u[:, keep]) @ vh[keep, :]
    return modulus, w


def range_split(b, tol: ToleranceProfile = DEFAULT_TOL):
    """Orthonormal bases of range(B) and null(B) for PSD B.

    Rank rule: eigenvalues above ``psd_tol * ||B||`` span the range.
    Returns ``(range_basis, kernel_basis, range_eigenvalues)``.
    """
    w, v, scale = _checked_psd_eig(b, tol)
    keep = w > tol.psd_tol * scale
    return v[:, keep], v[:, ~keep], w[keep]


def range_projection(b, tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
    r, _, _ = range_split(b, tol)
    return r @ r.conj().T


def pinv_sqrt(b, tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
    """Moore-Penrose inverse of B**(1/2): zero on null(B)."""
    r, _, w = range_split(b, tol)
    return hermitian_part((r * w**-0.5) @ r.conj().T)


def is_normal(t, tol: ToleranceProfile = DEFAULT_TOL) -> bool:
    t = as_matrix(t, square=True)
    scale = norm(t) ** 2
    return norm(gram(t) - cogram(t)) <= tol.eq_rtol * scale + tol.eq_atol * (scale == 0)


def matrix_power(t: np.ndarray, k: int) -> np.ndarray:
    return np.linalg.matrix_power(t, k)


def direct_sum(*blocks) -> np.ndarray:
    """Block-diagonal matrix; ``None`` blocks are skipped."""
    mats = [as_matrix(b) for b in blocks if b is not None]
    rows = sum(m.shape[0] for m in mats)
    cols = sum(m.shape[1] for m in mats)
    out = np.zeros((rows, cols), dtype=complex)
    i = j = 0
    for m in mats:
        out[i : i + m.shape[0], j : j + m.shape[1]] = m
        i += m.shape[0]
        j += m.shape[1]
    return out
