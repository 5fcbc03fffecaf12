"""Membership tests for the classical classes of non-normal operators.

Every test is run on ``T / ||T||``: all defining relations are homogeneous,
so verdicts do not depend on scale. Residuals are therefore relative.

Equality classes (normal, quasinormal) use ``eq_rtol``; order-type classes
(hyponormal, p-hyponormal, log-hyponormal, class A, paranormal) measure the
most negative eigenvalue of the relevant difference and use ``psd_tol``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import KmaxTooSmall
from .measures import pov_integral, spectral_measure
from .numkernel import (
    DEFAULT_TOL,
    ToleranceProfile,
    as_matrix,
    cogram,
    gram,
    hermitian_part,
    loewner_margin,
    matrix_log,
    norm,
    psd_power,
)

DEFAULT_P_LIST = (0.25, 0.5, 1.0)
PARANORMAL_GRID_POINTS = 20


def band(residual: float, threshold: float) -> str:
    """Hysteresis classification: 'holds', 'fails' or 'edge'.

    A relation clearly holds below threshold/10 and clearly fails above
    10*threshold; anything between is too close to call.
    """
    if residual <= threshold / 10:
        return "holds"
    if residual > threshold * 10:
        return "fails"
    return "edge"


def normalized(t) -> np.ndarray:
    t = as_matrix(t, square=True)
    s = norm(t)
    return t / s if s > 0 else t


def _deficit(x, y) -> float:
    """How far X <= Y is from holding (0 when it holds)."""
    return max(0.0, -loewner_margin(x, y))


def star_power_gram(t: np.ndarray, k: int) -> np.ndarray:
    """T*^k T^k."""
    return gram(np.linalg.matrix_power(t, k))


def power_cogram(t: np.ndarray, k: int) -> np.ndarray:
    """T^k T*^k."""
    return cogram(np.linalg.matrix_power(t, k))


def normal_residual(t) -> float:
    u = normalized(t)
    return norm(gram(u) - cogram(u))


def quasinormal_residual(t) -> float:
    u = normalized(t)
    g = gram(u)
    return norm(u @ g - g @ u)


def hyponormal_residual(t) -> float:
    u = normalized(t)
    return _deficit(cogram(u), gram(u))


def p_hyponormal_residual(t, p: float, tol: ToleranceProfile = DEFAULT_TOL) -> float:
    u = normalized(t)
    return _deficit(psd_power(cogram(u), p, tol), psd_power(gram(u), p, tol))


def is_invertible(t, tol: ToleranceProfile = DEFAULT_TOL) -> bool:
    t = as_matrix(t, square=True)
    s = np.linalg.svd(t, compute_uv=False)
    return bool(s[-1] > tol.psd_tol * s[0])


def log_hyponormal_residual(t, tol: ToleranceProfile = DEFAULT_TOL) -> float | None:
    """None when T is (numerically) singular: the class requires invertibility."""
    if not is_invertible(t, tol):
        return None
    u = normalized(t)
    return _deficit(matrix_log(cogram(u), tol), matrix_log(gram(u), tol))


def class_a_residual(t, tol: ToleranceProfile = DEFAULT_TOL) -> float:
    u = normalized(t)
    return _deficit(gram(u), psd_power(star_power_gram(u, 2), 0.5, tol))


def paranormal_residual(t, tol: ToleranceProfile = DEFAULT_TOL) -> float:
    """Worst PSD deficit of T*^2T^2 - 2 lam T*T + lam^2 I over the lambda grid.

    The grid is the spectrum of T*T plus log-spaced points on
    [psd_tol, ||T||^2]; the worst grid point is then refined by a bounded
    scalar search between its neighbours.
    """
    from scipy.optimize import minimize_scalar

    u = normalized(t)
    g = gram(u)
    g2 = star_power_gram(u, 2)
    eye = np.eye(u.shape[0])
    if norm(u) == 0:
        return 0.0
    grid = np.concatenate([
        np.linalg.eigvalsh(g),
        np.logspace(np.log10(max(tol.psd_tol, 1e-300)), 0.0, PARANORMAL_GRID_POINTS),
    ])
    grid = np.unique(np.clip(grid, 0.0, None))

    def lowest(lam):
        q = g2 - 2 * lam * g + lam * lam * eye
        return np.linalg.eigvalsh(hermitian_part(q))[0]

    stack = g2[None] - 2 * grid[:, None, None] * g[None] + (grid**2)[:, None, None] * eye[None]
    lows = np.linalg.eigvalsh(stack)[:, 0]
    i = int(np.argmin(lows))
    worst = float(lows[i])
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    if hi > lo:
        res = minimize_scalar(lowest, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        worst = min(worst, float(res.fun))
    return max(0.0, -worst)


def is_paranormal(t, tol: ToleranceProfile = DEFAULT_TOL) -> bool:
    """||Th||^2 <= ||T^2 h|| ||h|| for all h, via the quadratic family in lambda."""
    return paranormal_residual(t, tol) <= tol.psd_tol


@dataclass
class ClassReport:
    """Per-class verdicts for one operator.

    ``verdicts[name]`` is None only for log_hyponormal on a singular input.
    """

    verdicts: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)

    def band(self, name: str) -> str | None:
        r = self.residuals.get(name)
        if r is None:
            return None
        return band(r, self.thresholds[name])

    def to_json(self) -> dict:
        return {"verdicts": dict(self.verdicts), "residuals": dict(self.residuals)}


def p_key(p: float) -> str:
    return f"p_hyponormal({p:g})"


def classify(t, p_list: Sequence[float] = DEFAULT_P_LIST, tol: ToleranceProfile = DEFAULT_TOL) -> ClassReport:
    t = as_matrix(t, square=True)
    rep = ClassReport()

    def put(name, residual, threshold):
        rep.residuals[name] = residual
        rep.thresholds[name] = threshold
        rep.verdicts[name] = None if residual is None else bool(residual <= threshold)

    put("normal", normal_residual(t), tol.eq_rtol)
    put("quasinormal", quasinormal_residual(t), tol.eq_rtol)
    put("hyponormal", hyponormal_residual(t), tol.psd_tol)
    for p in p_list:
        put(p_key(p), p_hyponormal_residual(t, p, tol), tol.psd_tol)
    put("log_hyponormal", log_hyponormal_residual(t, tol), tol.psd_tol)
    put("class_a", class_a_residual(t, tol), tol.psd_tol)
    put("paranormal", paranormal_residual(t, tol), tol.psd_tol)
    return rep


# Class inclusions, as (smaller class, larger class).
INCLUSIONS = (
    ("normal", "quasinormal"),
    ("quasinormal", "hyponormal"),
    ("hyponormal", "class_a"),
    ("class_a", "paranormal"),
    ("log_hyponormal", "class_a"),
)


def inclusion_pairs(report: ClassReport):
    pairs = list(INCLUSIONS)
    pairs += [(name, "class_a") for name in report.verdicts if name.startswith("p_hyponormal(")]
    return pairs


# Embry and Yamazaki -------------------------------------------------------


@dataclass
class EmbryReport:
    kmax: int
    identity_set: frozenset
    root_set: frozenset
    spectral_ok: bool
    tail_ok: bool
    identity_residuals: dict
    root_residuals: dict

    def to_json(self) -> dict:
        return {
            "kmax": self.kmax,
            "identity_set": sorted(self.identity_set),
            "root_set": sorted(self.root_set),
            "spectral_ok": self.spectral_ok,
            "tail_ok": self.tail_ok,
            "identity_residuals": {str(k): v for k, v in sorted(self.identity_residuals.items())},
            "root_residuals": {str(k): v for k, v in sorted(self.root_residuals.items())},
        }


def embry_residuals(t, kmax: int) -> dict:
    """k -> ||T*^kT^k - (T*T)^k|| / ||T||^{2k} for k = 2..kmax."""
    u = normalized(t)
    g = gram(u)
    return {k: norm(star_power_gram(u, k) - np.linalg.matrix_power(g, k)) for k in range(2, kmax + 1)}


def embry_battery(t, kmax: int = 5, tol: ToleranceProfile = DEFAULT_TOL) -> EmbryReport:
    t = as_matrix(t, square=True)
    if kmax < 2:
        raise KmaxTooSmall("kmax must be at least 2")
    u = normalized(t)
    g = gram(u)
    identity = embry_residuals(u, kmax)
    roots = {k: norm(psd_power(star_power_gram(u, k), 1.0 / k, tol) - g) for k in range(2, kmax + 1)}
    e = spectral_measure(g, tol)
    spectral_ok = e.is_spectral(tol)
    for k in range(0, kmax + 1):
        moment = pov_integral(e, lambda x, k=k: x**k)
        if norm(star_power_gram(u, k) - moment) > tol.eq_rtol:
            spectral_ok = False
    # ||u|| = 1, so the tail condition is that no atom of E sits above 1.
    tail_ok = bool(e.points.size == 0 or e.points[-1] <= 1.0 + tol.psd_tol)
    return EmbryReport(
        kmax=kmax,
        identity_set=frozenset(k for k, r in identity.items() if r <= tol.eq_rtol),
        root_set=frozenset(k for k, r in roots.items() if r <= tol.eq_rtol),
        spectral_ok=bool(spectral_ok),
        tail_ok=tail_ok,
        identity_residuals=identity,
        root_residuals=roots,
    )


def identity_pattern_scan(t, kmax: int, tol: ToleranceProfile = DEFAULT_TOL) -> frozenset:
    """The set of k in [2, kmax] at which T*^kT^k = (T*T)^k holds."""
    t = as_matrix(t, square=True)
    if kmax < 2:
        return frozenset()
    return frozenset(k for k, r in embry_residuals(t, kmax).items() if r <= tol.eq_rtol)


def embry_chain(t, kmax: int, tol: ToleranceProfile = DEFAULT_TOL, *, dual: bool = False) -> list:
    """[(T*^kT^k)^(1/k) for k = 1..kmax] of the normalised T (or the T^kT*^k chain)."""
    u = normalized(t)
    step = power_cogram if dual else star_power_gram
    return [psd_power(step(u, k), 1.0 / k, tol) for k in range(1, kmax + 1)]


class YamazakiResult(NamedTuple):
    ascending_ok: bool
    descending_ok: bool
    first_failure: int | None
    ascending_deficits: tuple
    descending_deficits: tuple
    ascending_spread: float
    descending_spread: float


def yamazaki_chain(t, kmax: int = 5, tol: ToleranceProfile = DEFAULT_TOL) -> YamazakiResult:
    """Monotonicity of the two Embry chains up to kmax.

    ``*_deficits[k-1]`` measures how far step k -> k+1 is from monotone;
    ``*_spread`` is max_k ||chain_k - chain_1||, zero for a constant chain.
    """
    t = as_matrix(t, square=True)
    if kmax < 2:
        raise KmaxTooSmall("kmax must be at least 2")
    up = embry_chain(t, kmax, tol)
    down = embry_chain(t, kmax, tol, dual=True)
    asc = tuple(_deficit(up[k], up[k + 1]) for k in range(kmax - 1))
    desc = tuple(_deficit(down[k + 1], down[k]) for k in range(kmax - 1))
    failures = [k + 1 for k in range(kmax - 1) if asc[k] > tol.psd_tol or desc[k] > tol.psd_tol]
    return YamazakiResult(
        ascending_ok=all(d <= tol.psd_tol for d in asc),
        descending_ok=all(d <= tol.psd_tol for d in desc),
        first_failure=failures[0] if failures else None,
        ascending_deficits=asc,
        descending_deficits=desc,
        ascending_spread=max(norm(c - up[0]) for c in up),
        descending_spread=max(norm(c - down[0]) for c in down),
    )
