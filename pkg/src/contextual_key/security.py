"""Analytic security bounds: row-probability cap, entropy bounds, key rate, threshold.

All entropies are in bits.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

# reference quantum bound on gamma used by the security analysis
REFERENCE_GAMMA0 = 5.6364
NOISY_SLOPE = 4.5  # q_i <= x + 4.5 eps
LOG2_3 = float(np.log2(3.0))

_DELTA_GRID = np.logspace(-6, 0, 2000)
_GOLDEN = (np.sqrt(5) - 1) / 2


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    return float(-p * np.log2(p) - (1 - p) * np.log2(1 - p))


def shannon_entropy(dist) -> float:
    p = np.asarray(dist, dtype=float)
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def row_cap(gamma0: float) -> float:
    """Noiseless cap x = (gamma0 - 2) / 4 on every row-outcome probability."""
    return (gamma0 - 2.0) / 4.0


def row_prob_bound(gamma0: float, eps: float) -> float:
    if not 4.0 <= gamma0 <= 6.0:
        raise ValueError("gamma0 must lie in [4, 6]")
    if eps < 0:
        raise ValueError("eps must be non-negative")
    return min(row_cap(gamma0) + NOISY_SLOPE * eps, 1.0)


def min_row_entropy(x: float) -> float:
    """Smallest entropy of a 4-outcome distribution with every entry <= x.

    For x in [1/2, 1] the minimiser is (x, 1 - x, 0, 0).
    """
    if not 0.5 <= x <= 1.0:
        raise ValueError("x must lie in [1/2, 1]")
    return binary_entropy(x)


@dataclass
class SecurityBounds:
    gamma0: float
    epsilon: float = 0.0

    @property
    def x(self) -> float:
        return row_prob_bound(self.gamma0, self.epsilon)

    @property
    def epsilon_tilde(self) -> float:
        return 1.5 * self.epsilon


def _hbe_term(delta: float, eps: float, x0: float) -> float:
    return (1 - eps / delta) * binary_entropy(min(x0 + NOISY_SLOPE * delta, 1.0))


def _hbe_grid(eps: float, x0: float) -> np.ndarray:
    q = np.minimum(x0 + NOISY_SLOPE * _DELTA_GRID, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -q * np.log2(q) - (1 - q) * np.log2(1 - q)
    h = np.where((q <= 0) | (q >= 1), 0.0, h)
    return (1 - eps / _DELTA_GRID) * h


def hbe_lower(eps: float, x0: float, delta: float | None = None) -> tuple[float, float]:
    """Lower bound on H(B|E): sup over delta of (1 - eps/delta) h(x0 + 4.5 delta).

    Returns ``(value, delta_star)``. A fixed ``delta`` skips the optimisation.
    The value is clamped at 0.
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    if not 0.5 <= x0 <= 1.0:
        raise ValueError("x0 must lie in [1/2, 1]")
    if delta is not None:
        if delta <= 0:
            raise ValueError("delta must be positive")
        return max(0.0, _hbe_term(delta, eps, x0)), float(delta)
    if eps == 0.0:
        # the supremum is the delta -> 0 limit since h decreases above 1/2
        return binary_entropy(x0), 0.0

    vals = _hbe_grid(eps, x0)
    k = int(np.argmax(vals))
    if vals[k] <= 0:
        return 0.0, float(_DELTA_GRID[k])
    lo = _DELTA_GRID[max(k - 1, 0)]
    hi = _DELTA_GRID[min(k + 1, len(_DELTA_GRID) - 1)]
    # golden-section refinement on the bracketing grid cell
    c = hi - _GOLDEN * (hi - lo)
    d = lo + _GOLDEN * (hi - lo)
    fc, fd = _hbe_term(c, eps, x0), _hbe_term(d, eps, x0)
    for _ in range(80):
        if fc > fd:
            hi, d, fd = d, c, fc
            c = hi - _GOLDEN * (hi - lo)
            fc = _hbe_term(c, eps, x0)
        else:
            lo, c, fc = c, d, fd
            d = lo + _GOLDEN * (hi - lo)
            fd = _hbe_term(d, eps, x0)
    best = max((vals[k], _DELTA_GRID[k]), (fc, c), (fd, d))
    return max(0.0, float(best[0])), float(best[1])


def hba_upper(eps: float) -> float:
    """Fano bound on H(B|A) with row disagreement 1.5 eps and |B| = 4."""
    if not 0.0 <= eps <= 2.0 / 3.0 + 1e-15:
        raise ValueError("eps must lie in [0, 2/3]")
    et = min(1.5 * eps, 1.0)
    return binary_entropy(et) + et * LOG2_3


@dataclass
class KeyRateReport:
    epsilon: float
    hbe_lower: float
    hba_upper: float
    key_rate: float
    delta_star: float
    gamma0: float

    def to_json(self) -> dict:
        d = asdict(self)
        return {
            "epsilon": d["epsilon"],
            "hbe": d["hbe_lower"],
            "hba": d["hba_upper"],
            "K": d["key_rate"],
            "delta_star": d["delta_star"],
            "gamma0": d["gamma0"],
        }


def key_rate(eps: float, gamma0: float = REFERENCE_GAMMA0, delta_ratio: float | None = None) -> KeyRateReport:
    """Csiszar-Korner rate H(B|E) - H(B|A) under the noisy bounds.

    ``delta_ratio`` fixes delta = ratio * eps instead of optimising it.
    """
    if not 4.0 <= gamma0 <= 6.0:
        raise ValueError("gamma0 must lie in [4, 6]")
    x0 = row_cap(gamma0)
    delta = None
    if delta_ratio is not None and eps > 0:
        delta = delta_ratio * eps
    hbe, dstar = hbe_lower(eps, x0, delta)
    hba = hba_upper(eps)
    return KeyRateReport(eps, hbe, hba, hbe - hba, dstar, gamma0)


def threshold(gamma0: float = REFERENCE_GAMMA0, delta_ratio: float | None = None, tol: float = 1e-6) -> float:
    """Largest eps with a non-negative key rate, by bisection."""
    lo, hi = 0.0, 2.0 / 3.0
    if key_rate(lo, gamma0, delta_ratio).key_rate < 0:
        return 0.0
    if key_rate(hi, gamma0, delta_ratio).key_rate >= 0:
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if key_rate(mid, gamma0, delta_ratio).key_rate >= 0:
            lo = mid
        else:
            hi = mid
    return lo
