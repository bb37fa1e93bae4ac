"""The six-term Bell functional gamma, its probability form beta, and CHSH."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np


@dataclass
class BellFunctional:
    """Sum of +-1 weighted two-party correlators.

    ``terms`` holds (Alice observable, Bob observable, coefficient) triples;
    the bounds are filled in as they get computed.
    """

    name: str
    terms: tuple[tuple[str, str, float], ...]
    bound_classical: float | None = None
    bound_quantum: float | None = None
    bound_algebraic: float | None = None
    notes: dict = field(default_factory=dict)

    def evaluate(self, correlators: dict) -> float:
        return float(sum(c * correlators[(a, b)] for a, b, c in self.terms))


GAMMA = BellFunctional(
    "gamma",
    (
        ("A1", "B1", 1.0),
        ("A2", "B2", 1.0),
        ("A3", "B3", 1.0),
        ("A1", "B1'", 1.0),
        ("A2", "B2'", 1.0),
        ("A3", "B3'", -1.0),
    ),
    bound_classical=4.0,
    bound_algebraic=6.0,
)

CHSH = BellFunctional(
    "chsh",
    (("A1", "B1", 1.0), ("A1", "B2", 1.0), ("A2", "B1", 1.0), ("A2", "B2", -1.0)),
    bound_classical=2.0,
    bound_quantum=2 * np.sqrt(2),
    bound_algebraic=4.0,
)


def _as_table(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if t.shape != (3, 2):
        raise ValueError(f"correlator table must be 3x2 (A_i against B_i, B_i'), got {t.shape}")
    if np.any(np.abs(t) > 1 + 1e-12):
        raise ValueError("correlators must lie in [-1, 1]")
    return t


def gamma(t) -> float:
    """gamma from a 3x2 table: column 0 holds <A_i B_i>, column 1 holds <A_i B_i'>."""
    t = _as_table(t)
    return float(t[:, 0].sum() + t[0, 1] + t[1, 1] - t[2, 1])


def beta(p) -> float:
    """Probability form.

    ``p`` = (p(A1=B1), p(A2=B2), p(A3=B3), p(A1=B1'), p(A2=B2'), p(A3!=B3')).
    """
    p = np.asarray(p, dtype=float)
    if p.shape != (6,):
        raise ValueError("beta takes six probabilities")
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("probabilities must lie in [0, 1]")
    return float(p.sum())


def beta_probabilities(t) -> np.ndarray:
    """The six probabilities of ``beta`` implied by a correlator table."""
    t = _as_table(t)
    eq = (1 + t) / 2
    return np.array([eq[0, 0], eq[1, 0], eq[2, 0], eq[0, 1], eq[1, 1], 1 - eq[2, 1]])


def beta_from_gamma(g: float) -> float:
    if not -6 - 1e-12 <= g <= 6 + 1e-12:
        raise ValueError("gamma lies in [-6, 6]")
    return (g + 6) / 2


def chsh(c_ab: float, c_ab2: float, c_a2b: float, c_a2b2: float) -> float:
    vals = np.array([c_ab, c_ab2, c_a2b, c_a2b2], dtype=float)
    if np.any(np.abs(vals) > 1 + 1e-12):
        raise ValueError("correlators must lie in [-1, 1]")
    return float(abs(c_ab + c_ab2 + c_a2b - c_a2b2))


def deterministic_table(a, b, b_primed) -> np.ndarray:
    """Correlator table of a deterministic strategy.

    ``a`` = (A1, A2, A3); ``b`` = (B1, B2) and ``b_primed`` = (B1', B2'), with
    the third Bob value fixed to the product of the first two.
    """
    bu = (b[0], b[1], b[0] * b[1])
    bp = (b_primed[0], b_primed[1], b_primed[0] * b_primed[1])
    return np.array([[a[i] * bu[i], a[i] * bp[i]] for i in range(3)], dtype=float)


def classical_max_gamma(tie_primed: bool = False):
    """Exhaustive maximum over all 2^7 deterministic strategies.

    Returns ``(value, strategy)`` with strategy = (A, B, B'). With
    ``tie_primed`` Bob's primed row copies the unprimed one (2^5 strategies).
    """
    signs = (1, -1)
    best, arg = -np.inf, None
    for a in itertools.product(signs, repeat=3):
        for b in itertools.product(signs, repeat=2):
            primed = [b] if tie_primed else itertools.product(signs, repeat=2)
            for bp in primed:
                v = gamma(deterministic_table(a, b, bp))
                if v > best:
                    best, arg = v, (a, b, tuple(bp))
    return best, arg


def classical_max_chsh():
    vals = [
        a0 * b0 + a0 * b1 + a1 * b0 - a1 * b1
        for a0, a1, b0, b1 in itertools.product((1, -1), repeat=4)
    ]
    return float(max(vals))
