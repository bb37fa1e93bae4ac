"""Monte-Carlo run of the key-distribution protocol on simulated boxes.

Rounds are split into a first test sample (random column and row), a second
test sample (both parties measure the first row) and key rounds (first row
again). Each 4-outcome row result is encoded as two raw-key bits.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .boxmodel import EVEN_TRIPLES, TRIPLES, TRIPLE_INDEX
from .quantumsim import NoiseModel, quantum_pm_box, row_row_table
from .security import REFERENCE_GAMMA0, key_rate

TEST1, TEST2, KEY = "test1", "test2", "key"
CSV_COLUMNS = ("round", "sample", "A", "B", "a1", "a2", "a3", "b1", "b2", "b3")
LOW_CONFIDENCE_ROUNDS = 30

# even triple index (in TRIPLES order) -> two key bits: +++ 00, +-- 01, -+- 10, --+ 11
_EVEN_CODE = {TRIPLE_INDEX[t]: divmod(i, 2) for i, t in enumerate(EVEN_TRIPLES)}


@dataclass
class ProtocolConfig:
    n: int = 10_000
    test_fraction1: float = 0.25
    test_fraction2: float = 0.25
    noise: NoiseModel = field(default_factory=NoiseModel)
    abort_eps: float = 0.0068
    seed: int = 0
    gamma0: float = REFERENCE_GAMMA0

    def __post_init__(self):
        if self.n < 100:
            raise ValueError("n must be at least 100")
        for f in (self.test_fraction1, self.test_fraction2):
            if not 0.0 < f < 1.0:
                raise ValueError("test fractions must lie in (0, 1)")
        if self.test_fraction1 + self.test_fraction2 >= 1.0:
            raise ValueError("test fractions must sum to less than 1")
        if self.abort_eps < 0:
            raise ValueError("abort_eps must be non-negative")


@dataclass
class ErrorEstimate:
    eps_hat: np.ndarray  # 3x3, [A-1, B-1]
    eps_tilde_hat: float
    eps_from_tilde: float
    counts: np.ndarray
    row_rounds: int
    low_confidence: bool
    empty: bool

    @property
    def mean_eps(self) -> float:
        return float(self.eps_hat.mean())


@dataclass
class ProtocolTranscript:
    sample: np.ndarray  # tag per round
    A: np.ndarray  # Alice column, 0 on row rounds
    B: np.ndarray  # Bob row
    alice: np.ndarray  # (n, 3) outcomes
    bob: np.ndarray
    estimate: ErrorEstimate | None = None
    aborted: bool = False
    alice_key: np.ndarray = field(default_factory=lambda: np.zeros(0, np.uint8))
    bob_key: np.ndarray = field(default_factory=lambda: np.zeros(0, np.uint8))

    @property
    def n(self) -> int:
        return len(self.sample)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for i in range(self.n):
            w.writerow([i, self.sample[i], int(self.A[i]), int(self.B[i]), *map(int, self.alice[i]), *map(int, self.bob[i])])
        return buf.getvalue()


@dataclass
class ProtocolResult:
    transcript: ProtocolTranscript
    key_rate_estimate: float
    qber_raw: float

    def summary(self) -> dict:
        est = self.transcript.estimate
        return {
            "n": self.transcript.n,
            "aborted": self.transcript.aborted,
            "eps_hat": est.eps_hat.tolist(),
            "mean_eps_hat": est.mean_eps,
            "eps_tilde_hat": est.eps_tilde_hat,
            "eps_from_tilde": est.eps_from_tilde,
            "low_confidence": est.low_confidence,
            "raw_key_bits": int(len(self.transcript.alice_key)),
            "qber_raw": self.qber_raw,
            "key_rate_estimate": self.key_rate_estimate,
        }


def _sample_cells(rng, table: np.ndarray, size: int) -> tuple[np.ndarray, np.ndarray]:
    p = table.ravel()
    idx = rng.choice(p.size, size=size, p=p / p.sum())
    return np.divmod(idx, table.shape[1])


def estimate_eps(tr: ProtocolTranscript) -> ErrorEstimate:
    """Disagreement rates on the shared observables and on the row rounds."""
    counts = np.zeros((3, 3), int)
    errors = np.zeros((3, 3), int)
    t1 = np.flatnonzero(tr.sample == TEST1)
    for i in t1:
        A, B = tr.A[i], tr.B[i]
        counts[A - 1, B - 1] += 1
        errors[A - 1, B - 1] += tr.alice[i, B - 1] != tr.bob[i, A - 1]
    eps_hat = np.divide(errors, counts, out=np.zeros((3, 3)), where=counts > 0)
    t2 = np.flatnonzero(tr.sample == TEST2)
    if len(t2):
        eps_tilde = float(np.mean(np.any(tr.alice[t2] != tr.bob[t2], axis=1)))
    else:
        eps_tilde = 0.0
    empty = counts.sum() == 0 or len(t2) == 0
    low = bool(empty or counts.min() < LOW_CONFIDENCE_ROUNDS or len(t2) < LOW_CONFIDENCE_ROUNDS)
    return ErrorEstimate(eps_hat, eps_tilde, 2.0 / 3.0 * eps_tilde, counts, len(t2), low, bool(empty))


def _encode(triples: np.ndarray) -> np.ndarray:
    bits = []
    for t in triples:
        bits.extend(_EVEN_CODE[TRIPLE_INDEX[tuple(int(v) for v in t)]])
    return np.array(bits, dtype=np.uint8)


def run(cfg: ProtocolConfig) -> ProtocolResult:
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n
    n1 = int(round(cfg.test_fraction1 * n))
    n2 = int(round(cfg.test_fraction2 * n))
    tags = np.array([TEST1] * n1 + [TEST2] * n2 + [KEY] * (n - n1 - n2), dtype=object)
    tags = tags[rng.permutation(n)]

    signs = np.array(TRIPLES)
    A = np.zeros(n, int)
    B = np.ones(n, int)
    alice = np.zeros((n, 3), int)
    bob = np.zeros((n, 3), int)

    t1 = np.flatnonzero(tags == TEST1)
    box = quantum_pm_box(cfg.noise)
    A[t1] = rng.integers(1, 4, len(t1))
    B[t1] = rng.integers(1, 4, len(t1))
    for ctx in range(9):
        sel = t1[(A[t1] - 1) * 3 + (B[t1] - 1) == ctx]
        if len(sel):
            ia, ib = _sample_cells(rng, box.table(ctx // 3 + 1, ctx % 3 + 1), len(sel))
            alice[sel], bob[sel] = signs[ia], signs[ib]

    rows = np.flatnonzero(tags != TEST1)
    ia, ib = _sample_cells(rng, row_row_table(cfg.noise, 1), len(rows))
    alice[rows], bob[rows] = signs[ia], signs[ib]

    tr = ProtocolTranscript(tags, A, B, alice, bob)
    tr.estimate = estimate_eps(tr)
    tr.aborted = bool(tr.estimate.eps_hat.max() > cfg.abort_eps)
    keys = np.flatnonzero(tags == KEY)
    tr.alice_key = _encode(alice[keys])
    tr.bob_key = _encode(bob[keys])
    qber = float(np.mean(tr.alice_key != tr.bob_key)) if len(keys) else 0.0
    eps = min(tr.estimate.mean_eps, 2.0 / 3.0)
    rate = key_rate(eps, cfg.gamma0).key_rate
    return ProtocolResult(tr, rate, qber)


def load_csv(text: str) -> ProtocolTranscript:
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows or tuple(rows[0].keys()) != CSV_COLUMNS:
        raise ValueError("not a protocol transcript")
    tags = np.array([r["sample"] for r in rows], dtype=object)
    col = lambda k: np.array([int(r[k]) for r in rows])  # noqa: E731
    tr = ProtocolTranscript(
        tags, col("A"), col("B"),
        np.stack([col(k) for k in ("a1", "a2", "a3")], 1),
        np.stack([col(k) for k in ("b1", "b2", "b3")], 1),
    )
    tr.estimate = estimate_eps(tr)
    return tr
