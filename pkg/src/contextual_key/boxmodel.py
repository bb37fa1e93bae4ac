"""Distributed Peres-Mermin boxes.

A box is stored as a dense array ``tables[A-1, B-1, a, b]`` of shape
(3, 3, 8, 8): Alice's column input A, Bob's row input B, and the indices of
Alice's and Bob's outcome triples. Triples are ordered lexicographically with
``+`` before ``-``, i.e. index = 4*[s1 == -1] + 2*[s2 == -1] + [s3 == -1].

Geometry: Alice's triple for column A lists the outcomes of the array entries
(1, A), (2, A), (3, A); Bob's triple for row B lists (B, 1), (B, 2), (B, 3).
The observable shared by context (A, B) is entry (B, A), which is Alice's
B-th outcome and Bob's A-th outcome.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

NORM_TOL = 1e-12

TRIPLES: tuple[tuple[int, int, int], ...] = tuple(itertools.product((1, -1), repeat=3))
TRIPLE_INDEX = {t: i for i, t in enumerate(TRIPLES)}
_SIGNS = np.array(TRIPLES)  # (8, 3)


def parity(t: Sequence[int]) -> int:
    s1, s2, s3 = t
    return s1 * s2 * s3


class ContextKind(Enum):
    EVEN = 1
    ODD = -1


def allowed_outcomes(kind: ContextKind) -> frozenset:
    return frozenset(t for t in TRIPLES if parity(t) == kind.value)


EVEN_TRIPLES = tuple(t for t in TRIPLES if parity(t) == 1)  # +++ +-- -+- --+
ODD_TRIPLES = tuple(t for t in TRIPLES if parity(t) == -1)


def alice_kind(column: int) -> ContextKind:
    return ContextKind.ODD if column == 3 else ContextKind.EVEN


def bob_kind(row: int) -> ContextKind:
    return ContextKind.EVEN


def _mask(kind: ContextKind) -> np.ndarray:
    return _SIGNS.prod(axis=1) == kind.value


def allowed_mask(A: int, B: int) -> np.ndarray:
    """Boolean 8x8 mask of (a, b) cells permitted by the parity constraints."""
    return np.outer(_mask(alice_kind(A)), _mask(bob_kind(B)))


def agree_mask(A: int, B: int) -> np.ndarray:
    """Boolean 8x8 mask of cells where the shared observable agrees."""
    return np.equal.outer(_SIGNS[:, B - 1], _SIGNS[:, A - 1])


class BoxError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BoxFamily:
    tables: np.ndarray

    def __post_init__(self):
        t = np.array(self.tables, dtype=float)
        if t.shape != (3, 3, 8, 8):
            raise BoxError(f"box tables must have shape (3, 3, 8, 8), got {t.shape}")
        if np.any(t < -NORM_TOL):
            raise BoxError("negative probability in box")
        t = np.clip(t, 0.0, None)
        t.setflags(write=False)
        object.__setattr__(self, "tables", t)

    def table(self, A: int, B: int) -> np.ndarray:
        return self.tables[A - 1, B - 1]

    def normalization_error(self) -> float:
        return float(np.max(np.abs(self.tables.sum(axis=(2, 3)) - 1.0)))

    def check_normalized(self, tol: float = NORM_TOL) -> None:
        err = self.normalization_error()
        if err > tol:
            raise BoxError(f"box tables not normalized (max error {err:.3g})")

    def to_json(self) -> dict:
        return {"tables": [[self.tables[A, B].ravel().tolist() for B in range(3)] for A in range(3)]}

    @classmethod
    def from_json(cls, data: dict) -> "BoxFamily":
        arr = np.asarray(data["tables"], dtype=float)
        if arr.shape != (3, 3, 64):
            raise BoxError(f"expected tables of shape [3][3][64], got {list(arr.shape)}")
        return cls(arr.reshape(3, 3, 8, 8))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def load(cls, path: str | Path) -> "BoxFamily":
        return cls.from_json(json.loads(Path(path).read_text()))

    def __eq__(self, other):
        return isinstance(other, BoxFamily) and np.array_equal(self.tables, other.tables)


@dataclass
class ValidationReport:
    ks_violation: float = 0.0
    ns_violation: float = 0.0
    ab_errors: np.ndarray | None = None
    passed: dict | None = None

    @property
    def ok(self) -> bool:
        return all((self.passed or {}).values())


def validate_ks(box: BoxFamily, tol: float = 1e-9) -> ValidationReport:
    """Largest probability mass any context puts outside the parity-allowed cells."""
    box.check_normalized()
    worst = 0.0
    for A in (1, 2, 3):
        for B in (1, 2, 3):
            worst = max(worst, float(box.table(A, B)[~allowed_mask(A, B)].sum()))
    return ValidationReport(ks_violation=worst, passed={"ks": worst <= tol})


def validate_nosignaling(box: BoxFamily, tol: float = 1e-9) -> ValidationReport:
    box.check_normalized()
    alice = box.tables.sum(axis=3)  # (A, B, a)
    bob = box.tables.sum(axis=2)  # (A, B, b)
    v_a = np.max(alice.max(axis=1) - alice.min(axis=1))
    v_b = np.max(bob.max(axis=0) - bob.min(axis=0))
    worst = float(max(v_a, v_b))
    return ValidationReport(ns_violation=worst, passed={"ns": worst <= tol})


def ab_error(box: BoxFamily) -> np.ndarray:
    """eps[A-1, B-1] = probability that the shared observable disagrees."""
    eps = np.empty((3, 3))
    for A in (1, 2, 3):
        for B in (1, 2, 3):
            eps[A - 1, B - 1] = box.table(A, B)[~agree_mask(A, B)].sum()
    return eps


def validate(box: BoxFamily, tol: float = 1e-9, ab_tol: float | None = None) -> ValidationReport:
    """All three defining conditions in one report."""
    ks = validate_ks(box, tol)
    ns = validate_nosignaling(box, tol)
    eps = ab_error(box)
    ab_tol = tol if ab_tol is None else ab_tol
    return ValidationReport(
        ks_violation=ks.ks_violation,
        ns_violation=ns.ns_violation,
        ab_errors=eps,
        passed={"ks": ks.passed["ks"], "ns": ns.passed["ns"], "ab": bool(eps.max() <= ab_tol)},
    )


def mix(weights: Sequence[float], boxes: Sequence[BoxFamily]) -> BoxFamily:
    w = np.asarray(weights, dtype=float)
    if len(w) != len(boxes) or len(w) == 0:
        raise BoxError("need one weight per box")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise BoxError("weights must be a probability vector")
    return BoxFamily(np.tensordot(w, np.stack([b.tables for b in boxes]), axes=1))


def marginal(box: BoxFamily, side: str, input: int, other_input: int) -> np.ndarray:
    """Distribution over the 8 triples of one party for fixed inputs."""
    side = side.lower()
    if side.startswith("a"):
        return box.table(input, other_input).sum(axis=1)
    if side.startswith("b"):
        return box.table(other_input, input).sum(axis=0)
    raise BoxError(f"side must be Alice or Bob, got {side!r}")


def construct_uniform_ideal() -> BoxFamily:
    """Uniform over all parity-allowed pairs that agree on the shared observable."""
    t = np.zeros((3, 3, 8, 8))
    for A in (1, 2, 3):
        for B in (1, 2, 3):
            cells = allowed_mask(A, B) & agree_mask(A, B)
            t[A - 1, B - 1][cells] = 1.0 / cells.sum()
    return BoxFamily(t)


def product_box(alice: np.ndarray, bob: np.ndarray) -> BoxFamily:
    """Box P(a|A) P(b|B) from per-input local distributions of shape (3, 8)."""
    alice = np.asarray(alice, float)
    bob = np.asarray(bob, float)
    return BoxFamily(np.einsum("ia,jb->ijab", alice, bob))


def deterministic_box(a: Sequence[int], b: Sequence[int]) -> BoxFamily:
    """Every context outputs the fixed triples ``a`` and ``b``."""
    t = np.zeros((3, 3, 8, 8))
    t[:, :, TRIPLE_INDEX[tuple(a)], TRIPLE_INDEX[tuple(b)]] = 1.0
    return BoxFamily(t)


def box_from_rows(bob_rows: np.ndarray, eps: float = 0.0) -> BoxFamily:
    """Parity-valid box with prescribed Bob row distributions and disagreement ``eps``.

    ``bob_rows[B-1]`` is a distribution over the 8 triples supported on even
    parity. For each context Alice's shared outcome copies Bob's with
    probability 1 - eps and is flipped otherwise; her two other outcomes are
    uniform subject to her column parity.
    """
    bob_rows = np.asarray(bob_rows, float)
    t = np.zeros((3, 3, 8, 8))
    for A in (1, 2, 3):
        amask = _mask(alice_kind(A))
        for B in (1, 2, 3):
            for bi in range(8):
                pb = bob_rows[B - 1, bi]
                if pb == 0:
                    continue
                shared = _SIGNS[bi, A - 1]
                same = amask & (_SIGNS[:, B - 1] == shared)
                diff = amask & (_SIGNS[:, B - 1] != shared)
                t[A - 1, B - 1, same, bi] = pb * (1 - eps) / same.sum()
                t[A - 1, B - 1, diff, bi] = pb * eps / diff.sum()
    return BoxFamily(t)


def row_distribution(box: BoxFamily, row: int = 1) -> np.ndarray:
    """Bob's distribution on ``row`` averaged over Alice's inputs."""
    return np.mean([marginal(box, "bob", row, A) for A in (1, 2, 3)], axis=0)
