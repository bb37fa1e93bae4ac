"""Exact simulation of the distributed Peres-Mermin box on two entangled qubit pairs.

Qubit order is (A1, A2, B1, B2); the pairs are (A1, B1) and (A2, B2). With
this ordering two Phi+ pairs form one maximally entangled state between
Alice's and Bob's 4-dimensional spaces, so <O_A (x) O_B> = tr(O_A O_B^T) / 4.
Bob therefore measures the entrywise transpose of Alice's observables.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .boxmodel import TRIPLES, BoxFamily

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# row-major Peres-Mermin square of two-qubit Pauli labels
PM_LABELS = (
    ("ZI", "IZ", "ZZ"),
    ("IX", "XI", "XX"),
    ("ZX", "XZ", "YY"),
)

_IMAG_TOL = 1e-12


def observable(label: str) -> np.ndarray:
    if len(label) != 2 or any(c not in PAULI for c in label):
        raise ValueError(f"bad Pauli label {label!r}")
    return np.kron(PAULI[label[0]], PAULI[label[1]])


def pm_array() -> list[list[np.ndarray]]:
    """3x3 nested list of 4x4 observables, indexed [row][column]."""
    return [[observable(l) for l in row] for row in PM_LABELS]


def commute(a: np.ndarray, b: np.ndarray, tol: float = 1e-12) -> bool:
    return np.allclose(a @ b, b @ a, atol=tol)


@dataclass(frozen=True)
class NoiseModel:
    """White noise on the shared state.

    ``kind="global"`` mixes the 16-dimensional two-pair state with the maximally
    mixed state, giving the same disagreement rate (1 - p) / 2 on every array
    entry. ``kind="pair"`` applies an independent Werner map to each pair, so
    single-qubit entries see (1 - p) / 2 and two-qubit entries (1 - p^2) / 2.
    """

    werner_p: float = 1.0
    kind: str = "global"

    def __post_init__(self):
        if not 0.0 <= self.werner_p <= 1.0:
            raise ValueError("werner_p must lie in [0, 1]")
        if self.kind not in ("global", "pair"):
            raise ValueError("kind must be 'global' or 'pair'")

    def eps(self) -> float:
        """Per-entry disagreement for global noise."""
        return (1.0 - self.werner_p) / 2.0

    @classmethod
    def from_eps(cls, eps: float) -> "NoiseModel":
        return cls(1.0 - 2.0 * eps, "global")


def phi_plus() -> np.ndarray:
    v = np.zeros(4, dtype=complex)
    v[0] = v[3] = 1 / np.sqrt(2)
    return np.outer(v, v.conj())


def werner(p: float) -> np.ndarray:
    return p * phi_plus() + (1 - p) * np.eye(4) / 4


def two_pair_state(noise: NoiseModel = NoiseModel()) -> np.ndarray:
    """16x16 density matrix in qubit order (A1, A2, B1, B2)."""
    p = noise.werner_p
    if noise.kind == "global":
        pure = np.kron(phi_plus(), phi_plus())  # order (A1, B1, A2, B2)
        rho = _reorder(pure)
        return p * rho + (1 - p) * np.eye(16) / 16
    return _reorder(np.kron(werner(p), werner(p)))


def _reorder(rho_a1b1a2b2: np.ndarray) -> np.ndarray:
    t = rho_a1b1a2b2.reshape([2] * 8)
    # axes: kets (A1, B1, A2, B2), bras (A1, B1, A2, B2) -> (A1, A2, B1, B2)
    t = t.transpose(0, 2, 1, 3, 4, 6, 5, 7)
    return t.reshape(16, 16)


def triple_projectors(obs: list[np.ndarray]) -> list[np.ndarray]:
    """Projectors onto the joint eigenspaces of three commuting involutions."""
    for i in range(3):
        for j in range(i + 1, 3):
            if not commute(obs[i], obs[j]):
                raise ValueError("observables of a joint measurement must commute")
    eye = np.eye(obs[0].shape[0])
    return [reduce(np.matmul, [(eye + s * o) / 2 for s, o in zip(t, obs)]) for t in TRIPLES]


def _real_probs(values) -> np.ndarray:
    arr = np.asarray(values)
    if np.max(np.abs(arr.imag), initial=0.0) > _IMAG_TOL:
        raise ArithmeticError("probabilities acquired an imaginary part")
    return arr.real


def joint_measurement_distribution(state: np.ndarray, obs: list[np.ndarray]) -> np.ndarray:
    """Distribution over the 8 outcome triples of a local joint measurement."""
    projs = triple_projectors(obs)
    return _clean(_real_probs([np.trace(state @ p) for p in projs]))


def _clean(p: np.ndarray) -> np.ndarray:
    p = np.where(np.abs(p) < 1e-15, 0.0, p)
    return np.clip(p, 0.0, None)


def column(arr, c: int) -> list[np.ndarray]:
    return [arr[r][c] for r in range(3)]


def quantum_pm_box(noise: NoiseModel = NoiseModel()) -> BoxFamily:
    """Alice measures the columns, Bob the transposed rows, on the two-pair state."""
    arr = pm_array()
    rho = two_pair_state(noise)
    alice = [triple_projectors(column(arr, c)) for c in range(3)]
    bob = [triple_projectors([o.T for o in arr[r]]) for r in range(3)]
    tables = np.zeros((3, 3, 8, 8))
    for A in range(3):
        for B in range(3):
            for a, pa in enumerate(alice[A]):
                for b, pb in enumerate(bob[B]):
                    tables[A, B, a, b] = _real_probs(np.trace(rho @ np.kron(pa, pb)))
    tables = _clean(tables)
    return BoxFamily(tables / tables.sum(axis=(2, 3), keepdims=True))


def row_row_table(noise: NoiseModel = NoiseModel(), row: int = 1) -> np.ndarray:
    """8x8 joint table when both parties measure the same row (key rounds)."""
    arr = pm_array()
    rho = two_pair_state(noise)
    alice = triple_projectors([o for o in arr[row - 1]])
    bob = triple_projectors([o.T for o in arr[row - 1]])
    t = np.array([[_real_probs(np.trace(rho @ np.kron(pa, pb))) for pb in bob] for pa in alice])
    t = _clean(t)
    return t / t.sum()


def chsh_value(state: np.ndarray, a0, a1, b0, b1) -> float:
    """<a0 b0> + <a0 b1> + <a1 b0> - <a1 b1> on a two-qubit state."""

    def corr(x, y):
        return float(np.real(np.trace(state @ np.kron(x, y))))

    return corr(a0, b0) + corr(a0, b1) + corr(a1, b0) - corr(a1, b1)


def chsh_demo(state: np.ndarray | None = None) -> float:
    """CHSH value of Phi+ with the standard Tsirelson-optimal settings."""
    state = phi_plus() if state is None else state
    z, x = PAULI["Z"], PAULI["X"]
    b0 = (z + x) / np.sqrt(2)
    b1 = (z - x) / np.sqrt(2)
    return chsh_value(state, z, x, b0, b1)
