"""Eve's ensemble decompositions of a box and a heuristic attack search.

Eve's information about Bob's first row is the weighted entropy of that row
over the members of a decomposition. The search below only ever produces
members supported inside the target's support, so parity constraints carry
over; whether a member is quantum-realizable is not checked, only the
necessary cap ``q_i <= x + 4.5 eps`` is (optionally) enforced.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .boxmodel import BoxError, BoxFamily, ab_error, mix, row_distribution, validate_ks
from .security import REFERENCE_GAMMA0, row_cap, shannon_entropy, NOISY_SLOPE


@dataclass(eq=False)
class Ensemble:
    weights: np.ndarray
    members: list

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if len(self.weights) != len(self.members) or not len(self.members):
            raise BoxError("need one weight per member")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1) > 1e-9:
            raise BoxError("weights must be a probability vector")

    def mixture(self) -> BoxFamily:
        w = self.weights / self.weights.sum()
        return mix(w, self.members)

    def to_json(self) -> dict:
        return {"weights": self.weights.tolist(), "members": [m.to_json() for m in self.members]}

    @classmethod
    def from_json(cls, data: dict) -> "Ensemble":
        return cls(data["weights"], [BoxFamily.from_json(m) for m in data["members"]])


@dataclass
class AttackReport:
    avg_row_entropy: float
    per_member_eps: list
    markov_mass_below_delta: float
    row_distributions: list = field(default_factory=list)
    cap_violations: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "avg_row_entropy": self.avg_row_entropy,
            "per_member_eps": list(map(float, self.per_member_eps)),
            "markov_mass_below_delta": self.markov_mass_below_delta,
            "row_distributions": [list(map(float, r)) for r in self.row_distributions],
            "cap_violations": list(map(bool, self.cap_violations)),
        }


def verify_decomposition(ens: Ensemble, target: BoxFamily, tol: float = 1e-8) -> bool:
    if any(m.tables.shape != target.tables.shape for m in ens.members):
        raise BoxError("member shape mismatch")
    mixed = np.tensordot(ens.weights, np.stack([m.tables for m in ens.members]), axes=1)
    if np.max(np.abs(mixed - target.tables)) > tol:
        return False
    for w, m in zip(ens.weights, ens.members):
        if w <= 0:
            continue
        if m.normalization_error() > tol or validate_ks(m, tol).ks_violation > tol:
            return False
    return True


def member_cap(eps: float, gamma0: float = REFERENCE_GAMMA0) -> float:
    return min(row_cap(gamma0) + NOISY_SLOPE * eps, 1.0)


def markov_tail(weights: Sequence[float], eps_list: Sequence[float], delta: float) -> float:
    """Weight of members with error below ``delta``; at least 1 - eps/delta."""
    w = np.asarray(weights, float)
    e = np.asarray(eps_list, float)
    mass = float(w[e < delta].sum())
    eps = float(w @ e)
    assert mass >= 1 - eps / delta - 1e-12, "Markov bound violated"
    return mass


def eve_entropy(ens: Ensemble, delta: float | None = None, gamma0: float = REFERENCE_GAMMA0) -> AttackReport:
    """Eve-conditioned entropy of Bob's first row for one decomposition."""
    rows = [row_distribution(m, 1) for m in ens.members]
    ents = np.array([shannon_entropy(r) for r in rows])
    eps = np.array([ab_error(m).mean() for m in ens.members])
    if delta is None:
        delta = max(2 * float(ens.weights @ eps), 1e-12)
    caps = [r.max() > member_cap(e, gamma0) + 1e-12 for r, e in zip(rows, eps)]
    return AttackReport(
        avg_row_entropy=float(ens.weights @ ents),
        per_member_eps=eps.tolist(),
        markov_mass_below_delta=markov_tail(ens.weights, eps, delta),
        row_distributions=rows,
        cap_violations=caps,
    )


class _Search:
    """Local search for one restart over Bob's row-1 marginals per member.

    ``r[e, A-1, b]`` is member e's weight times its probability of Bob
    outcome b in context (A, 1). Per context the sums over e reproduce the
    target's marginal and the sums over b are the member weights; every move
    preserves both. Alice's outcomes are split as in the target given b, and
    the remaining six contexts are shared proportionally, so members stay on
    the target's support.
    """

    def __init__(self, target, k, rng, cap_gamma0):
        self.t = target.tables
        self.k = k
        self.rng = rng
        self.cap_gamma0 = cap_gamma0
        self.m = self.t[:, 0].sum(axis=1)  # (3, 8) Bob marginals in contexts (A, 1)
        self.support = [np.flatnonzero(self.m[A] > 0) for A in range(3)]
        # disagreement probability given Bob's outcome, and from the other contexts
        eps_cells = np.stack([~_agree_flat(3 * A) for A in range(3)]).reshape(3, 8, 8)
        with np.errstate(invalid="ignore", divide="ignore"):
            self.d = np.where(self.m > 0, (self.t[:, 0] * eps_cells).sum(axis=1) / self.m, 0.0)
        self.eps_rest = float(sum(ab_error(target)[A, B] for A in range(3) for B in (1, 2)))
        w = rng.dirichlet(np.ones(k))
        self.r = w[:, None, None] * self.m[None]

    def weights(self, r=None):
        r = self.r if r is None else r
        return r[:, 0].sum(axis=1)

    def score(self, r=None):
        r = self.r if r is None else r
        w = self.weights(r)
        total = 0.0
        for e in range(self.k):
            if w[e] <= 1e-15:
                continue
            row = r[e].mean(axis=0) / w[e]
            if self.cap_gamma0 is not None:
                eps_e = ((r[e] * self.d).sum() / w[e] + self.eps_rest) / 9
                if row.max() > member_cap(eps_e, self.cap_gamma0) + 1e-12:
                    return np.inf
            total += w[e] * shannon_entropy(row)
        return total

    def propose(self):
        rng = self.rng
        if self.k < 2:
            return None
        new = self.r.copy()
        e1, e2 = rng.choice(self.k, 2, replace=False)
        if rng.random() < 0.15:
            # move a fraction of one member into another
            frac = rng.random()
            moved = new[e2] * frac
            new[e1] += moved
            new[e2] -= moved
            return new
        # one context, or the same cycle in all three (row entropy averages them)
        ctxs = [int(rng.integers(3))] if rng.random() < 0.5 else [0, 1, 2]
        sup = self.support[ctxs[0]]
        if len(sup) < 2:
            return None
        b1, b2 = rng.choice(sup, 2, replace=False)
        full = rng.random() < 0.5
        frac = rng.random()
        for A in ctxs:
            room = min(new[e1, A, b2], new[e2, A, b1])
            # entropy is concave, so pushing the whole room (towards a vertex) often pays
            t = room if full else room * frac
            new[e1, A, b1] += t
            new[e1, A, b2] -= t
            new[e2, A, b2] += t
            new[e2, A, b1] -= t
        np.clip(new, 0.0, None, out=new)
        return new

    def run(self, steps):
        best = self.score()
        for _ in range(steps):
            cand = self.propose()
            if cand is None:
                continue
            s = self.score(cand)
            if s <= best:
                self.r, best = cand, s
        return best

    def ensemble(self):
        w = self.weights()
        with np.errstate(invalid="ignore", divide="ignore"):
            cond = np.where(self.m[:, None, :] > 0, self.t[:, 0] / self.m[:, None, :], 0.0)  # P(a | b, A)
        members, keep = [], []
        for e in range(self.k):
            if w[e] <= 1e-12:
                continue
            tables = self.t.copy()
            tables[:, 0] = cond * (self.r[e] / w[e])[:, None, :]
            members.append(BoxFamily(tables / tables.sum(axis=(2, 3), keepdims=True)))
            keep.append(w[e])
        keep = np.array(keep)
        return Ensemble(keep / keep.sum(), members)


def _agree_flat(ctx: int) -> np.ndarray:
    from .boxmodel import agree_mask

    A, B = divmod(ctx, 3)
    return agree_mask(A + 1, B + 1).ravel()


def attack_search(
    target: BoxFamily,
    members: int = 2,
    restarts: int = 10,
    seed: int = 0,
    steps: int = 1000,
    cap_gamma0: float | None = REFERENCE_GAMMA0,
) -> Ensemble:
    """Heuristic search for a low-entropy decomposition of ``target``.

    Each restart has its own RNG stream derived from ``(seed, restart)``; the
    best restart wins, ties going to the lower index. ``cap_gamma0=None``
    drops the quantum cap and searches over all parity-valid members.
    """
    if members < 1:
        raise ValueError("members must be >= 1")
    target.check_normalized()
    best_score, best_ens = np.inf, None
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        search = _Search(target, members, rng, cap_gamma0)
        score = search.run(steps)
        if score < best_score:
            best_score, best_ens = score, search.ensemble()
    if best_ens is None:
        best_ens = Ensemble([1.0], [target])
    return best_ens
