"""Operator-word algebra and moment matrices for the Peres-Mermin Bell functional.

Generators are Hermitian involutions split into commuting parties. Inside a
party, letters are grouped: letters of one group pairwise commute and multiply
like a Klein (or Z2) group, letters of different groups do not commute. For
the PM scenario Alice has three free involutions ``A1 A2 A3`` and Bob has two
Klein groups, ``{B1, B2, B3}`` and ``{B1', B2', B3'}``, with ``B1 B2 = B3``.

Every group element has a unique reduced word, so reduction is a plain
stack-based normal form and needs no Groebner machinery.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .bellfunc import CHSH, GAMMA
from .sdpsolver import SDPProblem, SDPResult, solve

IDENTITY = "I"
_LETTER_RE = re.compile(r"[A-Za-z]+\d*'*")


@dataclass(frozen=True)
class Algebra:
    """Letters grouped as ``parties -> groups -> letters``.

    A group with one letter is Z2, a group with three letters is the Klein
    group with the third letter equal to the product of the first two.
    """

    parties: tuple[tuple[tuple[str, ...], ...], ...]
    _lookup: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        lookup = {}
        for p, groups in enumerate(self.parties):
            for g, letters in enumerate(groups):
                if len(letters) not in (1, 3):
                    raise ValueError(f"group {letters} must have 1 or 3 letters")
                for code, letter in enumerate(letters, start=1):
                    if letter in lookup or letter == IDENTITY:
                        raise ValueError(f"duplicate letter {letter!r}")
                    lookup[letter] = (p, g, code)
        object.__setattr__(self, "_lookup", lookup)

    @property
    def generators(self) -> tuple[str, ...]:
        return tuple(l for groups in self.parties for letters in groups for l in letters)

    def locate(self, letter: str) -> tuple[int, int, int]:
        try:
            return self._lookup[letter]
        except KeyError:
            raise ValueError(f"unknown generator {letter!r}") from None

    def letter(self, party: int, group: int, code: int) -> str:
        return self.parties[party][group][code - 1]


PM_ALGEBRA = Algebra(
    (
        (("A1",), ("A2",), ("A3",)),
        (("B1", "B2", "B3"), ("B1'", "B2'", "B3'")),
    )
)

CHSH_ALGEBRA = Algebra(
    (
        (("A1",), ("A2",)),
        (("B1",), ("B2",)),
    )
)

GAMMA_TERMS = GAMMA.terms
CHSH_TERMS = CHSH.terms


@dataclass(frozen=True, order=True)
class Word:
    """A reduced operator word; the empty word is the identity."""

    letters: tuple[str, ...] = ()
    canonical: bool = field(default=True, compare=False)

    def __str__(self):
        return "".join(self.letters) if self.letters else IDENTITY

    def __len__(self):
        return len(self.letters)

    @classmethod
    def parse(cls, text: str) -> "Word":
        text = text.strip()
        if text in ("", IDENTITY):
            return cls(())
        letters = tuple(_LETTER_RE.findall(text))
        if "".join(letters) != text:
            raise ValueError(f"cannot parse word {text!r}")
        return cls(letters, canonical=False)


def reduce_word(letters: Iterable[str], algebra: Algebra = PM_ALGEBRA) -> Word:
    """Canonical form of a product of generators.

    >>> str(reduce_word(["B1", "B2"]))
    'B3'
    >>> str(reduce_word(["B1", "A1"]))
    'A1B1'
    """
    stacks: list[list[list[int]]] = [[] for _ in algebra.parties]
    for letter in letters:
        if letter == IDENTITY:
            continue
        p, g, code = algebra.locate(letter)
        stack = stacks[p]
        if stack and stack[-1][0] == g:
            merged = stack[-1][1] ^ code
            if merged:
                stack[-1][1] = merged
            else:
                stack.pop()
        else:
            stack.append([g, code])
    out = tuple(algebra.letter(p, g, c) for p, stack in enumerate(stacks) for g, c in stack)
    return Word(out)


def adjoint(word: Word, algebra: Algebra = PM_ALGEBRA) -> Word:
    """Reverse the word inside each party (generators are Hermitian)."""
    per_party: list[list[str]] = [[] for _ in algebra.parties]
    for letter in word.letters:
        per_party[algebra.locate(letter)[0]].append(letter)
    return Word(tuple(l for part in per_party for l in reversed(part)))


def moment_key(u: Word, v: Word, algebra: Algebra = PM_ALGEBRA) -> Word:
    """Class label of the real symmetrized moment <u^dag v>.

    A word and its adjoint carry complex-conjugate moments, which coincide
    once the moment matrix is replaced by its real part.
    """
    w = reduce_word(adjoint(u, algebra).letters + v.letters, algebra)
    return min(w, adjoint(w, algebra))


def hierarchy_words(level: int, algebra: Algebra = PM_ALGEBRA) -> list[Word]:
    """Reduced words of length at most ``level``, deduplicated, shortest first."""
    if level < 1:
        raise ValueError("level must be >= 1")
    gens = algebra.generators
    words = [Word(())]
    seen = {words[0]}
    frontier = [()]
    for _ in range(level):
        nxt = []
        for prefix in frontier:
            for g in gens:
                w = reduce_word(prefix + (g,), algebra)
                if w not in seen:
                    seen.add(w)
                    words.append(w)
                    nxt.append(w.letters)
        frontier = nxt
    return words


@dataclass(frozen=True, eq=False)
class MomentProblem:
    """Moment-matrix relaxation data.

    ``cell_class[i, j]`` indexes ``class_words``; ``equal_classes`` lists, for
    every non-identity class with more than one cell, its upper-triangular
    cells, all of which must carry one common value. ``fixed_cells`` pins the
    diagonal to 1. ``objective`` is W with ``gamma = tr(Gamma W) / 2``.
    """

    words: tuple[Word, ...]
    cell_class: np.ndarray
    class_words: tuple[Word, ...]
    equal_classes: tuple[tuple[tuple[int, int], ...], ...]
    fixed_cells: dict
    objective: np.ndarray
    level: int | None = None

    @property
    def size(self) -> int:
        return len(self.words)

    def index(self, word: str | Word) -> int:
        if isinstance(word, str):
            word = Word.parse(word)
        return self.words.index(Word(word.letters))

    def same_class(self, cell_a: tuple[int, int], cell_b: tuple[int, int]) -> bool:
        return self.cell_class[cell_a] == self.cell_class[cell_b]

    def gamma_value(self, gamma: np.ndarray) -> float:
        return 0.5 * float(np.sum(gamma * self.objective))

    def to_sdp(self) -> SDPProblem:
        n = self.size
        constraints = []
        for (i, j), value in sorted(self.fixed_cells.items()):
            constraints.append((_cell_matrix(n, i, j), float(value)))
        for cells in self.equal_classes:
            first = _cell_matrix(n, *cells[0])
            for cell in cells[1:]:
                constraints.append((first - _cell_matrix(n, *cell), 0.0))
        return SDPProblem(0.5 * self.objective, constraints)

    def to_json(self) -> dict:
        return {
            "level": self.level,
            "words": [str(w) for w in self.words],
            "equal_classes": [[list(c) for c in cells] for cells in self.equal_classes],
            "fixed_cells": [[i, j, v] for (i, j), v in sorted(self.fixed_cells.items())],
            "objective": self.objective.tolist(),
        }

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1))


def _cell_matrix(n: int, i: int, j: int) -> np.ndarray:
    # tr(E X) == X[i, j] for symmetric X
    e = np.zeros((n, n))
    if i == j:
        e[i, i] = 1.0
    else:
        e[i, j] = e[j, i] = 0.5
    return e


def build_problem(
    level: int = 1,
    algebra: Algebra = PM_ALGEBRA,
    terms: Sequence[tuple[str, str, float]] = GAMMA_TERMS,
) -> MomentProblem:
    words = hierarchy_words(level, algebra)
    n = len(words)
    keys: dict[Word, int] = {}
    class_words: list[Word] = []
    cell_class = np.empty((n, n), dtype=int)
    members: list[list[tuple[int, int]]] = []
    for i in range(n):
        for j in range(i, n):
            key = moment_key(words[i], words[j], algebra)
            if key not in keys:
                keys[key] = len(class_words)
                class_words.append(key)
                members.append([])
            k = keys[key]
            cell_class[i, j] = cell_class[j, i] = k
            members[k].append((i, j))

    identity = keys[Word(())]
    assert all(i == j for i, j in members[identity]), "identity moment off the diagonal"
    fixed = {cell: 1.0 for cell in members[identity]}
    equal = tuple(tuple(cells) for k, cells in enumerate(members) if k != identity and len(cells) > 1)

    index = {w: i for i, w in enumerate(words)}
    w_mat = np.zeros((n, n))
    for a, b, coef in terms:
        i, j = index[Word((a,))], index[Word((b,))]
        w_mat[i, j] += coef
        w_mat[j, i] += coef
    return MomentProblem(tuple(words), cell_class, tuple(class_words), equal, fixed, w_mat, level)


def chsh_problem(level: int = 1) -> MomentProblem:
    return build_problem(level, CHSH_ALGEBRA, CHSH_TERMS)


def load_problem(path: str | Path) -> MomentProblem:
    """Rebuild a MomentProblem from the JSON written by :meth:`MomentProblem.dump`."""
    data = json.loads(Path(path).read_text())
    words = tuple(Word(Word.parse(s).letters) for s in data["words"])
    n = len(words)
    cell_class = -np.ones((n, n), dtype=int)
    classes = [tuple(tuple(c) for c in cells) for cells in data["equal_classes"]]
    for k, cells in enumerate(classes):
        for i, j in cells:
            cell_class[i, j] = cell_class[j, i] = k
    fixed = {(int(i), int(j)): float(v) for i, j, v in data["fixed_cells"]}
    return MomentProblem(
        words, cell_class, (), tuple(classes), fixed, np.asarray(data["objective"], float), data.get("level")
    )


def solve_bound(problem: MomentProblem, tol: float = 1e-8, max_iter: int = 100) -> SDPResult:
    """Upper bound on the functional; ``result.dual_value`` is the certified number."""
    return solve(problem.to_sdp(), tol=tol, max_iter=max_iter)


# Explicit feasible matrix reaching 6 at level 1, word order I, A1..A3, B1..B3, B1'..B3'
GAMMA0_WITNESS = np.array(
    [
        [1, 0, 0, 0, 0, 0, 0, 0, 0, 0],
        [0, 1, 0, 0, 1, 0, 0, 1, 0, 0],
        [0, 0, 1, 0, 0, 1, 0, 0, 1, 0],
        [0, 0, 0, 1, 0, 0, 1, 0, 0, -1],
        [0, 1, 0, 0, 1, 0, 0, 1, 0, 0],
        [0, 0, 1, 0, 0, 1, 0, 0, 1, 0],
        [0, 0, 0, 1, 0, 0, 1, 0, 0, -1],
        [0, 1, 0, 0, 1, 0, 0, 1, 0, 0],
        [0, 0, 1, 0, 0, 1, 0, 0, 1, 0],
        [0, 0, 0, -1, 0, 0, -1, 0, 0, 1],
    ],
    dtype=float,
)


@dataclass
class Certificate:
    matrix: np.ndarray
    objective_value: float
    feasibility_residuals: dict = field(default_factory=dict)


def make_certificate(gamma: np.ndarray, problem: MomentProblem) -> Certificate:
    gamma = np.asarray(gamma, dtype=float)
    return Certificate(gamma, problem.gamma_value(gamma), moment_residuals(gamma, problem))


def moment_residuals(gamma: np.ndarray, problem: MomentProblem) -> dict:
    if gamma.shape != (problem.size, problem.size):
        raise ValueError(f"matrix shape {gamma.shape} does not match problem size {problem.size}")
    sym = float(np.max(np.abs(gamma - gamma.T)))
    fixed = max((abs(gamma[c] - v) for c, v in problem.fixed_cells.items()), default=0.0)
    equal = 0.0
    for cells in problem.equal_classes:
        vals = np.array([gamma[c] for c in cells])
        equal = max(equal, float(vals.max() - vals.min()))
    min_eig = float(np.linalg.eigvalsh(0.5 * (gamma + gamma.T))[0])
    return {"symmetry": sym, "fixed": float(fixed), "equal": equal, "min_eigenvalue": min_eig}


def verify_certificate(cert: Certificate, problem: MomentProblem, tol: float = 1e-9) -> bool:
    """Independent feasibility check of a claimed moment matrix and its value."""
    res = moment_residuals(cert.matrix, problem)
    value = problem.gamma_value(cert.matrix)
    return (
        res["symmetry"] <= tol
        and res["fixed"] <= tol
        and res["equal"] <= tol
        and res["min_eigenvalue"] >= -tol
        and abs(value - cert.objective_value) <= max(tol, 1e-9 * abs(value))
    )
