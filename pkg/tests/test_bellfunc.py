import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from contextual_key import bellfunc as bf


def test_gamma_examples():
    assert bf.gamma([[1, 1], [1, 1], [1, -1]]) == 6
    assert bf.gamma(np.zeros((3, 2))) == 0
    value, (a, b, bp) = bf.classical_max_gamma()
    assert value == 4
    assert bf.gamma(bf.deterministic_table(a, b, bp)) == 4


def test_gamma_rejects_bad_tables():
    with pytest.raises(ValueError):
        bf.gamma(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        bf.gamma(np.full((3, 2), 1.5))


def test_beta_examples():
    assert bf.beta(np.ones(6)) == 6
    assert bf.beta(np.full(6, 0.5)) == 3
    _, (a, b, bp) = bf.classical_max_gamma()
    assert bf.beta(bf.beta_probabilities(bf.deterministic_table(a, b, bp))) == 5
    with pytest.raises(ValueError):
        bf.beta([1.2, 0, 0, 0, 0, 0])


def test_beta_from_gamma():
    assert bf.beta_from_gamma(6) == 6
    assert bf.beta_from_gamma(4) == 5
    assert bf.beta_from_gamma(-6) == 0
    with pytest.raises(ValueError):
        bf.beta_from_gamma(7)


def test_chsh_examples():
    assert bf.chsh(1, 1, 1, -1) == 4
    assert bf.chsh(1, 1, 1, 1) == 2
    r = np.sqrt(2) / 2
    assert bf.chsh(r, r, r, -r) == pytest.approx(2 * np.sqrt(2))
    with pytest.raises(ValueError):
        bf.chsh(2, 0, 0, 0)


def test_classical_maxima():
    assert bf.classical_max_gamma(tie_primed=True)[0] == 4
    assert bf.classical_max_chsh() == 2


def test_enumeration_is_exhaustive():
    # independent brute force over all 2^7 sign assignments
    best = max(
        a1 * b1 + a2 * b2 + a3 * b1 * b2 + a1 * c1 + a2 * c2 - a3 * c1 * c2
        for a1, a2, a3, b1, b2, c1, c2 in itertools.product((1, -1), repeat=7)
    )
    assert bf.classical_max_gamma()[0] == best == 4


@given(st.tuples(*[st.sampled_from((1, -1))] * 7))
def test_beta_gamma_identity_on_deterministic(s):
    t = bf.deterministic_table(s[:3], s[3:5], s[5:])
    assert bf.beta(bf.beta_probabilities(t)) == bf.beta_from_gamma(bf.gamma(t))


@given(st.lists(st.floats(-1, 1), min_size=6, max_size=6))
def test_gamma_bounded_by_six(vals):
    t = np.reshape(vals, (3, 2))
    assert abs(bf.gamma(t)) <= 6 + 1e-12
    assert bf.beta(bf.beta_probabilities(t)) == pytest.approx(bf.beta_from_gamma(bf.gamma(t)))


def test_functional_objects_agree_with_direct_formulae():
    corr = {(a, b): 1.0 for a, b, _ in bf.GAMMA.terms}
    corr[("A3", "B3'")] = -1.0
    assert bf.GAMMA.evaluate(corr) == 6
    assert bf.GAMMA.bound_classical == 4 and bf.GAMMA.bound_algebraic == 6
    assert bf.CHSH.bound_quantum == pytest.approx(2 * np.sqrt(2))
