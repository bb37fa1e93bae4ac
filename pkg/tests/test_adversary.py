import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contextual_key import adversary as adv
from contextual_key import boxmodel as bm
from contextual_key import security as sec
from contextual_key.boxmodel import EVEN_TRIPLES, TRIPLE_INDEX, BoxError

EVEN_IDX = [TRIPLE_INDEX[t] for t in EVEN_TRIPLES]
X0 = 0.9091


def _rows(row1, rng=None):
    rows = np.zeros((3, 8))
    rows[0, EVEN_IDX] = row1
    rows[1:, EVEN_IDX] = 0.25
    return rows


def test_trivial_ensemble(ideal_box):
    assert adv.verify_decomposition(adv.Ensemble([1.0], [ideal_box]), ideal_box)


def test_two_member_fixture():
    a = bm.box_from_rows(_rows([0.7, 0.1, 0.1, 0.1]))
    b = bm.box_from_rows(_rows([0.1, 0.3, 0.3, 0.3]))
    target = bm.mix([0.5, 0.5], [a, b])
    assert adv.verify_decomposition(adv.Ensemble([0.5, 0.5], [a, b]), target, 1e-12)
    assert not adv.verify_decomposition(adv.Ensemble([0.4, 0.6], [a, b]), target, 1e-12)


def test_forbidden_support_member_rejected():
    good = bm.construct_uniform_ideal()
    t = good.tables.copy()
    t[0, 0] = 0
    t[0, 0, TRIPLE_INDEX[(1, 1, -1)], TRIPLE_INDEX[(1, 1, 1)]] = 1.0
    bad = bm.BoxFamily(t)
    # compensate so the mixture equals a legitimate-looking target
    target = bm.mix([0.5, 0.5], [bad, good])
    assert not adv.verify_decomposition(adv.Ensemble([0.5, 0.5], [bad, good]), target)


def test_shape_mismatch():
    good = bm.construct_uniform_ideal()

    class Odd:
        tables = np.zeros((2, 2))

    with pytest.raises(BoxError):
        adv.verify_decomposition(adv.Ensemble([1.0], [Odd()]), good)


def test_ensemble_validation():
    box = bm.construct_uniform_ideal()
    with pytest.raises(BoxError):
        adv.Ensemble([0.5, 0.6], [box, box])
    with pytest.raises(BoxError):
        adv.Ensemble([1.0], [box, box])


def test_single_ideal_box_has_two_bits(ideal_box):
    rep = adv.eve_entropy(adv.Ensemble([1.0], [ideal_box]))
    assert rep.avg_row_entropy == pytest.approx(2.0)
    assert rep.per_member_eps == [pytest.approx(0.0, abs=1e-12)]


def test_deterministic_rows_are_flagged():
    members = []
    for k in range(4):
        row = np.zeros(4)
        row[k] = 1.0
        members.append(bm.box_from_rows(_rows(row)))
    ens = adv.Ensemble(np.full(4, 0.25), members)
    target = bm.box_from_rows(_rows(np.full(4, 0.25)))
    assert adv.verify_decomposition(ens, target)
    rep = adv.eve_entropy(ens)
    assert rep.avg_row_entropy == 0.0
    assert all(rep.cap_violations)


def test_markov_tail_examples():
    eps = 0.01
    assert adv.markov_tail([0.5, 0.5], [eps, eps], 2 * eps) == 1.0
    assert adv.markov_tail([0.5, 0.5], [0.0, 2 * eps], eps) == 0.5
    assert adv.markov_tail([0.2, 0.8], [0.3, 0.1], 1e9) == 1.0


@given(st.lists(st.floats(0.0, 1.0), min_size=3, max_size=3), st.floats(0.001, 1.0))
def test_markov_bound_always_holds(eps_list, delta):
    w = np.array([0.2, 0.3, 0.5])
    mass = adv.markov_tail(w, eps_list, delta)
    assert mass >= 1 - float(w @ eps_list) / delta - 1e-12


def _capped_row(rng, cap):
    """Random 4-outcome distribution with every entry <= cap."""
    while True:
        q = rng.dirichlet(np.full(4, 0.3))
        if q.max() <= cap:
            return q


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1))
def test_capped_ensembles_respect_the_entropy_bound(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(2, 5))
    w = rng.dirichlet(np.ones(k))
    eps_e = rng.uniform(0, 0.02, k)
    members = [bm.box_from_rows(_rows(_capped_row(rng, min(X0 + 4.5 * e, 1.0))), e) for e in eps_e]
    ens = adv.Ensemble(w, members)
    assert adv.verify_decomposition(ens, ens.mixture())
    rep = adv.eve_entropy(ens, gamma0=5.6364)
    eps = float(w @ eps_e)
    assert not any(rep.cap_violations)
    assert rep.avg_row_entropy >= sec.hbe_lower(eps, X0)[0] - 1e-9


def test_attack_on_ideal_box(ideal_box):
    ens = adv.attack_search(ideal_box, members=2, restarts=5, seed=3)
    assert adv.verify_decomposition(ens, ideal_box, 1e-8)
    rep = adv.eve_entropy(ens)
    assert rep.avg_row_entropy >= 0.4395 - 1e-3
    assert rep.avg_row_entropy < 2.0


def test_attack_deterministic_target_reaches_zero():
    target = bm.box_from_rows(_rows([1.0, 0, 0, 0]))
    ens = adv.attack_search(target, members=2, restarts=2, seed=0, cap_gamma0=None)
    assert adv.eve_entropy(ens).avg_row_entropy == pytest.approx(0.0, abs=1e-12)


def test_attack_is_deterministic(ideal_box):
    a = adv.attack_search(ideal_box, members=3, restarts=3, seed=11, steps=200)
    b = adv.attack_search(ideal_box, members=3, restarts=3, seed=11, steps=200)
    np.testing.assert_array_equal(a.weights, b.weights)
    for x, y in zip(a.members, b.members):
        assert x == y


def test_unfiltered_attack_stays_a_valid_decomposition(ideal_box):
    ens = adv.attack_search(ideal_box, members=4, restarts=3, seed=5, cap_gamma0=None)
    assert adv.verify_decomposition(ens, ideal_box, 1e-8)


@pytest.mark.parametrize("p", [1.0, 0.98])
def test_attack_output_always_verifies(p):
    from contextual_key import quantumsim as qs

    target = qs.quantum_pm_box(qs.NoiseModel(p))
    ens = adv.attack_search(target, members=3, restarts=3, seed=1)
    assert adv.verify_decomposition(ens, target, 1e-8)


def test_ensemble_json_roundtrip(ideal_box):
    ens = adv.attack_search(ideal_box, members=2, restarts=1, seed=0, steps=50)
    back = adv.Ensemble.from_json(ens.to_json())
    np.testing.assert_allclose(back.weights, ens.weights)
    assert all(x == y for x, y in zip(back.members, ens.members))


def test_cap_filter_matters(ideal_box):
    # without the quantum cap the search undercuts the analytic bound
    free = adv.eve_entropy(adv.attack_search(ideal_box, members=4, restarts=5, seed=0, cap_gamma0=None))
    capped = adv.eve_entropy(adv.attack_search(ideal_box, members=4, restarts=5, seed=0))
    assert free.avg_row_entropy < sec.min_row_entropy(X0) < capped.avg_row_entropy
    assert any(free.cap_violations) and not any(capped.cap_violations)
