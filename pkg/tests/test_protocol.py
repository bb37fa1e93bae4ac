import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contextual_key import boxmodel as bm
from contextual_key import protocol as pr
from contextual_key.quantumsim import NoiseModel


@pytest.fixture(scope="module")
def noiseless():
    return pr.run(pr.ProtocolConfig(n=10_000, seed=7))


def test_noiseless_run(noiseless):
    tr = noiseless.transcript
    assert tr.n == 10_000
    assert not tr.aborted
    assert tr.estimate.eps_hat.max() == 0.0
    np.testing.assert_array_equal(tr.alice_key, tr.bob_key)
    assert noiseless.key_rate_estimate == pytest.approx(0.4395, abs=5e-4)
    assert noiseless.qber_raw == 0.0


def test_noiseless_outcomes_obey_parities(noiseless):
    tr = noiseless.transcript
    bob_par = tr.bob.prod(axis=1)
    alice_par = tr.alice.prod(axis=1)
    assert np.all(bob_par == 1)
    t1 = tr.sample == pr.TEST1
    assert np.all(alice_par[t1] == np.where(tr.A[t1] == 3, -1, 1))
    assert np.all(alice_par[~t1] == 1)


def test_key_length_accounting(noiseless):
    tr = noiseless.transcript
    assert (tr.sample == pr.KEY).sum() == 5000
    assert len(tr.alice_key) == 2 * 5000


def test_key_only_from_key_rounds(noiseless):
    tr = noiseless.transcript
    keys = np.flatnonzero(tr.sample == pr.KEY)
    assert len(tr.alice_key) == 2 * len(keys)
    assert np.all(tr.A[keys] == 0)


def test_encoding():
    enc = pr._encode(np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]))
    assert enc.tolist() == [0, 0, 0, 1, 1, 0, 1, 1]


def test_determinism():
    cfg = pr.ProtocolConfig(n=2000, seed=3, noise=NoiseModel(0.9))
    a, b = pr.run(cfg), pr.run(cfg)
    assert a.transcript.to_csv() == b.transcript.to_csv()


def test_noisy_run_aborts():
    res = pr.run(pr.ProtocolConfig(n=20_000, seed=1, noise=NoiseModel.from_eps(0.01), abort_eps=0.0068))
    assert res.transcript.aborted


def test_abort_probability_grows_with_n():
    def rate(n):
        runs = [pr.run(pr.ProtocolConfig(n=n, seed=s, noise=NoiseModel.from_eps(0.01), abort_eps=0.0068))
                for s in range(10)]
        return np.mean([r.transcript.aborted for r in runs])

    assert rate(20_000) >= rate(500)
    assert rate(20_000) == 1.0


def test_eps_tilde_relation():
    res = pr.run(pr.ProtocolConfig(n=100_000, seed=2, noise=NoiseModel.from_eps(0.01)))
    est = res.transcript.estimate
    sigma = np.sqrt(0.015 * 0.985 / est.row_rounds)
    assert abs(est.eps_tilde_hat - 0.015) < 3 * sigma
    assert est.eps_from_tilde == pytest.approx(2 / 3 * est.eps_tilde_hat)


def test_estimator_converges():
    errs = []
    for n in (1_000, 10_000, 100_000):
        e = [abs(pr.run(pr.ProtocolConfig(n=n, seed=s, noise=NoiseModel.from_eps(0.01))).transcript.estimate.mean_eps
                 - 0.01) for s in range(4)]
        errs.append(np.mean(e))
    assert errs[2] < errs[0]
    assert errs[2] < 0.003


def test_low_confidence_and_empty_flags():
    tr = pr.ProtocolTranscript(
        np.array([pr.TEST1, pr.KEY], dtype=object),
        np.array([1, 0]), np.array([1, 1]),
        np.array([[1, 1, 1], [1, 1, 1]]), np.array([[1, 1, 1], [1, 1, 1]]),
    )
    est = pr.estimate_eps(tr)
    assert est.low_confidence and est.empty
    assert est.eps_hat.max() == 0


def test_config_validation():
    with pytest.raises(ValueError):
        pr.ProtocolConfig(n=50)
    with pytest.raises(ValueError):
        pr.ProtocolConfig(test_fraction1=0.6, test_fraction2=0.5)
    with pytest.raises(ValueError):
        pr.ProtocolConfig(test_fraction1=0.0)


def test_csv_roundtrip(noiseless):
    text = noiseless.transcript.to_csv()
    assert text.splitlines()[0] == ",".join(pr.CSV_COLUMNS)
    back = pr.load_csv(text)
    np.testing.assert_array_equal(back.alice, noiseless.transcript.alice)
    np.testing.assert_array_equal(back.estimate.eps_hat, noiseless.transcript.estimate.eps_hat)


@settings(max_examples=10)
@given(st.integers(0, 10**6))
def test_noiseless_keys_always_agree(seed):
    tr = pr.run(pr.ProtocolConfig(n=500, seed=seed)).transcript
    np.testing.assert_array_equal(tr.alice_key, tr.bob_key)
    assert all(bm.parity(t) == 1 for t in map(tuple, tr.bob))
