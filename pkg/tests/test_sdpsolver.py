import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contextual_key import npa
from contextual_key.sdpsolver import INFEASIBLE, SDPProblem, SDPResult, solve, validate


def _diag_pins(n):
    out = []
    for i in range(n):
        e = np.zeros((n, n))
        e[i, i] = 1.0
        out.append((e, 1.0))
    return out


def test_scalar_problem():
    res = solve(SDPProblem(np.array([[3.5]]), [(np.array([[1.0]]), 1.0)]))
    assert res.solved
    assert res.dual_value == pytest.approx(3.5, abs=1e-8)


def test_two_by_two_correlation():
    c = np.array([[0.0, 1.0], [1.0, 0.0]])
    res = solve(SDPProblem(c, _diag_pins(2)))
    assert res.dual_value == pytest.approx(2.0, abs=1e-8)
    np.testing.assert_allclose(res.X, np.ones((2, 2)), atol=1e-6)


def test_level1_problem(level1):
    sdp = level1.to_sdp()
    res = solve(sdp)
    assert res.dual_value == pytest.approx(6.0, abs=1e-6)
    rep = validate(sdp, res)
    assert rep.ok
    assert rep.primal_residual <= 1e-8


def test_validate_witness(level1):
    sdp = level1.to_sdp()
    fake = SDPResult(X=npa.GAMMA0_WITNESS, y=np.zeros(0), Z=None, primal_value=np.nan, dual_value=np.nan,
                     gap=np.nan, status="solved", iterations=0)
    rep = validate(sdp, fake)
    assert rep.psd_ok and rep.feasible_ok
    assert rep.primal_value == pytest.approx(6.0)


def test_validate_flags_negative_eigenvalue(level1):
    sdp = level1.to_sdp()
    res = solve(sdp)
    w, v = np.linalg.eigh(res.X)
    w[0] = -1e-3
    bad = SDPResult(X=(v * w) @ v.T, y=res.y, Z=res.Z, primal_value=res.primal_value, dual_value=res.dual_value,
                    gap=res.gap, status=res.status, iterations=res.iterations)
    rep = validate(sdp, bad)
    assert not rep.psd_ok and not rep.ok


def _random_instance(seed):
    """Random SDP whose optimum is known in closed form."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 7))
    kind = seed % 3
    if kind == 0:
        # max tr(CX), tr X = 1  ->  largest eigenvalue of C
        g = rng.normal(size=(n, n))
        c = (g + g.T) / 2
        return SDPProblem(c, [(np.eye(n), 1.0)]), float(np.linalg.eigvalsh(c)[-1])
    if kind == 1:
        # correlation matrices against s s^T  ->  n^2
        s = rng.choice([-1.0, 1.0], n)
        return SDPProblem(np.outer(s, s), _diag_pins(n)), float(n * n)
    # diagonal objective over correlation matrices -> its trace
    d = rng.normal(size=n)
    return SDPProblem(np.diag(d), _diag_pins(n)), float(d.sum())


@pytest.mark.parametrize("seed", range(50))
def test_random_instances_match_analytic_optimum(seed):
    prob, expected = _random_instance(seed)
    res = solve(prob)
    assert res.solved
    assert res.dual_value == pytest.approx(expected, abs=1e-7)
    assert res.primal_value == pytest.approx(expected, abs=1e-7)
    assert res.dual_value >= res.primal_value - 1e-9


@settings(max_examples=25)
@given(st.integers(0, 10**6))
def test_duality_and_validation_on_random_instances(seed):
    prob, _ = _random_instance(seed)
    res = solve(prob)
    rep = validate(prob, res)
    assert rep.ok
    assert res.dual_value >= res.primal_value - 1e-9


def test_dependent_constraints_are_dropped():
    pins = _diag_pins(2)
    prob = SDPProblem(np.array([[0.0, 1.0], [1.0, 0.0]]), pins + [pins[0]])
    res = solve(prob)
    assert res.dropped_constraints == [2]
    assert res.dual_value == pytest.approx(2.0, abs=1e-8)


def test_infeasible_problem_reports_status():
    e = np.zeros((2, 2))
    e[0, 0] = 1.0
    res = solve(SDPProblem(np.eye(2), [(e, -1.0)]))
    assert not res.solved
    assert res.status == INFEASIBLE


def test_deterministic(level1):
    sdp = level1.to_sdp()
    a, b = solve(sdp), solve(sdp)
    assert a.iterations == b.iterations
    np.testing.assert_array_equal(a.X, b.X)


def test_problem_validation():
    with pytest.raises(ValueError):
        SDPProblem(np.array([[0.0, 1.0], [0.0, 0.0]]), [])
    with pytest.raises(ValueError):
        SDPProblem(np.eye(2), [(np.eye(3), 1.0)])
