import numpy as np
import pytest

from conftest import detailed_balance_chain
from nonrev.chain import ChainSpec, stationary
from nonrev.errors import EmptyTrajectory, InfiniteContribution
from nonrev.gillespie import (
    Trajectory,
    empirical_measures,
    entropy_rate_estimate,
    holding_times,
    jump_log_ratio_rate,
    resolve_seed,
    simulate,
)

R3_RATES = [(0, 1, 2.0), (1, 2, 2.0), (2, 0, 2.0), (1, 0, 1.0), (2, 1, 1.0), (0, 2, 1.0)]


@pytest.fixture(scope="module")
def r3_long():
    spec = ChainSpec.from_triples(3, R3_RATES)
    return spec, simulate(spec, 0, 1e5, seed=7)


def test_two_state_alternates():
    spec = ChainSpec.from_triples(2, [(0, 1, 1.0), (1, 0, 3.0)])
    tr = simulate(spec, 0, 200.0, seed=1)
    assert np.all(np.abs(np.diff(tr.states)) == 1)
    assert tr.states[0] == 0


def test_holding_times_exponential(rng):
    spec = ChainSpec.from_triples(3, R3_RATES)
    tr = simulate(spec, 1, 2e4, seed=3)
    states, dur = holding_times(tr)
    q = spec.rates.sum(axis=1)
    for x in range(3):
        d = dur[states == x]
        assert abs(d.mean() - 1 / q[x]) < 3 * (1 / q[x]) / np.sqrt(d.size)


def test_seed_determinism():
    spec = ChainSpec.from_triples(3, R3_RATES)
    a, b = simulate(spec, 0, 500.0, seed=11), simulate(spec, 0, 500.0, seed=11)
    np.testing.assert_array_equal(a.times, b.times)
    np.testing.assert_array_equal(a.states, b.states)
    c = simulate(spec, 0, 500.0, seed=12)
    assert a.states.size != c.states.size or np.any(a.times != c.times)


def test_seed_sequence_children_differ():
    spec = ChainSpec.from_triples(3, R3_RATES)
    s1, s2 = np.random.SeedSequence(5).spawn(2)
    a, b = simulate(spec, 0, 100.0, s1), simulate(spec, 0, 100.0, s2)
    assert a.states.size != b.states.size or np.any(a.times != b.times)


def test_r3_ergodic_averages(r3_long):
    spec, tr = r3_long
    rho, j = empirical_measures(tr, spec)
    assert np.abs(rho - 1 / 3).max() < 0.01
    assert rho.sum() == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(j.values, [1 / 3, -1 / 3, 1 / 3], atol=0.02)


def test_r3_entropy_rate(r3_long):
    spec, tr = r3_long
    est = entropy_rate_estimate(tr, spec)
    assert abs(est - 2 * np.log(2)) < 0.05 * 2 * np.log(2)
    assert jump_log_ratio_rate(tr, spec) == pytest.approx(est / 2)


def test_doubling_rates_doubles_estimate(r3_long):
    spec, tr = r3_long
    fast = spec.scaled(2.0)
    tr2 = simulate(fast, 0, 1e5, seed=8)
    assert entropy_rate_estimate(tr2, fast) == pytest.approx(2 * entropy_rate_estimate(tr, spec), rel=0.05)


def test_detailed_balance_currents_vanish(rng):
    spec, w = detailed_balance_chain(rng, 4)
    T = 4e4
    tr = simulate(spec, 0, T, seed=21)
    rho, j = empirical_measures(tr, spec)
    x, y = j.edges.T
    sigma = np.sqrt((w[x] * spec.rates[x, y] + w[y] * spec.rates[y, x]) / T)
    assert np.all(np.abs(j.values) < 5 * sigma)
    # the log-ratio sum telescopes to log(pi_end / pi_start) for a reversible chain
    bound = 2 * np.abs(np.log(w[:, None] / w[None, :])).max() / T
    assert abs(entropy_rate_estimate(tr, spec)) <= bound + 1e-15
    np.testing.assert_allclose(rho, stationary(spec), atol=0.02)


def test_infinite_contribution():
    spec = ChainSpec.from_triples(3, [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0), (1, 0, 1.0), (2, 1, 1.0)])
    tr = simulate(spec, 0, 50.0, seed=2)
    with pytest.raises(InfiniteContribution):
        entropy_rate_estimate(tr, spec)


def test_empty_trajectory():
    spec = ChainSpec.from_triples(2, [(0, 1, 1.0), (1, 0, 1.0)])
    with pytest.raises(EmptyTrajectory):
        empirical_measures(Trajectory([], [], 0, 1.0), spec)


def test_trajectory_invariants():
    with pytest.raises(ValueError):
        Trajectory([0.0, 0.5, 0.5], [0, 1, 0], 0, 1.0)
    tr = Trajectory([0.0, 0.5], [0, 1], 3, 1.0)
    back = Trajectory.from_json(tr.to_json())
    np.testing.assert_array_equal(back.states, [0, 1])
    assert back.seed == 3 and back.T == 1.0


def test_env_seed_override(monkeypatch):
    monkeypatch.setenv("NONREV_SEED", "99")
    assert resolve_seed(1) == 99
    monkeypatch.delenv("NONREV_SEED")
    assert resolve_seed(1) == 1
