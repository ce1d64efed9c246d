import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import detailed_balance_chain, random_chain, random_density
from nonrev.chain import ChainSpec, stationary
from nonrev.errors import LevelSetInfeasible, NotOnLevelSet, ZeroDensity, ZeroRate
from nonrev.forces import (
    DissipationPair,
    Dual,
    EdgeField,
    Flip,
    Mobility,
    Move,
    bregman,
    entropy_decomposition,
    entropy_production,
    flux,
    force_split,
    grad_psi,
    iso_force_family,
    mobility_force,
    pairing,
    psi,
    psi_star,
)
from nonrev.solvers import GridSpec, legendre_oracle

LOG2 = np.log(2.0)


def test_c2_at_pi(c2):
    mob, F = mobility_force(c2, stationary(c2))
    assert abs(F.values[0]) < 1e-15
    assert mob.values[0] == pytest.approx(4 / 3, abs=1e-15)


def test_r3_at_pi(r3):
    mob, F = mobility_force(r3, stationary(r3))
    # edge (0, 2) is oriented against the clockwise direction
    np.testing.assert_allclose(F.values, [LOG2, -LOG2, LOG2], atol=1e-14)
    np.testing.assert_allclose(mob.values, 2 / 3 * np.sqrt(2), atol=1e-15)
    j = flux(mob, F)
    np.testing.assert_allclose(j.values, [1 / 3, -1 / 3, 1 / 3], atol=1e-15)
    assert pairing(j, F) == pytest.approx(LOG2, abs=1e-14)
    assert psi_star(mob, F) == pytest.approx(6 - 4 * np.sqrt(2), abs=1e-14)
    assert entropy_production(j, F) == pytest.approx(2 * LOG2, abs=1e-14)


def test_flux_is_net_current(rng):
    for _ in range(10):
        spec = random_chain(rng)
        rho = random_density(rng, spec.n_states)
        mob, F = mobility_force(spec, rho)
        x, y = mob.edges.T
        direct = rho[x] * spec.rates[x, y] - rho[y] * spec.rates[y, x]
        np.testing.assert_allclose(flux(mob, F).values, direct, atol=1e-13)


def test_schnakenberg_form(rng):
    spec = random_chain(rng, 5)
    rho = random_density(rng, 5)
    mob, F = mobility_force(spec, rho)
    # sum over ordered pairs, which carries the factor 2 of e = 2 <j, F>
    total = 0.0
    for x, y in zip(*np.nonzero(spec.rates)):
        p, q = rho[x] * spec.rates[x, y], rho[y] * spec.rates[y, x]
        total += (p - q) * np.log(p / q)
    assert entropy_production(flux(mob, F), F) == pytest.approx(total, rel=1e-12)


def test_detailed_balance_has_zero_force(rng):
    spec, w = detailed_balance_chain(rng, 4)
    mob, F = mobility_force(spec, w)
    assert np.abs(F.values).max() < 1e-13
    assert entropy_production(flux(mob, F), F) == pytest.approx(0.0, abs=1e-13)


def test_zero_rate_and_density(c2):
    with pytest.raises(ZeroRate):
        mobility_force(ChainSpec.from_triples(2, [(0, 1, 1.0)]), [0.5, 0.5])
    with pytest.raises(ZeroDensity):
        mobility_force(c2, [1.0, 0.0])


def test_potentials_vanish_at_zero(r3):
    mob, F = mobility_force(r3, stationary(r3))
    zero = EdgeField.zeros(mob.edges)
    assert psi_star(mob, zero) == 0.0 and psi(mob, zero) == 0.0
    assert pairing(F, zero) == 0.0


def test_fenchel_young_equality(rng):
    for _ in range(20):
        spec = random_chain(rng)
        mob, F = mobility_force(spec, random_density(rng, spec.n_states))
        j = flux(mob, F)
        assert abs(psi(mob, j) + psi_star(mob, F) - pairing(j, F)) < 1e-10


def test_psi_matches_grid_oracle_single_edge():
    mob = Mobility(np.array([[0, 1]]), np.array([1.0]))
    for jv in (-2.0, -0.3, 0.0, 0.7, 3.0):
        f = lambda x: 2.0 * (np.cosh(x[..., 0] / 2) - 1)  # noqa: E731
        sup = legendre_oracle(f, np.array([jv]), GridSpec())
        closed = psi(mob, EdgeField(mob.edges, np.array([jv])))
        assert abs(sup - closed) < 1e-6


def test_psi_by_oracle_two_edges(rng):
    mob = Mobility(np.array([[0, 1], [1, 2]]), rng.uniform(0.5, 2.0, 2))
    pair = DissipationPair(mob)
    j = EdgeField(mob.edges, rng.uniform(-1, 1, 2))
    assert abs(pair.psi_by_oracle(j) - pair.psi(j)) < 1e-6


def test_grad_psi_inverts_flux(rng):
    spec = random_chain(rng, 4)
    mob, F = mobility_force(spec, random_density(rng, 4))
    np.testing.assert_allclose(grad_psi(mob, flux(mob, F)).values, F.values, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(0.1, 5.0), min_size=3, max_size=3),
    st.lists(st.floats(-3.0, 3.0), min_size=3, max_size=3),
    st.lists(st.floats(-3.0, 3.0), min_size=3, max_size=3),
)
def test_bregman_nonnegative(a, u, v):
    mob = Mobility(np.array([[0, 1], [0, 2], [1, 2]]), np.array(a))
    j1, j2 = EdgeField(mob.edges, np.array(u)), EdgeField(mob.edges, np.array(v))
    assert bregman(mob, j1, j2) >= -1e-12
    assert bregman(mob, j1, j1) == pytest.approx(0.0, abs=1e-12)


def test_bregman_against_finite_differences(rng):
    mob = Mobility(np.array([[0, 1], [1, 2]]), np.array([0.8, 1.7]))
    j1 = EdgeField(mob.edges, np.array([0.4, -1.1]))
    j2 = EdgeField(mob.edges, np.array([-0.2, 0.5]))
    eps = 1e-6
    g = np.array([
        (psi(mob, j2.with_values(j2.values + eps * e)) - psi(mob, j2.with_values(j2.values - eps * e))) / (2 * eps)
        for e in np.eye(2)
    ])
    direct = psi(mob, j1) - psi(mob, j2) - (j1.values - j2.values) @ g
    assert bregman(mob, j1, j2) == pytest.approx(direct, abs=1e-8)


def test_bregman_sum_identity(rng):
    spec = random_chain(rng, 5)
    mob, F = mobility_force(spec, random_density(rng, 5))
    j = flux(mob, F)
    F_iso = iso_force_family(mob, F, Move(0, 1, 0.05))
    j_iso = flux(mob, F_iso)
    lhs = bregman(mob, j, -j_iso) + bregman(mob, j, j_iso)
    assert lhs == pytest.approx(2 * psi(mob, j) + 2 * psi_star(mob, F_iso), abs=1e-10)


def test_iso_family_selectors(r3):
    mob, F = mobility_force(r3, stationary(r3))
    same = iso_force_family(mob, F, Flip(()))
    np.testing.assert_array_equal(same.values, F.values)
    neg = iso_force_family(mob, F, Flip(range(3)))
    np.testing.assert_array_equal(neg.values, -F.values)
    moved = iso_force_family(mob, F, Move(0, 1, 0.1))
    assert abs(psi_star(mob, moved) - psi_star(mob, F)) < 1e-10
    assert moved.values[0] == pytest.approx(F.values[0] + 0.1)
    with pytest.raises(LevelSetInfeasible):
        iso_force_family(mob, F, Move(0, 1, 10.0))
    dual = iso_force_family(mob, F, Dual(r3, stationary(r3)))
    np.testing.assert_allclose(dual.values, -F.values, atol=1e-14)


def test_force_split_cases(r3):
    mob, F = mobility_force(r3, stationary(r3))
    FS, FA = force_split(F, F)
    np.testing.assert_array_equal(FS.values, F.values)
    np.testing.assert_array_equal(FA.values, 0.0)
    FS, FA = force_split(F, -F)
    np.testing.assert_array_equal(FS.values, 0.0)
    np.testing.assert_array_equal(FA.values, F.values)
    FS, FA = force_split(F, iso_force_family(mob, F, Dual(r3, stationary(r3))))
    assert np.abs((FS + FA).values - F.values).max() <= 1e-15


def test_entropy_decomposition_cases(r3, rng):
    pi = stationary(r3)
    mob, F = mobility_force(r3, pi)
    e = 2 * LOG2
    s = entropy_decomposition(r3, pi, F)
    assert s.term2 == pytest.approx(0.0, abs=1e-14) and s.term1 == pytest.approx(e, abs=1e-12)
    s = entropy_decomposition(r3, pi, -F)
    assert s.term1 == pytest.approx(0.0, abs=1e-14) and s.term2 == pytest.approx(e, abs=1e-12)
    s = entropy_decomposition(r3, pi, iso_force_family(mob, F, Dual(r3, pi)))
    assert min(s.term1, s.term2) >= 0 and abs(s.term1 + s.term2 - e) < 1e-9


def test_entropy_decomposition_rejects_off_level(r3):
    pi = stationary(r3)
    _, F = mobility_force(r3, pi)
    with pytest.raises(NotOnLevelSet):
        entropy_decomposition(r3, pi, F * 1.1)


def test_edgefield_json_orientation():
    f = EdgeField.from_json({"edges": [[1, 0, 2.0], [1, 2, 3.0]]})
    np.testing.assert_array_equal(f.edges, [[0, 1], [1, 2]])
    np.testing.assert_array_equal(f.values, [-2.0, 3.0])
