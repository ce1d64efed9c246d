import numpy as np
import pytest

from conftest import detailed_balance_chain, random_chain, random_density
from nonrev.chain import generator, stationary
from nonrev.duality import adjoint_chain, canonical_split, dual_force, representation
from nonrev.errors import ZeroReference
from nonrev.forces import mobility_force, psi_star


def test_r3_adjoint_swaps_directions(r3):
    star = adjoint_chain(r3)
    np.testing.assert_allclose(star.rates, r3.rates.T, atol=1e-14)


def test_detailed_balance_self_adjoint(rng):
    spec, _ = detailed_balance_chain(rng, 5)
    assert np.abs(adjoint_chain(spec).rates - spec.rates).max() < 1e-12


def test_involution(rng):
    spec = random_chain(rng, 5)
    assert np.abs(adjoint_chain(adjoint_chain(spec)).rates - spec.rates).max() < 1e-12


def test_adjoint_is_time_reversal(rng):
    # pi_x r*_xy = pi_y r_yx, and pi is stationary for both chains
    spec = random_chain(rng, 5)
    pi = stationary(spec)
    star = adjoint_chain(spec)
    np.testing.assert_allclose(pi[:, None] * star.rates, (pi[:, None] * spec.rates).T, atol=1e-14)
    np.testing.assert_allclose(stationary(star), pi, atol=1e-12)


def test_representation_mu_pi(r3):
    pi = stationary(r3)
    rep = representation(r3, pi)
    np.testing.assert_allclose(rep.h, 1.0, atol=1e-14)
    np.testing.assert_allclose(rep.w_plus, rep.w_star, atol=1e-14)


def test_representation_uniform_differs_in_w_plus(c2):
    pi = stationary(c2)
    a = representation(c2, pi)
    b = representation(c2, [0.5, 0.5])
    np.testing.assert_allclose(a.w_star, b.w_star, atol=1e-14)
    assert np.abs(a.w_plus - b.w_plus).max() > 0.1


def test_representation_independence(rng):
    spec = random_chain(rng, 5)
    base = representation(spec, stationary(spec)).w_star
    for _ in range(10):
        rep = representation(spec, rng.uniform(0.01, 1.0, 5))
        assert np.abs(rep.w_star - base).max() < 1e-12
        assert rep.defect < 1e-12
    np.testing.assert_allclose(base, generator(adjoint_chain(spec)), atol=1e-12)


def test_zero_reference(r3):
    with pytest.raises(ZeroReference):
        representation(r3, [0.5, 0.5, 0.0])


def test_dual_force_examples(r3, rng):
    pi = stationary(r3)
    mob, F = mobility_force(r3, pi)
    Fs = dual_force(r3, pi)
    np.testing.assert_allclose(Fs.values, -F.values, atol=1e-14)
    assert psi_star(mob, Fs) == pytest.approx(psi_star(mob, F), abs=1e-14)
    spec, _ = detailed_balance_chain(rng, 4)
    rho = random_density(rng, 4)
    np.testing.assert_allclose(dual_force(spec, rho).values, mobility_force(spec, rho)[1].values, atol=1e-12)


def test_dual_force_preserves_dissipation(rng):
    for _ in range(20):
        spec = random_chain(rng, 4)
        rho = random_density(rng, 4)
        mob, F = mobility_force(spec, rho)
        assert abs(psi_star(mob, F) - psi_star(mob, dual_force(spec, rho))) <= 1e-10


def test_dual_chain_same_mobility(rng):
    spec = random_chain(rng, 5)
    rho = random_density(rng, 5)
    a, _ = mobility_force(spec, rho)
    b, _ = mobility_force(adjoint_chain(spec), rho)
    np.testing.assert_allclose(a.values, b.values, rtol=1e-12)


def test_canonical_split(r3, rng):
    pi = stationary(r3)
    FS, FA = canonical_split(r3, pi)
    _, F = mobility_force(r3, pi)
    np.testing.assert_allclose(FS.values, 0.0, atol=1e-14)
    np.testing.assert_allclose(FA.values, F.values, atol=1e-14)
    spec, _ = detailed_balance_chain(rng, 5)
    rho = random_density(rng, 5)
    FS, FA = canonical_split(spec, rho)
    assert np.abs(FA.values).max() < 1e-12
    np.testing.assert_array_equal((FS + FA).values, mobility_force(spec, rho)[1].values)


def test_antisymmetric_force_is_density_free(rng):
    spec = random_chain(rng, 5)
    _, FA1 = canonical_split(spec, random_density(rng, 5))
    _, FA2 = canonical_split(spec, random_density(rng, 5))
    assert np.abs(FA1.values - FA2.values).max() < 1e-12
