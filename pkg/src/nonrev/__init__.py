"""Flux-force structure, time reversal and large deviations of Markov jump chains."""

from .chain import ChainSpec, as_density, evolve, generator, stationary, validate
from .duality import adjoint_chain, canonical_split, dual_force, representation
from .errors import NonrevError
from .forces import (
    DissipationPair,
    EdgeField,
    Mobility,
    bregman,
    entropy_decomposition,
    entropy_production,
    flux,
    iso_force_family,
    mobility_force,
    psi,
    psi_star,
)
from .gillespie import empirical_measures, entropy_rate_estimate, simulate
from .variational import (
    decompose,
    donsker_varadhan,
    edge_hamiltonian,
    hamiltonian_from_generator,
    legendre,
    min_hamiltonian,
)

__version__ = "0.1.0"

__all__ = [
    "ChainSpec", "as_density", "evolve", "generator", "stationary", "validate",
    "adjoint_chain", "canonical_split", "dual_force", "representation",
    "NonrevError",
    "DissipationPair", "EdgeField", "Mobility", "bregman", "entropy_decomposition",
    "entropy_production", "flux", "iso_force_family", "mobility_force", "psi", "psi_star",
    "empirical_measures", "entropy_rate_estimate", "simulate",
    "decompose", "donsker_varadhan", "edge_hamiltonian", "hamiltonian_from_generator",
    "legendre", "min_hamiltonian",
]
