"""Time reversal: adjoint chains, reference-measure representations, dual forces.

The adjoint chain has rates ``r*_xy = pi_y r_yx / pi_x``. In forward-generator
form its matrix is ``W*[x, y] = W[y, x] pi_x / pi_y``. For any strictly
positive reference measure ``mu`` the ``mu^{-1}``-weighted adjoint

    W+_mu[x, y] = W[y, x] mu_x / mu_y

conjugated by ``h = mu / pi`` reproduces the same ``W*``. On a finite state
space every ``mu`` therefore yields the same operator; the freedom in
choosing an iso-dissipation force lives on the ``Psi*`` level set instead
(see :func:`nonrev.forces.iso_force_family`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import ChainSpec, as_density, generator, stationary
from .errors import ZeroReference
from .forces import EdgeField, force_split, mobility_force

__all__ = [
    "adjoint_chain",
    "adjoint_generator",
    "AdjointRepresentation",
    "representation",
    "dual_force",
    "canonical_split",
]


def adjoint_chain(spec: ChainSpec, pi=None) -> ChainSpec:
    pi = stationary(spec) if pi is None else np.asarray(pi, dtype=float)
    R = spec.rates.T * pi[None, :] / pi[:, None]
    return ChainSpec(R, spec.state_labels)


def adjoint_generator(W: np.ndarray, pi) -> np.ndarray:
    """``W*[x, y] = W[y, x] pi_x / pi_y`` (forward convention)."""
    pi = np.asarray(pi, dtype=float)
    return W.T * pi[:, None] / pi[None, :]


@dataclass(frozen=True, eq=False)
class AdjointRepresentation:
    mu: np.ndarray
    h: np.ndarray
    w_plus: np.ndarray
    w_star: np.ndarray
    defect: float


def representation(spec: ChainSpec, mu, pi=None) -> AdjointRepresentation:
    """Build ``W+_mu`` and recover ``W* = h^{-1} W+_mu h``.

    ``defect`` is the entrywise distance between the recovered ``W*`` and the
    direct pi-adjoint, relative to ``max(1, max|W*|)``.
    """
    mu = np.asarray(mu, dtype=float).ravel()
    if mu.size != spec.n_states:
        raise ValueError("reference measure has the wrong length")
    if np.any(mu <= 0):
        raise ZeroReference("reference measure must be strictly positive")
    pi = stationary(spec) if pi is None else np.asarray(pi, dtype=float)
    W = generator(spec)
    w_plus = W.T * mu[:, None] / mu[None, :]
    h = mu / pi
    w_star = w_plus * h[None, :] / h[:, None]
    direct = adjoint_generator(W, pi)
    defect = float(np.abs(w_star - direct).max() / max(1.0, np.abs(direct).max()))
    return AdjointRepresentation(mu, h, w_plus, w_star, defect)


def dual_force(spec: ChainSpec, rho, pi=None) -> EdgeField:
    """Force of the adjoint chain evaluated at ``rho``."""
    rho = as_density(rho, spec.n_states)
    _, Fs = mobility_force(adjoint_chain(spec, pi), rho)
    return Fs


def canonical_split(spec: ChainSpec, rho, pi=None) -> tuple[EdgeField, EdgeField]:
    """``(F_S, F_A)`` with the dual force as the iso-dissipation force."""
    _, F = mobility_force(spec, rho)
    return force_split(F, dual_force(spec, rho, pi))
