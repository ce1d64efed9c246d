"""Finite-state continuous-time Markov chains.

Conventions
-----------
``spec.rates[x, y]`` is the jump rate r_xy from ``x`` to ``y``. The forward
(density) generator ``W`` has ``W[y, x] = r_xy`` off the diagonal, i.e. the
column index is the source state, so densities evolve as ``d rho/dt = W rho``
and every column of ``W`` sums to zero. The backward generator acting on
observables is ``W.T``.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import linalg as sla

from .errors import InvalidChain, SingularSystem, StepTooLarge
from .solvers import rk4_step

__all__ = [
    "ChainSpec",
    "ValidationReport",
    "validate",
    "generator",
    "stationary",
    "evolve",
    "as_density",
]


@dataclass(frozen=True, eq=False)
class ChainSpec:
    """Rates of a finite chain stored as a dense matrix with zero diagonal."""

    rates: np.ndarray
    state_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        R = np.array(self.rates, dtype=float)
        if R.ndim != 2 or R.shape[0] != R.shape[1] or R.shape[0] < 1:
            raise ValueError("rates must be a square matrix")
        if not np.all(np.isfinite(R)):
            raise ValueError("rates must be finite")
        np.fill_diagonal(R, 0.0)
        R.setflags(write=False)
        object.__setattr__(self, "rates", R)
        if self.state_labels is not None:
            labels = tuple(str(s) for s in self.state_labels)
            if len(labels) != R.shape[0]:
                raise ValueError("state_labels length does not match n_states")
            object.__setattr__(self, "state_labels", labels)

    @property
    def n_states(self) -> int:
        return self.rates.shape[0]

    @classmethod
    def from_triples(cls, n_states, triples, state_labels=None):
        R = np.zeros((n_states, n_states))
        for x, y, r in triples:
            x, y = int(x), int(y)
            if x == y:
                raise ValueError(f"self-loop rate at state {x}")
            R[x, y] = float(r)
        return cls(R, state_labels)

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, (str, Path)):
            obj = json.loads(Path(obj).read_text())
        states = obj["states"]
        return cls.from_triples(len(states), obj["rates"], states)

    def to_json(self) -> dict:
        n = self.n_states
        labels = list(self.state_labels) if self.state_labels else [str(i) for i in range(n)]
        xs, ys = np.nonzero(self.rates)
        return {
            "states": labels,
            "rates": [[int(x), int(y), float(self.rates[x, y])] for x, y in zip(xs, ys)],
        }

    def edges(self) -> np.ndarray:
        """Undirected edge support as an ``(m, 2)`` array of pairs ``x < y``."""
        S = (self.rates != 0) | (self.rates.T != 0)
        xs, ys = np.nonzero(np.triu(S, 1))
        return np.stack([xs, ys], axis=1).astype(int)

    def scaled(self, factor: float) -> "ChainSpec":
        return ChainSpec(self.rates * factor, self.state_labels)


@dataclass(frozen=True)
class ValidationReport:
    n_states: int
    nonnegative: bool
    support_symmetric: bool
    irreducible: bool
    n_components: int
    negative_rates: list = field(default_factory=list)
    asymmetric_edges: list = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return self.nonnegative and self.irreducible

    def to_json(self) -> dict:
        return {
            "valid": self.valid,
            "n_states": self.n_states,
            "nonnegative": self.nonnegative,
            "support_symmetric": self.support_symmetric,
            "irreducible": self.irreducible,
            "n_components": self.n_components,
            "negative_rates": self.negative_rates,
            "asymmetric_edges": self.asymmetric_edges,
        }


def _reachable(adj: np.ndarray, start: int) -> np.ndarray:
    seen = np.zeros(adj.shape[0], dtype=bool)
    seen[start] = True
    queue = deque([start])
    while queue:
        x = queue.popleft()
        for y in np.flatnonzero(adj[x] & ~seen):
            seen[y] = True
            queue.append(y)
    return seen


def _strong_components(adj: np.ndarray) -> int:
    n = adj.shape[0]
    label = -np.ones(n, dtype=int)
    count = 0
    for x in range(n):
        if label[x] >= 0:
            continue
        comp = _reachable(adj, x) & _reachable(adj.T, x)
        label[comp] = count
        count += 1
    return count


def validate(spec: ChainSpec) -> ValidationReport:
    """Check rate signs, support symmetry and irreducibility; never raises."""
    R = spec.rates
    neg = [[int(x), int(y)] for x, y in zip(*np.nonzero(R < 0))]
    pos = R > 0
    asym = [[int(x), int(y)] for x, y in zip(*np.nonzero(pos & ~pos.T))]
    n_comp = _strong_components(pos)
    return ValidationReport(
        n_states=spec.n_states,
        nonnegative=not neg,
        support_symmetric=not asym,
        irreducible=n_comp == 1,
        n_components=n_comp,
        negative_rates=neg,
        asymmetric_edges=asym,
    )


def require_valid(spec: ChainSpec) -> None:
    report = validate(spec)
    if not report.nonnegative:
        raise InvalidChain(f"negative rates on {report.negative_rates}")
    if not report.irreducible:
        raise InvalidChain(f"chain is reducible ({report.n_components} communicating classes)")


def generator(spec: ChainSpec) -> np.ndarray:
    """Forward generator ``W`` with ``W[y, x] = r_xy`` and zero column sums."""
    W = spec.rates.T.copy()
    W[np.diag_indices_from(W)] = -spec.rates.sum(axis=1)
    return W


def stationary(spec: ChainSpec) -> np.ndarray:
    """Unique invariant density pi with ``W pi = 0`` and ``sum(pi) = 1``.

    Dense LU on ``W`` with its last row replaced by the normalization, plus
    one step of iterative refinement.
    """
    require_valid(spec)
    n = spec.n_states
    if n == 1:
        return np.ones(1)
    W = generator(spec)
    A = W.copy()
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    lu, piv = sla.lu_factor(A, check_finite=False)
    if np.min(np.abs(np.diag(lu))) <= n * np.finfo(float).eps * np.abs(A).max():
        raise SingularSystem("generator null space is not one-dimensional")
    pi = sla.lu_solve((lu, piv), b, check_finite=False)
    pi += sla.lu_solve((lu, piv), b - A @ pi, check_finite=False)
    if np.any(pi <= 0):
        raise SingularSystem("stationary solve produced non-positive entries")
    return pi / pi.sum()


def as_density(values, n_states: int | None = None, normalize: bool = False,
               positive: bool = False) -> np.ndarray:
    rho = np.array(values, dtype=float).ravel()
    if n_states is not None and rho.size != n_states:
        raise ValueError(f"density has {rho.size} entries, expected {n_states}")
    if np.any(rho < 0) or not np.all(np.isfinite(rho)):
        raise ValueError("density entries must be finite and non-negative")
    total = rho.sum()
    if normalize:
        rho = rho / total
    elif abs(total - 1.0) > 1e-12:
        raise ValueError(f"density sums to {total!r}, not 1")
    if positive and np.any(rho <= 0):
        raise ValueError("density must be strictly positive")
    return rho


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    densities: np.ndarray


def evolve(spec: ChainSpec, rho0, t_end: float, dt: float) -> Trajectory:
    """Integrate the master equation with fixed-step RK4.

    The last step is shortened to land exactly on ``t_end``. Raises
    StepTooLarge if any entry drops below -1e-8.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    rho = as_density(rho0, spec.n_states)
    W = generator(spec)
    n_steps = int(np.ceil(t_end / dt - 1e-12)) if t_end > 0 else 0
    times = [0.0]
    out = [rho]
    t = 0.0
    for _ in range(n_steps):
        h = min(dt, t_end - t)
        rho = rk4_step(lambda r: W @ r, rho, h)
        if rho.min() < -1e-8:
            raise StepTooLarge(f"density entry {rho.min():.3e} at t={t + h:.6g}; reduce dt")
        t += h
        times.append(t)
        out.append(rho)
    return Trajectory(np.array(times), np.array(out))
