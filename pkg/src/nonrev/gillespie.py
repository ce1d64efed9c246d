"""Exact jump simulation and ergodic estimators.

A trajectory records the entry time of every visited state (the first entry
is ``t = 0``) together with the horizon ``T``; the last state is occupied on
``[times[-1], T]``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .chain import ChainSpec
from .errors import EmptyTrajectory, InfiniteContribution
from .forces import EdgeField

__all__ = [
    "Trajectory",
    "resolve_seed",
    "simulate",
    "empirical_measures",
    "entropy_rate_estimate",
    "jump_log_ratio_rate",
    "holding_times",
]

SEED_ENV = "NONREV_SEED"


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    seed: int | None
    T: float

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        s = np.asarray(self.states, dtype=np.int64)
        if t.shape != s.shape or t.ndim != 1:
            raise ValueError("times and states must be 1-D arrays of equal length")
        if t.size and np.any(np.diff(t) <= 0):
            raise ValueError("jump times must be strictly increasing")
        if t.size and t[-1] > self.T:
            raise ValueError("jump after the horizon")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", s)

    @property
    def n_jumps(self) -> int:
        return max(self.states.size - 1, 0)

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "T": self.T,
            "times": self.times.tolist(),
            "states": self.states.tolist(),
        }

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, (str, Path)):
            obj = json.loads(Path(obj).read_text())
        return cls(obj["times"], obj["states"], obj.get("seed"), float(obj["T"]))


def resolve_seed(seed: int | None) -> int | None:
    """``NONREV_SEED`` from the environment wins over the argument."""
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        return int(env)
    return seed


def simulate(spec: ChainSpec, x0: int, T: float, seed=None) -> Trajectory:
    """Exponential-clock simulation up to time ``T``.

    ``seed`` may be an int, a ``SeedSequence`` or None. Uniforms are drawn
    in blocks from a PCG64 generator, so a given seed reproduces the same
    trajectory bit for bit.
    """
    n = spec.n_states
    if not 0 <= int(x0) < n:
        raise ValueError(f"initial state {x0} outside 0..{n - 1}")
    if not T > 0:
        raise ValueError("horizon T must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))
    recorded = seed.entropy if isinstance(seed, np.random.SeedSequence) else seed
    R = np.asarray(spec.rates)
    out = R.sum(axis=1)
    cum = np.cumsum(R, axis=1)

    times = [0.0]
    states = [int(x0)]
    t, x = 0.0, int(x0)
    block = 4096
    while True:
        waits = rng.standard_exponential(block)
        picks = rng.random(block)
        for w, u in zip(waits, picks):
            if out[x] <= 0:
                return Trajectory(times, states, recorded, float(T))
            t += w / out[x]
            if t >= T:
                return Trajectory(times, states, recorded, float(T))
            y = int(np.searchsorted(cum[x], u * out[x], side="right"))
            x = min(y, n - 1)
            times.append(t)
            states.append(x)


def holding_times(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """Completed sojourns ``(states, durations)``; the censored last one is dropped."""
    return traj.states[:-1], np.diff(traj.times)


def _occupation(traj: Trajectory, n: int) -> np.ndarray:
    ends = np.append(traj.times[1:], traj.T)
    return np.bincount(traj.states, weights=ends - traj.times, minlength=n)


def empirical_measures(traj: Trajectory, spec: ChainSpec) -> tuple[np.ndarray, EdgeField]:
    """Occupation fractions and net jump counts per unit time on each edge."""
    if traj.states.size == 0 or traj.T <= 0:
        raise EmptyTrajectory("trajectory has no occupied time")
    n = spec.n_states
    occ = _occupation(traj, n)
    rho = occ / occ.sum()
    counts = np.zeros((n, n))
    np.add.at(counts, (traj.states[:-1], traj.states[1:]), 1.0)
    edges = spec.edges()
    x, y = edges[:, 0], edges[:, 1]
    j = (counts[x, y] - counts[y, x]) / traj.T
    return rho, EdgeField(edges, j)


def jump_log_ratio_rate(traj: Trajectory, spec: ChainSpec) -> float:
    """``(1/T) sum_jumps log(r_xy / r_yx)``, which converges to ``<j, F>``."""
    if traj.states.size == 0:
        raise EmptyTrajectory("trajectory is empty")
    x, y = traj.states[:-1], traj.states[1:]
    fwd, bwd = spec.rates[x, y], spec.rates[y, x]
    bad = bwd <= 0
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise InfiniteContribution(f"jump {int(x[k])}->{int(y[k])} has no reverse rate")
    return float(np.sum(np.log(fwd / bwd)) / traj.T)


def entropy_rate_estimate(traj: Trajectory, spec: ChainSpec) -> float:
    """Pathwise estimate of ``e = 2 <j, F>``: twice the per-jump log-ratio rate."""
    return 2.0 * jump_log_ratio_rate(traj, spec)
