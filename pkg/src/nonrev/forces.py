"""Edge-level thermodynamics of a Markov chain.

For a chain with rates r and a density rho, every undirected edge {x, y}
carries a mobility ``a_xy = 2 sqrt(rho_x r_xy rho_y r_yx)``, a force
``F_xy = log(rho_x r_xy / (rho_y r_yx))`` and a net flux
``j_xy = a_xy sinh(F_xy / 2) = rho_x r_xy - rho_y r_yx``.

Edge fields are stored once per undirected edge using the ``x < y``
representative; the pairing is the sum over undirected edges. With that
pairing the dissipation potentials

    Psi*(f) = sum 2 a (cosh(f/2) - 1)
    Psi(j)  = sum 2 j arsinh(j/a) - 2 sqrt(a^2 + j^2) + 2 a

are a Legendre pair and ``grad Psi*(F) = j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import optimize

from .chain import ChainSpec, as_density
from .errors import LevelSetInfeasible, NotOnLevelSet, ZeroDensity, ZeroRate
from .solvers import GridSpec, cosh_minus_one, legendre_oracle

__all__ = [
    "EdgeField",
    "Mobility",
    "mobility_force",
    "flux",
    "physical_flux",
    "pairing",
    "psi_star",
    "psi",
    "grad_psi_star",
    "grad_psi",
    "DissipationPair",
    "entropy_production",
    "bregman",
    "Flip",
    "Move",
    "Dual",
    "iso_force_family",
    "force_split",
    "EntropySplit",
    "entropy_decomposition",
]


def _edge_array(edges) -> np.ndarray:
    e = np.asarray(edges, dtype=int).reshape(-1, 2)
    if np.any(e[:, 0] >= e[:, 1]):
        raise ValueError("edges must be stored as pairs x < y")
    return e


@dataclass(frozen=True, eq=False)
class EdgeField:
    """Antisymmetric function on the edges: ``u[y, x] = -u[x, y]``."""

    edges: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        e = _edge_array(self.edges)
        v = np.array(self.values, dtype=float).ravel()
        if v.size != e.shape[0]:
            raise ValueError("one value per edge required")
        e.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, edges):
        e = _edge_array(edges)
        return cls(e, np.zeros(e.shape[0]))

    @classmethod
    def from_json(cls, obj):
        rows = sorted(
            ((x, y, v) if x < y else (y, x, -v)) for x, y, v in
            ((int(a), int(b), float(c)) for a, b, c in obj["edges"])
        )
        return cls([(x, y) for x, y, _ in rows], [v for _, _, v in rows])

    def to_json(self) -> dict:
        return {"edges": [[int(x), int(y), float(v)] for (x, y), v in zip(self.edges, self.values)]}

    def value(self, x: int, y: int) -> float:
        lo, hi, sign = (x, y, 1.0) if x < y else (y, x, -1.0)
        hit = np.flatnonzero((self.edges[:, 0] == lo) & (self.edges[:, 1] == hi))
        return sign * float(self.values[hit[0]]) if hit.size else 0.0

    def as_matrix(self, n_states: int) -> np.ndarray:
        U = np.zeros((n_states, n_states))
        U[self.edges[:, 0], self.edges[:, 1]] = self.values
        U[self.edges[:, 1], self.edges[:, 0]] = -self.values
        return U

    def with_values(self, values) -> "EdgeField":
        return EdgeField(self.edges, values)

    def _check(self, other: "EdgeField"):
        if not np.array_equal(self.edges, other.edges):
            raise ValueError("edge fields live on different edge sets")

    def __add__(self, other):
        self._check(other)
        return EdgeField(self.edges, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return EdgeField(self.edges, self.values - other.values)

    def __neg__(self):
        return EdgeField(self.edges, -self.values)

    def __mul__(self, c):
        return EdgeField(self.edges, self.values * float(c))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return EdgeField(self.edges, self.values / float(c))

    def __len__(self):
        return self.values.size


@dataclass(frozen=True, eq=False)
class Mobility:
    """Symmetric positive edge weights ``a_xy = a_yx``."""

    edges: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        e = _edge_array(self.edges)
        v = np.array(self.values, dtype=float).ravel()
        if v.size != e.shape[0] or np.any(v <= 0):
            raise ValueError("mobility needs one positive value per edge")
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "values", v)

    def _check(self, field: EdgeField):
        if not np.array_equal(self.edges, field.edges):
            raise ValueError("mobility and field live on different edge sets")


def mobility_force(spec: ChainSpec, rho) -> tuple[Mobility, EdgeField]:
    rho = as_density(rho, spec.n_states)
    edges = spec.edges()
    x, y = edges[:, 0], edges[:, 1]
    fwd = spec.rates[x, y]
    bwd = spec.rates[y, x]
    bad = (fwd <= 0) | (bwd <= 0)
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise ZeroRate(f"edge ({x[k]}, {y[k]}) lacks a rate in one direction")
    need = np.unique(edges)
    if np.any(rho[need] <= 0):
        s = int(need[np.flatnonzero(rho[need] <= 0)[0]])
        raise ZeroDensity(f"density vanishes at state {s}")
    pf = rho[x] * fwd
    pb = rho[y] * bwd
    a = 2.0 * np.sqrt(pf * pb)
    F = np.log(pf) - np.log(pb)
    return Mobility(edges, a), EdgeField(edges, F)


def flux(mob: Mobility, F: EdgeField) -> EdgeField:
    mob._check(F)
    return F.with_values(mob.values * np.sinh(F.values / 2.0))


def physical_flux(spec: ChainSpec, rho) -> EdgeField:
    """Net probability current ``rho_x r_xy - rho_y r_yx`` computed directly."""
    rho = as_density(rho, spec.n_states)
    edges = spec.edges()
    x, y = edges[:, 0], edges[:, 1]
    return EdgeField(edges, rho[x] * spec.rates[x, y] - rho[y] * spec.rates[y, x])


def pairing(u: EdgeField, v: EdgeField) -> float:
    """Undirected-edge sum of ``u_xy v_xy`` (half of the ordered-pair sum)."""
    u._check(v)
    return float(u.values @ v.values)


def psi_star(mob: Mobility, f: EdgeField) -> float:
    mob._check(f)
    return float(np.sum(2.0 * mob.values * cosh_minus_one(f.values / 2.0)))


def _psi_terms(a, j):
    # 2a - 2 sqrt(a^2 + j^2) rewritten to avoid cancellation at small j
    root = np.hypot(a, j)
    return 2.0 * j * np.arcsinh(j / a) - 2.0 * j * j / (a + root)


def psi(mob: Mobility, j: EdgeField) -> float:
    mob._check(j)
    return float(np.sum(_psi_terms(mob.values, j.values)))


def grad_psi_star(mob: Mobility, f: EdgeField) -> EdgeField:
    mob._check(f)
    return f.with_values(mob.values * np.sinh(f.values / 2.0))


def grad_psi(mob: Mobility, j: EdgeField) -> EdgeField:
    mob._check(j)
    return j.with_values(2.0 * np.arcsinh(j.values / mob.values))


class DissipationPair:
    """Closed-form ``Psi``/``Psi*`` for one mobility, plus a grid-sup check."""

    def __init__(self, mob: Mobility):
        self.mob = mob

    def psi(self, j: EdgeField) -> float:
        return psi(self.mob, j)

    def psi_star(self, f: EdgeField) -> float:
        return psi_star(self.mob, f)

    def grad_psi(self, j: EdgeField) -> EdgeField:
        return grad_psi(self.mob, j)

    def grad_psi_star(self, f: EdgeField) -> EdgeField:
        return grad_psi_star(self.mob, f)

    def psi_by_oracle(self, j: EdgeField, grid: GridSpec | None = None) -> float:
        """Legendre transform of ``Psi*`` by brute-force grid supremum.

        Blocks of at most two edges are handled jointly; larger fields are
        split into such blocks since ``Psi*`` is separable.
        """
        self.mob._check(j)
        a = self.mob.values
        total = 0.0
        for k in range(0, a.size, 2):
            ak = a[k : k + 2]
            jk = j.values[k : k + 2]

            def f(pts, ak=ak):
                return np.sum(2.0 * ak * cosh_minus_one(pts / 2.0), axis=-1)

            total += legendre_oracle(f, jk, grid)
        return total


def entropy_production(j: EdgeField, F: EdgeField) -> float:
    """``e = 2 <j, F>``."""
    return 2.0 * pairing(j, F)


def bregman(mob: Mobility, j1: EdgeField, j2: EdgeField) -> float:
    """``Psi(j1) - Psi(j2) - <j1 - j2, grad Psi(j2)>``."""
    mob._check(j1)
    mob._check(j2)
    a = mob.values
    g2 = 2.0 * np.arcsinh(j2.values / a)
    terms = _psi_terms(a, j1.values) - _psi_terms(a, j2.values) - (j1.values - j2.values) * g2
    return float(np.sum(terms))


# -- iso-dissipation forces ------------------------------------------------


@dataclass(frozen=True)
class Flip:
    """Reverse the sign of the force on the listed edge indices."""

    edges: Sequence[int] = ()


@dataclass(frozen=True)
class Move:
    """Shift edge ``e1`` by ``delta`` and re-solve edge ``e2`` onto the level set."""

    e1: int
    e2: int
    delta: float


@dataclass(frozen=True)
class Dual:
    """Use the dual (adjoint-chain) force at ``rho``."""

    spec: ChainSpec
    rho: np.ndarray


def _edge_level(a, f):
    return 2.0 * a * cosh_minus_one(f / 2.0)


def iso_force_family(mob: Mobility, F: EdgeField, selector) -> EdgeField:
    """Produce a force with the same ``Psi*`` level as ``F``."""
    mob._check(F)
    if isinstance(selector, Flip):
        v = F.values.copy()
        idx = np.asarray(list(selector.edges), dtype=int)
        v[idx] = -v[idx]
        return F.with_values(v)
    if isinstance(selector, Move):
        e1, e2 = selector.e1, selector.e2
        if e1 == e2:
            raise ValueError("Move needs two distinct edges")
        a, v = mob.values, F.values.copy()
        target = (_edge_level(a[e1], v[e1]) + _edge_level(a[e2], v[e2])
                  - _edge_level(a[e1], v[e1] + selector.delta))
        if target < 0:
            raise LevelSetInfeasible(
                f"shifting edge {e1} by {selector.delta} exceeds the dissipation budget"
            )
        sign = -1.0 if v[e2] < 0 else 1.0
        g = lambda s: _edge_level(a[e2], s) - target  # noqa: E731
        hi = 1.0
        while g(hi) < 0:
            hi *= 2.0
        root = optimize.bisect(g, 0.0, hi, xtol=1e-12) if target > 0 else 0.0
        v[e1] += selector.delta
        v[e2] = sign * root
        return F.with_values(v)
    if isinstance(selector, Dual):
        from .duality import dual_force

        Fs = dual_force(selector.spec, selector.rho)
        F._check(Fs)
        return Fs
    raise TypeError(f"unknown selector {selector!r}")


def force_split(F: EdgeField, F_iso: EdgeField) -> tuple[EdgeField, EdgeField]:
    """``F_S = (F + F_iso)/2`` and ``F_A = F - F_S``, so they add back to F exactly."""
    F._check(F_iso)
    FS = F.with_values((F.values + F_iso.values) / 2.0)
    FA = F.with_values(F.values - FS.values)
    return FS, FA


@dataclass(frozen=True)
class EntropySplit:
    e: float
    term1: float
    term2: float
    defect: float
    level_defect: float

    def to_json(self) -> dict:
        return {
            "e": self.e,
            "term1": self.term1,
            "term2": self.term2,
            "defect": self.defect,
            "level_set_defect": self.level_defect,
        }


def entropy_decomposition(spec: ChainSpec, rho, F_iso: EdgeField, level_tol=1e-8) -> EntropySplit:
    """Split ``e`` into ``D[j || -j_iso] + D[j || j_iso]``."""
    mob, F = mobility_force(spec, rho)
    level = abs(psi_star(mob, F_iso) - psi_star(mob, F))
    if level > level_tol:
        raise NotOnLevelSet(f"|Psi*(F_iso) - Psi*(F)| = {level:.3e} > {level_tol:.1e}")
    j = flux(mob, F)
    j_iso = flux(mob, F_iso)
    e = entropy_production(j, F)
    t1 = bregman(mob, j, -j_iso)
    t2 = bregman(mob, j, j_iso)
    return EntropySplit(e, t1, t2, abs(e - t1 - t2), level)
