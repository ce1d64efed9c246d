"""Hamiltonians, their Legendre duals and the splitting identities.

Two families of Hamiltonians are provided:

* edge level, built from the dissipation potential,
  ``H(xi) = sum a [cosh(F/2 + xi) - cosh(F/2)]`` for an edge field ``xi``;
* state level, built from the generator,
  ``H(xi) = sum_x rho_x sum_y r_xy (exp(xi_y - xi_x) - 1)`` for a state
  potential ``xi``. It is invariant under constant shifts of ``xi``.

The two agree through the discrete gradient ``(grad xi)_xy = xi_y - xi_x``.
The Lagrangian is always computed as the numerical Legendre transform of the
Hamiltonian; no closed form for it is assumed anywhere in this module.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize

from .chain import ChainSpec, as_density
from .errors import NoConvergence, NonConvexPart, NotReversible
from .forces import EdgeField, Mobility, mobility_force, psi, psi_star
from .solvers import NewtonConfig, newton_minimize

__all__ = [
    "Hamiltonian",
    "hamiltonian_from_psi",
    "edge_hamiltonian",
    "hamiltonian_from_generator",
    "state_hamiltonian",
    "linear_hamiltonian",
    "constant_hamiltonian",
    "edge_gradient",
    "recover_psi_star",
    "LagrangianValue",
    "legendre",
    "min_hamiltonian",
    "convexity_probe",
    "reversibility_probe",
    "SplitReport",
    "decompose",
    "dissipation_from_hamiltonian",
    "reversible_value",
    "constant_part_value",
    "LinearPartReport",
    "linear_part_value",
    "DonskerVaradhan",
    "donsker_varadhan",
]

Evaluator = Callable[[np.ndarray], "tuple[float, np.ndarray, np.ndarray]"]


def _vec(xi) -> np.ndarray:
    if isinstance(xi, EdgeField):
        return np.asarray(xi.values, dtype=float)
    return np.asarray(xi, dtype=float).ravel()


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    """A convex function of the tilt ``xi`` at a frozen density.

    ``fn(xi)`` returns ``(value, gradient, hessian)``. ``kind`` is ``"edge"``
    or ``"state"``; ``gauge`` marks invariance under ``xi -> xi + c``.
    Edge Hamiltonians built from a dissipation potential keep ``mobility``,
    ``force`` and the active-edge ``mask`` so Lagrangian values can be
    compared against the closed-form potentials.
    """

    fn: Evaluator
    dim: int
    kind: str
    gauge: bool = False
    vanishes_at_zero: bool = True
    edges: np.ndarray | None = None
    mobility: Mobility | None = None
    force: EdgeField | None = None
    mask: np.ndarray | None = None

    def __call__(self, xi) -> float:
        return float(self.fn(self._check(xi))[0])

    def grad(self, xi) -> np.ndarray:
        return self.fn(self._check(xi))[1]

    def hess(self, xi) -> np.ndarray:
        return self.fn(self._check(xi))[2]

    def _check(self, xi) -> np.ndarray:
        v = _vec(xi)
        if v.size != self.dim:
            raise ValueError(f"expected a {self.kind} field of size {self.dim}, got {v.size}")
        return v

    def __add__(self, other: "Hamiltonian") -> "Hamiltonian":
        if self.kind != other.kind or self.dim != other.dim:
            raise ValueError("cannot add Hamiltonians on different spaces")
        f1, f2 = self.fn, other.fn

        def fn(xi):
            a, b = f1(xi), f2(xi)
            return a[0] + b[0], a[1] + b[1], a[2] + b[2]

        meta = {}
        if (
            self.mobility is not None
            and self.mobility is other.mobility
            and self.force is other.force
            and not np.any(self.mask & other.mask)
        ):
            meta = dict(mobility=self.mobility, force=self.force, mask=self.mask | other.mask)
        return Hamiltonian(
            fn, self.dim, self.kind,
            gauge=self.gauge and other.gauge,
            vanishes_at_zero=self.vanishes_at_zero and other.vanishes_at_zero,
            edges=self.edges if self.edges is not None else other.edges,
            **meta,
        )

    def __neg__(self):
        raise TypeError("negated Hamiltonians are not convex")


def edge_hamiltonian(mob: Mobility, F: EdgeField, mask=None) -> Hamiltonian:
    """``sum_{mask} a [cosh(F/2 + xi) - cosh(F/2)]``."""
    mob._check(F)
    a = mob.values
    half = F.values / 2.0
    m = np.ones(a.size, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    w = a * m

    def fn(xi):
        with np.errstate(over="ignore"):
            # cosh(A + x) - cosh(A) = 2 sinh(A + x/2) sinh(x/2)
            val = float(np.sum(2.0 * w * np.sinh(half + xi / 2.0) * np.sinh(xi / 2.0)))
            g = w * np.sinh(half + xi)
            H = np.diag(w * np.cosh(half + xi))
        return val, g, H

    return Hamiltonian(fn, a.size, "edge", edges=F.edges, mobility=mob, force=F, mask=m)


def hamiltonian_from_psi(spec: ChainSpec, rho, mask=None) -> Hamiltonian:
    """``H(xi) = (Psi*(F + 2 xi) - Psi*(F)) / 2`` on the chain's edges."""
    mob, F = mobility_force(spec, rho)
    return edge_hamiltonian(mob, F, mask)


def state_hamiltonian(rates: np.ndarray, rho) -> Hamiltonian:
    """``sum_x rho_x sum_y r_xy (exp(xi_y - xi_x) - 1)`` for an arbitrary rate array.

    Signed ``rates`` are accepted (useful for antisymmetric parts), in which
    case the result need not be convex.
    """
    R = np.asarray(rates, dtype=float)
    rho = np.asarray(rho, dtype=float)
    C = rho[:, None] * R

    def fn(xi):
        D = xi[None, :] - xi[:, None]
        with np.errstate(over="ignore"):
            val = float(np.sum(C * np.expm1(D)))
            M = C * np.exp(D)
        col, row = M.sum(axis=0), M.sum(axis=1)
        H = np.diag(col + row) - M - M.T
        return val, col - row, H

    return Hamiltonian(fn, R.shape[0], "state", gauge=True)


def hamiltonian_from_generator(spec: ChainSpec, rho) -> Hamiltonian:
    rho = as_density(rho, spec.n_states)
    return state_hamiltonian(spec.rates, rho)


def linear_hamiltonian(w, kind: str = "state", edges=None) -> Hamiltonian:
    """``<w, xi>``; convex (affine) with Legendre domain ``{w}``."""
    w = _vec(w).copy()
    zero = np.zeros((w.size, w.size))

    def fn(xi):
        return float(w @ xi), w, zero

    gauge = kind == "state" and abs(w.sum()) <= 1e-12 * max(1.0, np.abs(w).sum())
    return Hamiltonian(fn, w.size, kind, gauge=gauge, edges=edges)


def constant_hamiltonian(c: float, dim: int, kind: str = "state") -> Hamiltonian:
    c = float(c)
    zg, zh = np.zeros(dim), np.zeros((dim, dim))
    return Hamiltonian(lambda xi: (c, zg, zh), dim, kind, gauge=True,
                       vanishes_at_zero=(c == 0.0))


def edge_gradient(edges, xi) -> EdgeField:
    """Discrete gradient ``xi_y - xi_x`` on each edge ``x < y``."""
    e = np.asarray(edges, dtype=int)
    xi = _vec(xi)
    return EdgeField(e, xi[e[:, 1]] - xi[e[:, 0]])


def recover_psi_star(H: Hamiltonian, F: EdgeField, xi: EdgeField) -> float:
    """``2 [H((xi - F)/2) - H(-F/2)]``; equals ``Psi*(xi)`` for potential-built H."""
    f = _vec(F)
    x = _vec(xi)
    return 2.0 * (H((x - f) / 2.0) - H(-f / 2.0))


# -- Legendre transform ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class LagrangianValue:
    value: float
    optimizer: np.ndarray
    residual: float
    iterations: int
    pairing_coefficient: float | None = None

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "optimizer": self.optimizer.tolist(),
            "residual": self.residual,
            "iterations": self.iterations,
            "measured_pairing_coefficient": self.pairing_coefficient,
        }


def _pairing_coefficient(H: Hamiltonian, j: np.ndarray, value: float) -> float | None:
    # solves  L = (Psi(j) - c <j, F> + Psi*(F)) / 2  for c on the active edges
    if H.mobility is None or H.force is None:
        return None
    m = H.mask
    edges = H.edges[m]
    mob = Mobility(edges, H.mobility.values[m])
    F = EdgeField(edges, H.force.values[m])
    jf = EdgeField(edges, j[m])
    jF = float(jf.values @ F.values)
    if abs(jF) < 1e-8:
        return None
    return (psi(mob, jf) + psi_star(mob, F) - 2.0 * value) / jF


def legendre(H: Hamiltonian, j, cfg: NewtonConfig | None = None) -> LagrangianValue:
    """``L(j) = sup_xi <j, xi> - H(xi)`` by damped Newton from ``xi = 0``.

    State-level fluxes must sum to zero (otherwise the supremum is infinite
    along constant shifts). The optimizer of a gauge-invariant H is returned
    with zero mean.
    """
    j = H._check(j)
    if H.gauge and abs(j.sum()) > 1e-9 * max(1.0, np.abs(j).sum()):
        raise NoConvergence("flux has a non-zero total; the supremum is infinite")

    def obj(xi):
        v, g, h = H.fn(xi)
        return v - j @ xi, g - j, h

    res = newton_minimize(obj, np.zeros(H.dim), cfg, gauge=H.gauge)
    value = -res.value
    return LagrangianValue(value, res.x, res.residual, res.iterations,
                           _pairing_coefficient(H, j, value))


@dataclass(frozen=True, eq=False)
class MinResult:
    value: float
    xi_star: np.ndarray
    residual: float
    lagrangian_at_zero: float


def min_hamiltonian(H: Hamiltonian, cfg: NewtonConfig | None = None) -> MinResult:
    """Minimize ``H``; by Legendre duality ``min H = -L(0)``."""
    res = newton_minimize(H.fn, np.zeros(H.dim), cfg, gauge=H.gauge)
    L0 = legendre(H, np.zeros(H.dim), cfg)
    return MinResult(res.value, res.x, res.residual, L0.value)


# -- probes ----------------------------------------------------------------


def _probe_points(H: Hamiltonian, rng, scale):
    return rng.normal(scale=scale, size=H.dim)


def convexity_probe(H: Hamiltonian, n_tests=64, tol=1e-9, seed=0, scale=1.0) -> float:
    """Worst relative midpoint-convexity violation over random pairs."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_tests):
        x, y = _probe_points(H, rng, scale), _probe_points(H, rng, scale)
        hx, hy, hm = H(x), H(y), H((x + y) / 2.0)
        worst = max(worst, (hm - 0.5 * (hx + hy)) / (1.0 + abs(hx) + abs(hy)))
    return worst


def reversibility_probe(H: Hamiltonian, dS, n_tests=64, seed=0, scale=1.0) -> float:
    """Worst relative defect of ``H(xi) = H(dS - xi)`` over random ``xi``."""
    dS = _vec(dS)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_tests):
        x = _probe_points(H, rng, scale)
        a, b = H(x), H(dS - x)
        worst = max(worst, abs(a - b) / (1.0 + abs(a)))
    return worst


# -- splitting -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SplitReport:
    lagrangian: float
    parts: list
    xi_prime: np.ndarray
    residual: float
    measured_pairing_coefficient: float | None
    defect: float

    def to_json(self) -> dict:
        return {
            "lagrangian": self.lagrangian,
            "parts": [{"value": v, "flux_argument": np.asarray(s).tolist()} for v, s in self.parts],
            "xi_prime": self.xi_prime.tolist(),
            "residual": self.residual,
            "measured_pairing_coefficient": self.measured_pairing_coefficient,
            "sum_defect": self.defect,
        }


def decompose(H1: Hamiltonian, H2: Hamiltonian, j, cfg: NewtonConfig | None = None,
              probe: bool = True, tol=1e-9, seed=0) -> SplitReport:
    """Split ``L(j)`` for ``H = H1 + H2`` into ``L1(s1) + L2(s2)``.

    ``xi'`` solves ``grad H(xi') = j`` and ``s_k = grad H_k(xi')``. Each
    ``L_k`` is obtained by its own Legendre solve.
    """
    if probe:
        for name, Hk in (("H1", H1), ("H2", H2)):
            worst = convexity_probe(Hk, tol=tol, seed=seed)
            if worst > tol:
                raise NonConvexPart(f"{name} violates midpoint convexity by {worst:.3e}")
    H = H1 + H2
    j = H._check(j)
    full = legendre(H, j, cfg)
    xi = full.optimizer
    s1, s2 = H1.grad(xi), H2.grad(xi)
    L1 = legendre(H1, s1, cfg)
    L2 = legendre(H2, s2, cfg)
    return SplitReport(
        lagrangian=full.value,
        parts=[(L1.value, s1), (L2.value, s2)],
        xi_prime=xi,
        residual=max(full.residual, L1.residual, L2.residual),
        measured_pairing_coefficient=full.pairing_coefficient,
        defect=abs(full.value - L1.value - L2.value),
    )


def dissipation_from_hamiltonian(H2: Hamiltonian, dS) -> Hamiltonian:
    """``Psi2*(xi) = 2 [H2((xi + dS)/2) - H2(dS/2)]`` for H2 reversible about dS.

    The shift uses the driving force ``F = -dS``; with this sign ``Psi2*`` is
    even, vanishes at zero and reduces to ``Psi*`` for edge Hamiltonians.
    """
    dS = H2._check(dS)
    h_mid = H2(dS / 2.0)

    def fn(xi):
        v, g, h = H2.fn((xi + dS) / 2.0)
        return 2.0 * (v - h_mid), g, 0.5 * h

    return Hamiltonian(fn, H2.dim, H2.kind, gauge=H2.gauge, edges=H2.edges)


def _require_reversible(H2, dS, tol, seed):
    worst = reversibility_probe(H2, dS, seed=seed)
    if worst > tol:
        raise NotReversible(f"H(xi) != H(dS - xi) by {worst:.3e}")


def reversible_value(H2: Hamiltonian, dS, tol=1e-9, seed=0) -> float:
    """``Psi2*(dS) / 2``, which equals ``L2(0)`` for a reversible H2."""
    dS = H2._check(dS)
    _require_reversible(H2, dS, tol, seed)
    return 0.5 * dissipation_from_hamiltonian(H2, dS)(dS)


def constant_part_value(H1: Hamiltonian, h2_const, rho=None, cfg=None) -> float:
    """``L(0) = L1(0) - H2(rho)`` when ``H2`` does not depend on ``xi``.

    ``h2_const`` may be a number or a callable of ``rho``.
    """
    c = float(h2_const(rho) if callable(h2_const) else h2_const)
    return legendre(H1, np.zeros(H1.dim), cfg).value - c


@dataclass(frozen=True)
class LinearPartReport:
    lagrangian: float
    direct: float
    psi2: float
    psi2_star: float
    pairing: float
    consistent_expansion: float
    consistent_defect: float
    display_expansion: float
    display_expansion_defect: float
    measured_pairing_coefficient: float | None
    orthogonal: bool
    orthogonal_formula: float | None
    orthogonal_defect: float | None
    orthogonal_display: float | None
    orthogonal_display_defect: float | None

    def to_json(self) -> dict:
        return dict(self.__dict__)


def linear_part_value(W_field, H2: Hamiltonian, dS, cfg=None, tol=1e-9, seed=0,
                      orth_tol=1e-10) -> LinearPartReport:
    """Evaluate ``L(0)`` for ``H = <W, xi> + H2`` with H2 reversible about dS.

    The convention-free identity ``L(0) = L2(-W)`` is returned as
    ``lagrangian``; ``direct`` is ``sup(-H)`` solved on the full Hamiltonian.
    The expansion in terms of ``Psi2``, ``Psi2*`` and ``<W, dS>`` is reported
    twice: with the coefficient forced by conjugacy (``-1/2``) and with the
    ``+1`` coefficient of the closed-form display, each with its defect.
    """
    W = H2._check(W_field)
    dS = H2._check(dS)
    _require_reversible(H2, dS, tol, seed)
    L2 = legendre(H2, -W, cfg).value
    direct = legendre(linear_hamiltonian(W, H2.kind, H2.edges) + H2, np.zeros(H2.dim), cfg).value
    P2s = dissipation_from_hamiltonian(H2, dS)
    psi2 = legendre(P2s, -W, cfg).value
    psi2_star = P2s(dS)
    wds = float(W @ dS)
    base = 0.5 * psi2 + 0.5 * psi2_star
    consistent = base - 0.5 * wds
    display = base + wds
    coef = (L2 - base) / wds if abs(wds) > 1e-8 else None
    orth = abs(wds) <= orth_tol
    of = od = disp = dd = None
    if orth:
        of, od = base, abs(L2 - base)
        disp = psi2 + P2s(-0.5 * dS)
        dd = abs(L2 - disp)
    return LinearPartReport(
        lagrangian=L2, direct=direct, psi2=psi2, psi2_star=psi2_star, pairing=wds,
        consistent_expansion=consistent, consistent_defect=abs(L2 - consistent),
        display_expansion=display, display_expansion_defect=abs(L2 - display),
        measured_pairing_coefficient=coef, orthogonal=orth,
        orthogonal_formula=of, orthogonal_defect=od,
        orthogonal_display=disp, orthogonal_display_defect=dd,
    )


# -- Donsker-Varadhan ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DonskerVaradhan:
    value: float
    xi: np.ndarray
    residual: float
    u_form: float | None = None
    defect: float | None = None

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "xi": self.xi.tolist(),
            "residual": self.residual,
            "u_form_value": self.u_form,
            "two_route_defect": self.defect,
        }


def _dv_u_form(spec: ChainSpec, rho) -> float:
    """``sup_{u>0} -sum_x rho_x (L u)_x / u_x`` with ``(L u)_x = sum_y r_xy (u_y - u_x)``."""
    R = spec.rates
    out = R.sum(axis=1)

    def G(u):
        Lu = R @ u - out * u
        val = float(rho @ (Lu / u))
        grad = R.T @ (rho / u) - rho * (R @ u) / u**2
        return val, grad

    n = spec.n_states
    res = optimize.minimize(
        G, np.ones(n), jac=True, method="L-BFGS-B",
        bounds=[(1e-12, None)] * n,
        options={"ftol": 1e-16, "gtol": 1e-13, "maxiter": 20000, "maxcor": 30},
    )
    return -float(res.fun)


def donsker_varadhan(spec: ChainSpec, rho, check: bool = True,
                     cfg: NewtonConfig | None = None) -> DonskerVaradhan:
    """Rate function of the empirical occupation measure, ``L(rho, 0)``.

    With ``check=True`` the value is recomputed from the classical
    ``u``-form with an unrelated optimizer and the difference is reported.
    """
    rho = as_density(rho, spec.n_states)
    H = hamiltonian_from_generator(spec, rho)
    lv = legendre(H, np.zeros(spec.n_states), cfg)
    if not check:
        return DonskerVaradhan(lv.value, lv.optimizer, lv.residual)
    u_val = _dv_u_form(spec, rho)
    return DonskerVaradhan(lv.value, lv.optimizer, lv.residual, u_val, abs(u_val - lv.value))
