"""Numerical kernels shared by the rest of the package.

Contents: damped Newton for smooth convex objectives, a brute-force grid
supremum used as an independent Legendre-transform oracle, a golden-section
wrapper, an RK4 stepper and a couple of cancellation-safe elementary
functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import linalg as sla
from scipy import optimize

from .errors import NoConvergence, RangeClipped

__all__ = [
    "NewtonConfig",
    "NewtonResult",
    "newton_minimize",
    "golden_section",
    "GridSpec",
    "legendre_oracle",
    "rk4_step",
    "cosh_minus_one",
]


@dataclass(frozen=True)
class NewtonConfig:
    grad_tol: float = 1e-10
    max_iter: int = 200
    armijo_c: float = 1e-4
    backtrack: float = 0.5

    def __post_init__(self):
        if not (self.grad_tol > 0 and self.max_iter > 0 and self.armijo_c > 0):
            raise ValueError("NewtonConfig fields must be positive")
        if not 0.0 < self.backtrack < 1.0:
            raise ValueError("backtrack must lie in (0, 1)")


@dataclass(frozen=True)
class NewtonResult:
    x: np.ndarray
    value: float
    residual: float
    iterations: int


def cosh_minus_one(x):
    """cosh(x) - 1 without cancellation near zero."""
    s = np.sinh(np.asarray(x, dtype=float) / 2.0)
    return 2.0 * s * s


def _newton_direction(g, H, gauge):
    n = g.size
    if gauge:
        # constant shifts are a null direction; pin them with a rank-one term
        scale = max(1.0, float(np.abs(np.diag(H)).max()))
        H = H + (scale / n) * np.ones((n, n))
    try:
        c, low = sla.cho_factor(H, check_finite=False)
        d = -sla.cho_solve((c, low), g, check_finite=False)
    except (np.linalg.LinAlgError, ValueError):
        # singular Hessian (e.g. objectives flat in some coordinates)
        d = -np.linalg.lstsq(H, g, rcond=1e-12)[0]
    if gauge:
        d -= d.mean()
    if not np.all(np.isfinite(d)) or g @ d >= 0.0:
        d = -g
    return d


def newton_minimize(
    fun: Callable[[np.ndarray], tuple[float, np.ndarray, np.ndarray]],
    x0,
    cfg: NewtonConfig | None = None,
    gauge: bool = False,
) -> NewtonResult:
    """Minimize a smooth convex function with backtracking Newton.

    ``fun(x)`` returns ``(value, gradient, hessian)``. With ``gauge=True`` the
    objective is assumed invariant under ``x -> x + c*1``; iterates are kept
    in the zero-mean gauge.

    Raises NoConvergence when ``max_iter`` is exhausted before the gradient
    sup-norm drops below ``grad_tol``.
    """
    cfg = cfg or NewtonConfig()
    x = np.array(x0, dtype=float)
    if gauge:
        x -= x.mean()
    f, g, H = fun(x)
    for it in range(cfg.max_iter + 1):
        res = float(np.max(np.abs(g))) if g.size else 0.0
        if res <= cfg.grad_tol:
            return NewtonResult(x, float(f), res, it)
        if it == cfg.max_iter:
            break
        d = _newton_direction(g, H, gauge)
        slope = float(g @ d)
        # rounding slack so tiny final steps are not rejected
        slack = 1e-14 * (1.0 + abs(f))
        t = 1.0
        with np.errstate(over="ignore", invalid="ignore"):
            while True:
                x_new = x + t * d
                f_new, g_new, H_new = fun(x_new)
                if np.isfinite(f_new) and f_new <= f + cfg.armijo_c * t * slope + slack:
                    break
                t *= cfg.backtrack
                if t < 1e-16:
                    raise NoConvergence(
                        f"line search failed at iteration {it} (residual {res:.3e})"
                    )
        x, f, g, H = x_new, f_new, g_new, H_new
    raise NoConvergence(
        f"Newton did not reach residual {cfg.grad_tol:.1e} in {cfg.max_iter} iterations "
        f"(residual {res:.3e})"
    )


def golden_section(f: Callable[[float], float], bracket: tuple[float, float], tol=1e-12):
    """Minimize a unimodal scalar function; returns ``(x_min, f(x_min))``."""
    res = optimize.minimize_scalar(f, bracket=bracket, method="golden", tol=tol)
    return float(res.x), float(res.fun)


@dataclass(frozen=True)
class GridSpec:
    lo: float = -20.0
    hi: float = 20.0
    points: int = 4001
    zoom_levels: int = 4
    zoom_points: int = 401


def _grid_argmax(f, slope, axes, chunk=1 << 20):
    d = len(axes)
    if d == 1:
        x = axes[0][:, None]
        vals = x @ slope - f(x)
        k = int(np.argmax(vals))
        return (k,), float(vals[k])
    xa, ya = axes
    rows = max(1, chunk // ya.size)
    best, best_idx = -np.inf, (0, 0)
    for i0 in range(0, xa.size, rows):
        X, Y = np.meshgrid(xa[i0 : i0 + rows], ya, indexing="ij")
        pts = np.stack([X, Y], axis=-1)
        vals = pts @ slope - f(pts)
        k = np.unravel_index(int(np.argmax(vals)), vals.shape)
        if vals[k] > best:
            best, best_idx = float(vals[k]), (i0 + int(k[0]), int(k[1]))
    return best_idx, best


def legendre_oracle(f, slope, grid: GridSpec | None = None) -> float:
    """Brute-force ``sup_x <slope, x> - f(x)`` over a tensor grid (1 or 2 dims).

    ``f`` must be vectorized: it receives an array of shape ``(..., d)`` and
    returns shape ``(...)``. A coarse grid locates the maximizer, then a few
    zoomed grids around it sharpen the value; accuracy is limited by
    ``O(step**2 * curvature)`` of the final zoom.
    """
    grid = grid or GridSpec()
    slope = np.atleast_1d(np.asarray(slope, dtype=float))
    d = slope.size
    if d not in (1, 2):
        raise ValueError("legendre_oracle supports 1 or 2 dimensions")
    axes = [np.linspace(grid.lo, grid.hi, grid.points) for _ in range(d)]
    idx, best = _grid_argmax(f, slope, axes)
    if any(k in (0, grid.points - 1) for k in idx):
        raise RangeClipped(f"grid supremum on the boundary of [{grid.lo}, {grid.hi}]")
    step = (grid.hi - grid.lo) / (grid.points - 1)
    center = np.array([ax[k] for ax, k in zip(axes, idx)])
    for _ in range(grid.zoom_levels):
        axes = [np.linspace(c - 2 * step, c + 2 * step, grid.zoom_points) for c in center]
        idx, val = _grid_argmax(f, slope, axes)
        best = max(best, val)
        center = np.array([ax[k] for ax, k in zip(axes, idx)])
        step = 4 * step / (grid.zoom_points - 1)
    return best


def rk4_step(rhs: Callable[[np.ndarray], np.ndarray], y, dt: float) -> np.ndarray:
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * dt * k1)
    k3 = rhs(y + 0.5 * dt * k2)
    k4 = rhs(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
