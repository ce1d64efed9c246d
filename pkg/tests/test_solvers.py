import numpy as np
import pytest

from nonrev.errors import NoConvergence, RangeClipped
from nonrev.solvers import (
    GridSpec,
    NewtonConfig,
    golden_section,
    legendre_oracle,
    newton_minimize,
    rk4_step,
)


def test_cosh_sum():
    def f(x):
        return np.sum(np.cosh(x)) - x.size, np.sinh(x), np.diag(np.cosh(x))

    res = newton_minimize(f, np.array([1.5, -2.0, 0.3]))
    np.testing.assert_allclose(res.x, 0.0, atol=1e-10)
    assert res.residual <= 1e-10


def test_quadratic_matches_solve(rng):
    M = rng.normal(size=(5, 5))
    A = M @ M.T + 5 * np.eye(5)
    b = rng.normal(size=5)

    def f(x):
        return 0.5 * x @ A @ x - b @ x, A @ x - b, A

    res = newton_minimize(f, np.zeros(5))
    np.testing.assert_allclose(res.x, np.linalg.solve(A, b), atol=1e-10)


def test_singular_hessian_uses_gauge():
    # f(x) = cosh(x0 - x1): invariant along (1, 1)
    def f(x):
        d = x[0] - x[1]
        g = np.sinh(d) * np.array([1.0, -1.0])
        return np.cosh(d), g, np.cosh(d) * np.array([[1.0, -1.0], [-1.0, 1.0]])

    res = newton_minimize(f, np.array([2.0, -1.0]), gauge=True)
    assert abs(res.x[0] - res.x[1]) < 1e-10
    assert abs(res.x.sum()) < 1e-10


def test_no_convergence():
    def f(x):
        return -x[0], np.array([-1.0]), np.zeros((1, 1))

    with pytest.raises(NoConvergence):
        newton_minimize(f, np.zeros(1), NewtonConfig(max_iter=5))


def test_config_validation():
    with pytest.raises(ValueError):
        NewtonConfig(backtrack=1.5)
    with pytest.raises(ValueError):
        NewtonConfig(grad_tol=0.0)


def test_golden_section():
    x, v = golden_section(lambda t: (t - 0.3) ** 2 + 1.0, (-1.0, 2.0))
    assert x == pytest.approx(0.3, abs=1e-7)
    assert v == pytest.approx(1.0, abs=1e-12)


def test_oracle_quadratic():
    assert abs(legendre_oracle(lambda x: 0.5 * x[..., 0] ** 2, np.array([1.0])) - 0.5) < 1e-6


def test_oracle_two_dims():
    val = legendre_oracle(lambda x: 0.5 * np.sum(x**2, axis=-1), np.array([1.0, -2.0]),
                          GridSpec(points=401, zoom_points=201))
    assert abs(val - 2.5) < 1e-6


def test_oracle_range_clipped():
    with pytest.raises(RangeClipped):
        legendre_oracle(lambda x: np.abs(x[..., 0]), np.array([2.0]))


def test_rk4_exponential():
    y = np.array([1.0])
    for _ in range(100):
        y = rk4_step(lambda v: -v, y, 0.01)
    assert y[0] == pytest.approx(np.exp(-1.0), abs=1e-10)
