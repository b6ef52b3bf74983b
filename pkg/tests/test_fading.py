import math

import numpy as np
import pytest
from scipy.special import exp1

from cogra.fading import NonFiniteIntegrand, build_grid, exp_gains, expect, mc_expect


@pytest.fixture(scope="module")
def grid():
    return build_grid(64)


def test_grid_shape_and_normalisation(grid):
    assert len(grid) == 4096
    assert grid.weight.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(grid.weight > 0)


def test_grid_is_read_only(grid):
    with pytest.raises(ValueError):
        grid.gain_h[0] = 1.0


def test_order_validation():
    with pytest.raises(ValueError):
        build_grid(1)


@pytest.mark.parametrize(
    "f, expected, tol",
    [
        (lambda h, g: 3.5, 3.5, 1e-12),
        (lambda h, g: h, 1.0, 1e-10),
        (lambda h, g: np.exp(-h), 0.5, 1e-8),
        (lambda h, g: h * g, 1.0, 1e-8),
        (lambda h, g: g**2, 2.0, 1e-8),
    ],
)
def test_expect_closed_forms(grid, f, expected, tol):
    assert expect(f, grid) == pytest.approx(expected, abs=tol)


def test_log_rate_identity(grid):
    exact = math.e * exp1(1.0) / math.log(2.0)
    assert exact == pytest.approx(0.86034, abs=1e-5)
    assert expect(lambda h, g: np.log2(1 + h), grid) == pytest.approx(exact, abs=1e-4)


def test_nonfinite_integrand(grid):
    with pytest.raises(NonFiniteIntegrand), np.errstate(invalid="ignore"):
        expect(lambda h, g: np.log(h - 1.0 + 0 * g), grid)


def test_mc_is_deterministic():
    a = mc_expect(lambda h, g: h, 5000, 7)
    b = mc_expect(lambda h, g: h, 5000, 7)
    assert a == b
    assert a != mc_expect(lambda h, g: h, 5000, 8)


def test_mc_unit_mean():
    mean, se = mc_expect(lambda h, g: h, 10**6, 1)
    assert abs(mean - 1.0) < 3 * se


def test_mc_agrees_with_quadrature(grid):
    f = lambda h, g: np.log2(1 + h)  # noqa: E731
    mean, se = mc_expect(f, 10**6, 2)
    assert abs(mean - expect(f, grid)) < 3 * se


def test_mc_needs_enough_samples():
    with pytest.raises(ValueError):
        mc_expect(lambda h, g: h, 999, 0)


def test_exp_gains_are_independent_streams():
    h, g = exp_gains(20000, 3)
    assert abs(np.corrcoef(h, g)[0, 1]) < 0.03
