"""Expectations over independent unit-mean exponential power gains.

The deterministic engine is a tensor-product Gauss-Laguerre rule; a seeded
Monte Carlo estimator is kept alongside as a cross-check.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class NonFiniteIntegrand(ValueError):
    """The integrand evaluated to inf/nan on at least one node."""


@dataclass(frozen=True, eq=False)
class FadingGrid:
    """Quadrature nodes for ``(|h|^2, |g|^2)`` with weights summing to one."""

    gain_h: np.ndarray
    gain_g: np.ndarray
    weight: np.ndarray
    order: int

    def __len__(self):
        return self.weight.size


@lru_cache(maxsize=8)
def build_grid(order=64):
    if order < 2:
        raise ValueError(f"order must be >= 2, got {order}")
    x, w = np.polynomial.laguerre.laggauss(order)
    w = w / w.sum()
    hh, gg = np.meshgrid(x, x, indexing="ij")
    ww = np.outer(w, w)
    grid = FadingGrid(
        gain_h=np.ascontiguousarray(hh.ravel()),
        gain_g=np.ascontiguousarray(gg.ravel()),
        weight=np.ascontiguousarray(ww.ravel()),
        order=order,
    )
    for arr in (grid.gain_h, grid.gain_g, grid.weight):
        arr.setflags(write=False)
    return grid


def expect(f, grid: FadingGrid):
    """``E[f(h, g)]`` by quadrature; ``f`` must accept node arrays."""
    vals = np.broadcast_to(np.asarray(f(grid.gain_h, grid.gain_g), dtype=float), grid.weight.shape)
    if not np.all(np.isfinite(vals)):
        raise NonFiniteIntegrand("integrand is not finite on every quadrature node")
    return float(np.dot(grid.weight, vals))


def exp_gains(samples, seed):
    """``samples`` i.i.d. pairs of Exp(1) gains from a Philox stream keyed by ``seed``."""
    rng = np.random.Generator(np.random.Philox(key=int(seed) & (2**64 - 1)))
    draws = rng.standard_exponential((2, samples))
    return draws[0], draws[1]


def mc_expect(f, samples, seed):
    """Monte Carlo estimate of ``E[f(h, g)]`` and its standard error."""
    if samples < 1000:
        raise ValueError(f"need at least 1000 samples, got {samples}")
    h, g = exp_gains(samples, seed)
    vals = np.broadcast_to(np.asarray(f(h, g), dtype=float), h.shape)
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(samples))
