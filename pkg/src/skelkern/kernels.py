"""Linearized 1-D Gaussian RBF kernels.

A Gaussian of bandwidth ``sigma`` is written as an inner product of finite
feature maps: each coordinate of the map is a Gaussian of bandwidth
``sigma / sqrt(2)`` centred on a fixed pivot, and a scalar ``c`` rescales
the products so that ``c * phi(u) @ phi(v) ~ exp(-(u - v)**2 / (2 sigma**2))``.
"""

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .errors import InvalidArgument, NumericalFailure

__all__ = [
    "RbfKernel",
    "PivotGrid",
    "gauss",
    "uniform_pivots",
    "feature_map",
    "calibrate",
    "feature_map_3d",
    "make_grid",
    "out_of_range",
]


@dataclass(frozen=True)
class RbfKernel:
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidArgument(f"sigma must be positive, got {self.sigma}")


def gauss(kernel, delta):
    """``exp(-delta**2 / (2 sigma**2))``, elementwise for arrays."""
    if not isinstance(kernel, RbfKernel):
        kernel = RbfKernel(float(kernel))
    delta = np.asarray(delta, dtype=np.float64)
    out = np.exp(-(delta * delta) / (2.0 * kernel.sigma ** 2))
    return float(out) if out.ndim == 0 else out


def uniform_pivots(z, lo, hi):
    """``z`` evenly spaced pivots on ``[lo, hi]``; the midpoint when ``z == 1``."""
    if int(z) != z or z < 1:
        raise InvalidArgument(f"pivot count must be a positive integer, got {z}")
    if not lo < hi:
        raise InvalidArgument(f"empty pivot interval [{lo}, {hi}]")
    if z == 1:
        return np.array([0.5 * (lo + hi)])
    return np.linspace(lo, hi, int(z))


@dataclass(frozen=True, eq=False)
class PivotGrid:
    """Pivots, kernel bandwidth and calibration constant of one linearization.

    ``lo``/``hi`` is the interval the kernel inputs are expected to occupy;
    calibration samples it. Pivots usually lie on it but may extend past it
    when the grid is built with a margin.
    """

    pivots: np.ndarray
    sigma: float
    c: float = 1.0
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        p = np.asarray(self.pivots, dtype=np.float64)
        if p.ndim != 1 or p.size < 1:
            raise InvalidArgument("a grid needs at least one pivot")
        if np.any(np.diff(p) <= 0):
            raise InvalidArgument("pivots must be strictly increasing")
        if not self.sigma > 0:
            raise InvalidArgument("sigma must be positive")
        if not self.c > 0:
            raise InvalidArgument("calibration constant must be positive")
        p.setflags(write=False)
        object.__setattr__(self, "pivots", p)

    @property
    def size(self):
        return self.pivots.size

    def approx(self, u, v):
        """Linearized kernel value ``c * phi(u) @ phi(v)``."""
        return feature_map(self, u) @ feature_map(self, v)


def _raw_map(pivots, sigma, u):
    # G_{sigma/sqrt2}(u - zeta) = exp(-(u - zeta)^2 / sigma^2)
    u = np.asarray(u, dtype=np.float64)
    d = u[..., None] - pivots
    return np.exp(-(d * d) / sigma ** 2)


def feature_map(grid, u):
    """Feature map of scalar(s) ``u``; trailing axis of length ``Z``."""
    return np.sqrt(grid.c) * _raw_map(grid.pivots, grid.sigma, u)


def calibrate(grid, sample_count=101):
    """Fit ``c`` by least squares over all pairs of a uniform sample.

    The sample is ``sample_count`` evenly spaced points on ``[grid.lo,
    grid.hi]``; every ordered pair enters the fit once.
    """
    if sample_count < 2:
        raise InvalidArgument("need at least 2 sample points")
    u = np.linspace(grid.lo, grid.hi, int(sample_count))
    phi = _raw_map(grid.pivots, grid.sigma, u)
    a = phi @ phi.T
    g = gauss(RbfKernel(grid.sigma), u[:, None] - u[None, :])
    denom = float(np.sum(a * a))
    if not denom > 1e-300:
        raise NumericalFailure("calibration design is numerically zero")
    c = float(np.sum(a * g)) / denom
    if not (np.isfinite(c) and c > 0):
        raise NumericalFailure(f"calibration produced c={c}")
    return replace(grid, c=c)


@lru_cache(maxsize=256)
def make_grid(z, sigma, lo, hi, margin=0.0, sample_count=101):
    """Uniform pivots on ``[lo - margin, hi + margin]``, calibrated on ``[lo, hi]``."""
    if margin < 0:
        raise InvalidArgument("margin must be non-negative")
    pivots = uniform_pivots(z, lo - margin, hi + margin)
    return calibrate(PivotGrid(pivots, float(sigma), 1.0, float(lo), float(hi)), sample_count)


def feature_map_3d(grid, x):
    """Per-coordinate map ``[phi(x_x); phi(x_y); phi(x_z)]`` of length ``3Z``.

    Accepts a single 3-vector or any array whose last axis has length 3.
    Dot products approximate the sum of three 1-D Gaussians.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1:] != (3,):
        raise InvalidArgument(f"expected 3-vectors, got shape {x.shape}")
    f = feature_map(grid, x)
    return f.reshape(*x.shape[:-1], 3 * grid.size)


def out_of_range(grid, u):
    """Count inputs falling outside the grid's calibrated interval."""
    u = np.asarray(u)
    return int(np.count_nonzero((u < grid.lo) | (u > grid.hi)))
