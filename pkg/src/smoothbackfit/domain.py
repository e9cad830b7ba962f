"""Rectangular covariate domains, evaluation grids and trapezoidal quadrature."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

DEFAULT_GRID_SIZE = 101


@dataclass(frozen=True)
class Domain:
    """Product of open intervals ``(a_j, b_j)``, one per covariate."""

    bounds: tuple[tuple[float, float], ...]

    def __post_init__(self):
        bounds = tuple((float(a), float(b)) for a, b in self.bounds)
        if not bounds:
            raise InvalidArgumentError("domain needs at least one axis")
        for j, (a, b) in enumerate(bounds):
            if not (np.isfinite(a) and np.isfinite(b)) or not a < b:
                raise InvalidArgumentError(f"axis {j}: need finite a < b, got ({a}, {b})")
        object.__setattr__(self, "bounds", bounds)

    @classmethod
    def unit(cls, d: int) -> "Domain":
        return cls(((0.0, 1.0),) * d)

    @property
    def d(self) -> int:
        return len(self.bounds)

    @property
    def lower(self) -> np.ndarray:
        return np.array([a for a, _ in self.bounds])

    @property
    def upper(self) -> np.ndarray:
        return np.array([b for _, b in self.bounds])

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x) -> np.ndarray:
        """Boolean mask of rows of ``x`` lying in the closed domain."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.all((x >= self.lower) & (x <= self.upper), axis=1)


@dataclass(frozen=True, eq=False)
class Grid1D:
    axis: int
    points: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def step(self) -> float:
        return float(self.points[1] - self.points[0])


@dataclass(frozen=True, eq=False)
class GridSet:
    domain: Domain
    grids: tuple[Grid1D, ...]

    @property
    def grid_size(self) -> int:
        return self.grids[0].size

    @property
    def d(self) -> int:
        return len(self.grids)

    @property
    def points(self) -> np.ndarray:
        """``(d, grid_size)`` array of evaluation points."""
        return np.stack([g.points for g in self.grids])

    @property
    def weights(self) -> np.ndarray:
        """``(d, grid_size)`` array of quadrature weights."""
        return np.stack([g.weights for g in self.grids])

    def __getitem__(self, k) -> Grid1D:
        return self.grids[k]

    def __len__(self):
        return len(self.grids)

    def __iter__(self):
        return iter(self.grids)


def trapezoid_weights(points: np.ndarray) -> np.ndarray:
    dx = np.diff(points)
    w = np.zeros_like(points)
    w[:-1] += dx / 2
    w[1:] += dx / 2
    return w


def make_uniform_grid(domain: Domain, grid_size: int = DEFAULT_GRID_SIZE) -> GridSet:
    """Uniform grid per axis with trapezoidal weights (half weight at the ends)."""
    if int(grid_size) != grid_size or grid_size < 2:
        raise InvalidArgumentError(f"grid_size must be an integer >= 2, got {grid_size}")
    grids = []
    for k, (a, b) in enumerate(domain.bounds):
        pts = np.linspace(a, b, int(grid_size))
        grids.append(Grid1D(k, pts, trapezoid_weights(pts)))
    return GridSet(domain, tuple(grids))


def integrate_1d(values, grid: Grid1D) -> float:
    values = np.asarray(values, dtype=float)
    if values.shape != grid.points.shape:
        raise InvalidArgumentError(
            f"values of shape {values.shape} do not match grid of size {grid.size}"
        )
    return float(values @ grid.weights)


def integrate_2d(values, grid_j: Grid1D, grid_k: Grid1D) -> float:
    """Tensor trapezoid rule for a table indexed ``[x_j, x_k]``."""
    values = np.asarray(values, dtype=float)
    if values.shape != (grid_j.size, grid_k.size):
        raise InvalidArgumentError(
            f"values of shape {values.shape} do not match grids ({grid_j.size}, {grid_k.size})"
        )
    return float(grid_j.weights @ values @ grid_k.weights)


def interpolate(values, grid: Grid1D, x) -> np.ndarray:
    """Piecewise-linear interpolation of a tabulated function."""
    return np.interp(x, grid.points, values)
