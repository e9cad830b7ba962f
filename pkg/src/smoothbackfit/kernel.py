"""Base kernels, boundary-corrected kernels and the product kernel.

Only kernels with support ``[-1, 1]`` that are strictly positive inside and
continuous are admitted.  Each family provides its density, antiderivative
and moments in closed form so that boundary normalisation never needs
nested quadrature.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _accel
from .domain import Domain, Grid1D
from .errors import InvalidArgumentError


class Epanechnikov:
    name = "epanechnikov"

    @staticmethod
    def pdf(t):
        t = np.asarray(t, dtype=float)
        return np.where(np.abs(t) < 1.0, 0.75 * (1.0 - t * t), 0.0)

    @staticmethod
    def cdf(t):
        """Antiderivative normalised to 0 at -1 and 1 at +1."""
        t = np.clip(np.asarray(t, dtype=float), -1.0, 1.0)
        return 0.5 + 0.75 * t - 0.25 * t**3

    @staticmethod
    def moment(l: int) -> float:
        # int_{-1}^{1} v^l 0.75 (1 - v^2) dv
        if l % 2:
            return 0.0
        return 1.5 * (1.0 / (l + 1) - 1.0 / (l + 3))

    @staticmethod
    def partial_moment(l: int, lo, hi):
        """``int_lo^hi v^l k(v) dv`` for ``-1 <= lo <= hi <= 1``."""
        lo = np.clip(lo, -1.0, 1.0)
        hi = np.clip(hi, -1.0, 1.0)
        return 0.75 * ((hi ** (l + 1) - lo ** (l + 1)) / (l + 1) - (hi ** (l + 3) - lo ** (l + 3)) / (l + 3))

    roughness = 0.6


KERNELS = {"epanechnikov": Epanechnikov}


def get_kernel(name: str):
    try:
        return KERNELS[name.lower()]
    except KeyError:
        raise InvalidArgumentError(
            f"unknown kernel {name!r}; available: {sorted(KERNELS)}"
        ) from None


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """Kernel family name plus one bandwidth per axis."""

    bandwidths: np.ndarray
    kernel: str = "epanechnikov"

    def __post_init__(self):
        h = np.atleast_1d(np.asarray(self.bandwidths, dtype=float))
        if h.ndim != 1 or not np.all(np.isfinite(h)) or np.any(h <= 0):
            raise InvalidArgumentError(f"bandwidths must be positive, got {self.bandwidths}")
        object.__setattr__(self, "bandwidths", h)
        get_kernel(self.kernel)

    @classmethod
    def from_rule(cls, c_h: float, n: int, d: int, kernel: str = "epanechnikov"):
        """Bandwidth ``h = c_h * n**(-1/5)`` on every axis."""
        return cls(np.full(d, c_h * n ** (-0.2)), kernel)

    @property
    def family(self):
        return get_kernel(self.kernel)

    @property
    def d(self) -> int:
        return self.bandwidths.shape[0]


def base_kernel(t, spec: KernelSpec | None = None):
    family = Epanechnikov if spec is None else spec.family
    return family.pdf(t)


def boundary_mass(u, a: float, b: float, h: float, family=Epanechnikov):
    """``int_a^b k((u - v)/h) dv / h``: kernel mass kept inside ``[a, b]``."""
    u = np.asarray(u, dtype=float)
    return family.cdf((u - a) / h) - family.cdf((u - b) / h)


def boundary_kernel_1d(u, x, axis: int, spec: KernelSpec, domain: Domain,
                       grid: Grid1D | None = None):
    """Boundary-corrected kernel ``k_h^u(u - x)`` on one axis.

    With ``grid=None`` the normaliser is the exact kernel mass inside the
    interval.  Passing a grid normalises with the grid's quadrature instead,
    so that the corrected kernel integrates to one under that rule; this is
    the form the estimator uses.
    """
    a, b = domain.bounds[axis]
    h = spec.bandwidths[axis]
    u = np.asarray(u, dtype=float)
    if np.any((u < a) | (u > b)):
        raise InvalidArgumentError(f"u outside [{a}, {b}] on axis {axis}")
    family = spec.family
    num = family.pdf((u - np.asarray(x, dtype=float)) / h)
    if grid is None:
        den = h * boundary_mass(u, a, b, h, family)
    else:
        den = family.pdf((np.atleast_1d(u)[:, None] - grid.points[None, :]) / h) @ grid.weights
        den = den.reshape(u.shape)
    return num / den


def product_kernel(u, x, spec: KernelSpec, domain: Domain, grids=None):
    """``K_h^u(u - x)``: product of the per-axis boundary-corrected kernels."""
    u = np.asarray(u, dtype=float)
    x = np.asarray(x, dtype=float)
    if u.shape[-1] != domain.d or x.shape[-1] != domain.d or spec.d != domain.d:
        raise InvalidArgumentError(
            f"dimension mismatch: u {u.shape}, x {x.shape}, domain d={domain.d}, h d={spec.d}"
        )
    out = 1.0
    for j in range(domain.d):
        g = None if grids is None else grids[j]
        out = out * boundary_kernel_1d(u[..., j], x[..., j], j, spec, domain, g)
    return out


def kernel_moment(l: int, spec: KernelSpec | None = None) -> float:
    """``int v^l k(v) dv``."""
    if l not in (0, 1, 2):
        raise InvalidArgumentError(f"moment order must be 0, 1 or 2, got {l}")
    family = Epanechnikov if spec is None else spec.family
    return family.moment(l)


def kernel_roughness(spec: KernelSpec | None = None) -> float:
    """``int k(v)^2 dv``."""
    family = Epanechnikov if spec is None else spec.family
    return family.roughness


def weight_matrix(x, grid: Grid1D, h: float, family=Epanechnikov, backend=None) -> np.ndarray:
    """``(n, G)`` matrix of grid-normalised boundary kernel weights.

    Row ``i`` is ``x_g -> k_h^{x_i}(x_i - x_g)`` with the normaliser taken
    from the grid's quadrature, so ``W @ grid.weights == 1`` exactly up to
    rounding.
    """
    x = np.ascontiguousarray(x, dtype=float)
    if family is Epanechnikov:
        W = _accel.weight_matrix(x, grid.points, grid.weights, float(h), backend)
    else:
        raw = family.pdf((x[:, None] - grid.points[None, :]) / h)
        with np.errstate(divide="ignore", invalid="ignore"):
            W = raw / (raw @ grid.weights)[:, None]
    if W.shape[0] and not np.all(np.isfinite(W)):
        raise InvalidArgumentError(
            f"bandwidth {h} is too small for grid step {grid.step} on axis {grid.axis}"
        )
    return W
