"""One-dimensional oracle estimator and asymptotic bias/variance terms.

These exist to validate the backfitting fit: the oracle local linear
smoother on a single covariate, the boundary-aware bias of local linear
smoothing, its interior limit, and the leading variance.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import Domain, Grid1D
from .errors import IdentifiabilityError, InvalidArgumentError, NumericalError
from .kernel import Epanechnikov, KernelSpec, boundary_mass, kernel_moment, kernel_roughness, weight_matrix
from .marginals import DENOMINATOR_FLOOR

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(48)


def _bandwidth(spec, grid: Grid1D) -> float:
    if isinstance(spec, KernelSpec):
        return float(spec.bandwidths[grid.axis] if spec.d > grid.axis else spec.bandwidths[0])
    return float(spec)


def local_linear_1d(y, x, spec, grid: Grid1D, backend=None):
    """Local linear fit of ``y`` on one covariate with boundary-corrected weights.

    Solves the kernel-weighted 2x2 least-squares problem at every grid point,
    then splits the pointwise level into an intercept and a centred
    component.  Returns ``(f0, level, slope)``.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if y.shape != x.shape or y.ndim != 1:
        raise InvalidArgumentError(f"y {y.shape} and x {x.shape} must be equal-length vectors")
    h = _bandwidth(spec, grid)
    W = weight_matrix(x, grid, h, backend=backend)
    n = x.shape[0]
    dist = x[:, None] - grid.points[None, :]
    s0 = W.sum(axis=0) / n
    s1 = (W * dist).sum(axis=0) / n
    s2 = (W * dist**2).sum(axis=0) / n
    t0 = y @ W / n
    t1 = y @ (W * dist) / n
    det = s0 * s2 - s1**2
    bad = (s0 < DENOMINATOR_FLOOR) | (det <= 1e-12 * np.maximum(s0 * s2, DENOMINATOR_FLOOR))
    if bad.any():
        pts = grid.points[bad]
        raise IdentifiabilityError(
            f"singular local linear system at {bad.sum()} grid point(s) in "
            f"[{pts.min():.6g}, {pts.max():.6g}]",
            axis=grid.axis,
            points=pts,
        )
    level = (s2 * t0 - s1 * t1) / det
    slope = (s0 * t1 - s1 * t0) / det
    f0 = float(level @ (s0 * grid.weights))
    return f0, level - f0, slope


def bias_moments(points, h: float, a: float, b: float, family=Epanechnikov) -> np.ndarray:
    """``b_l(x) = int_a^b k((u-x)/h) ((u-x)/h)^l / (h b(u)) du`` for ``l = 0..3``.

    ``b(u)`` is the kernel mass inside ``[a, b]``.  The integrand is smooth
    between the points where the support window or the mass formula
    changes, so each piece is integrated by Gauss-Legendre.
    """
    points = np.atleast_1d(np.asarray(points, dtype=float))
    out = np.zeros((4, points.shape[0]))
    for i, x in enumerate(points):
        lo, hi = max(-1.0, (a - x) / h), min(1.0, (b - x) / h)
        cuts = [lo, hi]
        for c in ((a + h - x) / h, (b - h - x) / h):
            if lo < c < hi:
                cuts.append(c)
        cuts = np.sort(cuts)
        for v0, v1 in zip(cuts[:-1], cuts[1:]):
            if v1 <= v0:
                continue
            v = 0.5 * (v1 - v0) * _GL_NODES + 0.5 * (v1 + v0)
            wq = 0.5 * (v1 - v0) * _GL_WEIGHTS
            base = wq * family.pdf(v) / boundary_mass(x + h * v, a, b, h, family)
            for l in range(4):
                out[l, i] += np.sum(base * v**l)
    return out


@dataclass
class TheoryTerms:
    """Bias ingredients tabulated on one axis."""

    points: np.ndarray
    b: np.ndarray            # (4, G): b_0..b_3
    mass: np.ndarray         # boundary kernel mass b(x)
    beta: np.ndarray
    beta_deriv: np.ndarray
    interior_constant: float


def theory_terms(mjpp, h: float, grid_points, interval) -> TheoryTerms:
    a, b_ = interval
    pts = np.asarray(grid_points, dtype=float)
    mjpp = np.broadcast_to(np.asarray(mjpp, dtype=float), pts.shape)
    b = bias_moments(pts, h, a, b_)
    den = b[0] * b[2] - b[1] ** 2
    if np.any(den <= 0):
        raise NumericalError("non-positive bias denominator b0*b2 - b1^2")
    beta = 0.5 * h**2 * mjpp * (b[2] ** 2 - b[1] * b[3]) / den
    beta_deriv = 0.5 * mjpp * (b[0] * b[3] - b[1] * b[2]) / den * h
    return TheoryTerms(pts, b, boundary_mass(pts, a, b_, h), beta, beta_deriv,
                       0.5 * kernel_moment(2))


def theory_bias(mjpp, spec, grid: Grid1D, domain: Domain | None = None):
    """Leading bias of the level and of the slope estimate, ``(beta, beta_deriv)``.

    ``mjpp`` holds the second derivative of the true component on the grid.
    """
    h = _bandwidth(spec, grid)
    interval = (grid.points[0], grid.points[-1]) if domain is None else domain.bounds[grid.axis]
    terms = theory_terms(mjpp, h, grid.points, interval)
    return terms.beta, terms.beta_deriv


def interior_bias(mjpp, mjpp_mean: float, h: float) -> np.ndarray:
    """``(m'' - int m'' p) h^2 mu_2 / 2``: the centred bias away from the boundary."""
    return 0.5 * (np.asarray(mjpp, dtype=float) - mjpp_mean) * h**2 * kernel_moment(2)


def theory_variance(x, sigma2: float, pj, n: int, spec) -> np.ndarray | float:
    """``sigma^2 R(k) / (n h p_j(x))``, the leading variance of the level estimate."""
    h = float(spec.bandwidths[0]) if isinstance(spec, KernelSpec) else float(spec)
    pj = pj(x) if callable(pj) else np.asarray(pj, dtype=float)
    if np.any(pj <= 0):
        raise InvalidArgumentError("density p_j must be positive")
    out = sigma2 * kernel_roughness() / (n * h * pj)
    return float(out) if np.ndim(out) == 0 else out


def variance_term_vj(eps, x, spec, grid: Grid1D) -> np.ndarray:
    """Nadaraya-Watson smooth of residuals with the plain (uncorrected) kernel."""
    eps = np.asarray(eps, dtype=float)
    x = np.asarray(x, dtype=float)
    h = _bandwidth(spec, grid)
    K = Epanechnikov.pdf((x[:, None] - grid.points[None, :]) / h) / h
    den = K.sum(axis=0)
    if np.any(den <= 0):
        bad = grid.points[den <= 0]
        raise IdentifiabilityError(
            f"no observations within bandwidth of {bad.size} grid point(s)",
            axis=grid.axis, points=bad,
        )
    return (eps @ K) / den
