"""Kernel marginal tables: smoothed empirical moments of the design on grids.

For a rectangular domain the product kernel factorises and every marginal
integral over the remaining axes equals one, so all tables are built from
the per-axis weight matrices ``W_k[i, g] = k_h^{X_ik}(X_ik - x_g)``:

    p_k    = mean_i W_k                      p_jk   = W_j^T W_k / n
    p*_k   = mean_i (X_ik - x) W_k           p*_jk  = D_j^T W_k / n
    p**_k  = mean_i (X_ik - x)^2 W_k         p**_jk = D_j^T D_k / n

with ``D_k = (X_k - x) * W_k``.  In ``p*_jk`` the first index carries the
``(X_ij - x_j)`` factor.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .domain import GridSet
from .errors import DataError, IdentifiabilityError, InvalidArgumentError
from .kernel import KernelSpec, weight_matrix

DENOMINATOR_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class MarginalTables:
    grids: GridSet
    spec: KernelSpec
    n: int
    p: np.ndarray        # (d, G)
    ps: np.ndarray       # (d, G)
    pss: np.ndarray      # (d, G)
    p2: np.ndarray       # (d, d, G, G), p2[j, k][g_j, g_k]; diagonal blocks zero
    ps2: np.ndarray
    pss2: np.ndarray
    W: np.ndarray        # (d, n, G) weight matrices
    D: np.ndarray        # (d, n, G) (X_k - x) * W_k
    X: np.ndarray        # (n, d) covariates

    @property
    def d(self) -> int:
        return self.p.shape[0]

    @property
    def qw(self) -> np.ndarray:
        return self.grids.weights

    def require_positive(self, which="p"):
        """Raise :class:`IdentifiabilityError` if a denominator table vanishes."""
        table = {"p": self.p, "pss": self.pss}[which]
        name = {"p": "p_k", "pss": "p**_k"}[which]
        why = {"p": "no kernel mass there",
               "pss": "every observation in the window sits at the grid point"}[which]
        for k in range(self.d):
            bad = np.flatnonzero(table[k] < DENOMINATOR_FLOOR)
            if bad.size:
                pts = self.grids[k].points[bad]
                raise IdentifiabilityError(
                    f"{name} vanishes on axis {k} at {bad.size} grid point(s) "
                    f"in [{pts.min():.6g}, {pts.max():.6g}]: {why}",
                    axis=k,
                    points=pts,
                )

    def to_csv(self, path):
        """Write one row per ordered axis pair and grid pair (and per-axis rows)."""
        pts = self.grids.points
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["j", "k", "x_j", "x_k", "p_j", "ps_j", "pss_j",
                        "p_jk", "ps_jk", "pss_jk"])
            for j in range(self.d):
                for k in range(self.d):
                    if j == k:
                        for g in range(pts.shape[1]):
                            w.writerow([j, k, repr(pts[j, g]), "", repr(self.p[j, g]),
                                        repr(self.ps[j, g]), repr(self.pss[j, g]), "", "", ""])
                        continue
                    for g in range(pts.shape[1]):
                        for h in range(pts.shape[1]):
                            w.writerow([j, k, repr(pts[j, g]), repr(pts[k, h]),
                                        repr(self.p[j, g]), repr(self.ps[j, g]),
                                        repr(self.pss[j, g]), repr(self.p2[j, k, g, h]),
                                        repr(self.ps2[j, k, g, h]), repr(self.pss2[j, k, g, h])])


def validate_covariates(X, grids: GridSet) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != grids.d:
        raise InvalidArgumentError(f"X must have shape (n, {grids.d}), got {X.shape}")
    bad = np.flatnonzero(~np.all(np.isfinite(X), axis=1))
    if bad.size:
        raise DataError(f"row {bad[0]} has non-finite covariates", row=int(bad[0]))
    bad = np.flatnonzero(~grids.domain.contains(X))
    if bad.size:
        raise DataError(
            f"row {bad[0]} lies outside the domain {grids.domain.bounds}", row=int(bad[0])
        )
    return X


def compute_marginals(X, spec: KernelSpec, grids: GridSet, backend=None) -> MarginalTables:
    """Tabulate the one- and two-dimensional kernel marginals on ``grids``."""
    X = validate_covariates(X, grids)
    if spec.d != grids.d:
        raise InvalidArgumentError(f"{spec.d} bandwidths for {grids.d} axes")
    n, d = X.shape
    G = grids.grid_size
    pts = grids.points
    W = np.empty((d, n, G))
    D = np.empty((d, n, G))
    for k in range(d):
        W[k] = weight_matrix(X[:, k], grids[k], spec.bandwidths[k], spec.family, backend)
        D[k] = (X[:, k][:, None] - pts[k][None, :]) * W[k]
    p = W.mean(axis=1)
    ps = D.mean(axis=1)
    pss = ((X.T[:, :, None] - pts[:, None, :]) * D).mean(axis=1)
    p2 = np.zeros((d, d, G, G))
    ps2 = np.zeros((d, d, G, G))
    pss2 = np.zeros((d, d, G, G))
    for j in range(d):
        for k in range(d):
            if j == k:
                continue
            if k > j:
                p2[j, k] = W[j].T @ W[k] / n
                pss2[j, k] = D[j].T @ D[k] / n
            else:
                p2[j, k] = p2[k, j].T
                pss2[j, k] = pss2[k, j].T
            ps2[j, k] = D[j].T @ W[k] / n
    return MarginalTables(grids, spec, n, p, ps, pss, p2, ps2, pss2, W, D, X)


def cauchy_schwarz_ratio(tables: MarginalTables) -> float:
    """Largest ``(p*_k)^2 / (p_k p**_k)`` over all axes and grid points.

    Always in ``[0, 1]``; it is strictly below one exactly when every grid
    point sees at least two distinct covariate values within a bandwidth.
    """
    tables.require_positive("p")
    tables.require_positive("pss")
    ratio = tables.ps**2 / (tables.p * tables.pss)
    return float(min(ratio.max(), 1.0))


def cauchy_schwarz_ratios(tables: MarginalTables) -> np.ndarray:
    """Pointwise ratios, ``(d, G)``.

    Where ``p_k > 0`` but ``p**_k`` vanishes, every observation in the window
    sits exactly at the grid point; the ratio is reported as its limiting
    value 1.  NaN marks points without kernel mass.
    """
    den = tables.p * tables.pss
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(den > 0, tables.ps**2 / den, np.nan)
    r = np.where((tables.p >= DENOMINATOR_FLOOR) & (tables.pss < DENOMINATOR_FLOOR), 1.0, r)
    return np.minimum(r, 1.0)
