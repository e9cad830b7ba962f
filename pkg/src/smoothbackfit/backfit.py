"""Smooth backfitting: identifiability check, the cyclic fitting loop, prediction."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .domain import Domain, GridSet, interpolate
from .errors import ConvergenceError, DataError, IdentifiabilityError, InvalidArgumentError
from .kernel import KernelSpec
from .marginals import MarginalTables, compute_marginals
from .projection import (
    AdditiveElement,
    build_operators,
    project_component,
    project_response,
    residual_seminorm,
)

log = logging.getLogger(__name__)

RANK_THRESHOLD = 1e-10


@dataclass(frozen=True, eq=False)
class Dataset:
    X: np.ndarray
    Y: np.ndarray
    domain: Domain

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        Y = np.asarray(self.Y, dtype=float).ravel()
        if X.shape[0] != Y.shape[0]:
            raise InvalidArgumentError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
        if X.shape[1] != self.domain.d:
            raise InvalidArgumentError(f"X has {X.shape[1]} columns, domain has {self.domain.d} axes")
        if X.shape[0] < 2:
            raise InvalidArgumentError("need at least two observations")
        bad = np.flatnonzero(~(np.all(np.isfinite(X), axis=1) & np.isfinite(Y)))
        if bad.size:
            raise DataError(f"row {bad[0]} has non-finite values", row=int(bad[0]))
        bad = np.flatnonzero(~self.domain.contains(X))
        if bad.size:
            raise DataError(f"row {bad[0]} lies outside the domain {self.domain.bounds}",
                            row=int(bad[0]))
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


@dataclass
class FitConfig:
    tolerance: float = 1e-8
    max_sweeps: int = 500
    start: AdditiveElement | None = None

    def __post_init__(self):
        if not self.tolerance > 0:
            raise InvalidArgumentError(f"tolerance must be positive, got {self.tolerance}")
        if int(self.max_sweeps) != self.max_sweeps or self.max_sweeps < 1:
            raise InvalidArgumentError(f"max_sweeps must be a positive integer, got {self.max_sweeps}")


@dataclass
class FitDiagnostics:
    errors: np.ndarray
    sweeps: int
    contraction: float
    converged: bool
    fixed_point_residual: float = float("nan")
    residual_norm: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "sweeps": self.sweeps,
            "converged": self.converged,
            "contraction": self.contraction,
            "errors": [float(e) for e in self.errors],
            "fixed_point_residual": self.fixed_point_residual,
            "residual_norm": self.residual_norm,
        }


@dataclass(eq=False)
class AdditiveFit:
    element: AdditiveElement
    grids: GridSet
    spec: KernelSpec
    tolerance: float
    sweeps: int
    tables: MarginalTables | None = field(default=None, repr=False)

    @property
    def intercept(self) -> float:
        return self.element.f0

    @property
    def components(self) -> np.ndarray:
        return self.element.levels

    @property
    def derivatives(self) -> np.ndarray:
        return self.element.derivs

    def to_dict(self) -> dict:
        axes = []
        for j, g in enumerate(self.grids):
            axes.append({
                "axis": j,
                "bandwidth": float(self.spec.bandwidths[j]),
                "interval": list(self.grids.domain.bounds[j]),
                "x": g.points.tolist(),
                "m_hat": self.element.levels[j].tolist(),
                "m_hat_deriv": self.element.derivs[j].tolist(),
            })
        return {
            "intercept": self.element.f0,
            "kernel": self.spec.kernel,
            "bandwidths": self.spec.bandwidths.tolist(),
            "grid_size": self.grids.grid_size,
            "tolerance": self.tolerance,
            "sweeps": self.sweeps,
            "components": axes,
        }


@dataclass
class IdentifiabilityReport:
    passed: bool
    reasons: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "reasons": self.reasons}


def _failing_intervals(points, bad):
    runs = []
    idx = np.flatnonzero(bad)
    if idx.size == 0:
        return runs
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.r_[idx[0], idx[breaks + 1]]
    ends = np.r_[idx[breaks], idx[-1]]
    return [[float(points[s]), float(points[e])] for s, e in zip(starts, ends)]


def check_identifiability(data: Dataset, spec: KernelSpec, grids: GridSet) -> IdentifiabilityReport:
    """Local coverage by two distinct values per window, plus a full-rank design."""
    reasons = []
    for k, g in enumerate(grids):
        h = spec.bandwidths[k]
        values = np.unique(data.X[:, k])
        # distinct values strictly inside (x - h, x + h)
        count = (np.searchsorted(values, g.points + h, side="left")
                 - np.searchsorted(values, g.points - h, side="right"))
        bad = count < 2
        if bad.any():
            reasons.append({
                "code": "coverage",
                "axis": k,
                "intervals": _failing_intervals(g.points, bad),
                "message": f"axis {k}: {int(bad.sum())} grid point(s) see fewer than two "
                           f"distinct covariate values within bandwidth {h:.6g}",
            })
    design = np.column_stack([np.ones(data.n), data.X])
    s = np.linalg.svd(design, compute_uv=False)
    rank = int(np.sum(s > RANK_THRESHOLD * s[0]))
    if rank < data.d + 1:
        reasons.append({
            "code": "rank",
            "rank": rank,
            "required": data.d + 1,
            "message": f"design [1 | X] has rank {rank} < {data.d + 1}: covariates are collinear",
        })
    return IdentifiabilityReport(not reasons, reasons)


def _contraction(errors: np.ndarray) -> float:
    r = errors.shape[0]
    if r < 2:
        return 0.0
    tail = errors[-min(10, r - 1) - 1:]
    prev, nxt = tail[:-1], tail[1:]
    if np.any(nxt == 0.0):
        return 0.0
    return float(np.exp(np.mean(np.log(nxt / prev))))


def fixed_point_residual(m: AdditiveElement, targets: AdditiveElement,
                         tables: MarginalTables) -> float:
    """Sup-norm of ``m_c + P_c(m - m_c) - P_c(Y)`` over all components ``c``."""
    worst = 0.0
    for c in range(2 * tables.d + 1):
        lhs = m.component(c) + project_component(m.without(c), c, tables)
        worst = max(worst, lhs.sup_distance(targets.component(c)))
    return worst


def fit(data: Dataset, spec: KernelSpec, grids: GridSet, config: FitConfig | None = None,
        check: bool = True, backend=None, on_update=None):
    """Fit the additive model by cyclic projections.

    Returns ``(AdditiveFit, FitDiagnostics)``.  ``check=False`` skips the
    identifiability gate; vanishing kernel marginals still raise
    :class:`IdentifiabilityError`.  ``on_update(c, f0, levels, derivs)`` is
    called after each single component update (numpy path only).
    """
    config = config or FitConfig()
    if spec.d != data.d or grids.d != data.d:
        raise InvalidArgumentError(
            f"dimension mismatch: data d={data.d}, bandwidths {spec.d}, grids {grids.d}"
        )
    if check:
        report = check_identifiability(data, spec, grids)
        if not report.passed:
            err = IdentifiabilityError("; ".join(r["message"] for r in report.reasons))
            err.report = report
            raise err
    tables = compute_marginals(data.X, spec, grids, backend=backend)
    ops = build_operators(tables)
    targets = project_response(data.Y, tables)

    start = config.start or AdditiveElement.zeros(data.d, grids.grid_size)
    if start.levels.shape != targets.levels.shape:
        raise InvalidArgumentError(f"start has shape {start.levels.shape}, need {targets.levels.shape}")
    start = start.centered(tables)

    m0, M, Md, errors = _accel.run_sweeps(
        targets.f0, targets.levels, targets.derivs, start.f0, start.levels, start.derivs,
        ops, config.tolerance, config.max_sweeps, backend=backend, on_update=on_update,
    )
    element = AdditiveElement(m0, M, Md)
    converged = bool(errors.size and errors[-1] <= config.tolerance)
    diagnostics = FitDiagnostics(errors, int(errors.size), _contraction(errors), converged)
    if not converged:
        raise ConvergenceError(
            f"no convergence after {config.max_sweeps} sweeps (last error {errors[-1]:.3g})",
            diagnostics,
        )
    diagnostics.fixed_point_residual = fixed_point_residual(element, targets, tables)
    diagnostics.residual_norm = residual_seminorm(data.Y, element, tables)
    log.debug("converged in %d sweeps, contraction %.3f", diagnostics.sweeps, diagnostics.contraction)
    result = AdditiveFit(element, grids, spec, config.tolerance, diagnostics.sweeps, tables)
    return result, diagnostics


def predict(fit_: AdditiveFit, x) -> np.ndarray | float:
    """``m0 + sum_j m_j(x_j)`` with linear interpolation between grid nodes."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    domain = fit_.grids.domain
    if x.shape[1] != domain.d:
        raise InvalidArgumentError(f"expected {domain.d} coordinates, got {x.shape[1]}")
    if not np.all(domain.contains(x)):
        raise InvalidArgumentError(f"point(s) outside the domain {domain.bounds}")
    out = np.full(x.shape[0], fit_.element.f0)
    for j, g in enumerate(fit_.grids):
        out += interpolate(fit_.element.levels[j], g, x[:, j])
    return float(out[0]) if single else out
