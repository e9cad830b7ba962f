"""Orthogonal projections onto the additive subspaces under the kernel semi-norm.

Components of an additive element are numbered ``0..2d``: ``0`` is the
intercept, ``1..d`` the level functions and ``d+1..2d`` the slope
(derivative) functions.  Axis arguments named ``k`` are zero-based.

All integrals use the grid quadrature, and the kernel weights are
normalised under that same quadrature, so the discrete operators are exact
orthogonal projections of a finite-dimensional inner-product space.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .marginals import MarginalTables


@dataclass(eq=False)
class AdditiveElement:
    """``f0 + sum_j f_j(x_j) + sum_j f'_j(x_j) (X_ij - x_j)`` on a grid."""

    f0: float
    levels: np.ndarray   # (d, G)
    derivs: np.ndarray   # (d, G)

    def __post_init__(self):
        self.f0 = float(self.f0)
        self.levels = np.array(self.levels, dtype=float)
        self.derivs = np.array(self.derivs, dtype=float)
        if self.levels.ndim != 2 or self.levels.shape != self.derivs.shape:
            raise InvalidArgumentError(
                f"levels {self.levels.shape} and derivs {self.derivs.shape} must be equal (d, G)"
            )

    @classmethod
    def zeros(cls, d: int, G: int) -> "AdditiveElement":
        return cls(0.0, np.zeros((d, G)), np.zeros((d, G)))

    @classmethod
    def constant(cls, c: float, d: int, G: int) -> "AdditiveElement":
        return cls(c, np.zeros((d, G)), np.zeros((d, G)))

    @property
    def d(self) -> int:
        return self.levels.shape[0]

    @property
    def G(self) -> int:
        return self.levels.shape[1]

    def copy(self) -> "AdditiveElement":
        return AdditiveElement(self.f0, self.levels.copy(), self.derivs.copy())

    def component(self, c: int) -> "AdditiveElement":
        """Element keeping only component ``c`` (0..2d)."""
        out = AdditiveElement.zeros(self.d, self.G)
        if c == 0:
            out.f0 = self.f0
        elif c <= self.d:
            out.levels[c - 1] = self.levels[c - 1]
        elif c <= 2 * self.d:
            out.derivs[c - 1 - self.d] = self.derivs[c - 1 - self.d]
        else:
            raise InvalidArgumentError(f"component {c} out of range 0..{2 * self.d}")
        return out

    def without(self, c: int) -> "AdditiveElement":
        return self - self.component(c)

    def __add__(self, other):
        return AdditiveElement(self.f0 + other.f0, self.levels + other.levels,
                               self.derivs + other.derivs)

    def __sub__(self, other):
        return AdditiveElement(self.f0 - other.f0, self.levels - other.levels,
                               self.derivs - other.derivs)

    def __mul__(self, s: float):
        return AdditiveElement(self.f0 * s, self.levels * s, self.derivs * s)

    __rmul__ = __mul__

    def sup_distance(self, other) -> float:
        diff = self - other
        return float(max(abs(diff.f0), np.abs(diff.levels).max(initial=0.0),
                         np.abs(diff.derivs).max(initial=0.0)))

    def centering(self, tables: MarginalTables) -> np.ndarray:
        """``int f_j p_j`` per axis; zero for a centred element."""
        return np.einsum("jg,jg,jg->j", self.levels, tables.p, tables.qw)

    def centered(self, tables: MarginalTables) -> "AdditiveElement":
        """Same function, with the level means moved into the intercept."""
        c = self.centering(tables)
        return AdditiveElement(self.f0 + c.sum(), self.levels - c[:, None], self.derivs)


def _check(m: AdditiveElement, tables: MarginalTables):
    if m.levels.shape != tables.p.shape:
        raise InvalidArgumentError(
            f"element shape {m.levels.shape} does not match tables {tables.p.shape}"
        )


def _slope_mass(m: AdditiveElement, tables: MarginalTables) -> float:
    # sum_j int m'_j p*_j
    return float(np.sum(m.derivs * tables.ps * tables.qw))


def project_P0(m: AdditiveElement, tables: MarginalTables) -> float:
    """Projection onto constants, for a centred element."""
    _check(m, tables)
    return m.f0 + _slope_mass(m, tables)


def _level_cross(m: AdditiveElement, k: int, tables: MarginalTables) -> np.ndarray:
    qw = tables.qw
    acc = np.zeros(tables.grids.grid_size)
    for j in range(tables.d):
        if j != k:
            acc += (qw[j] * m.levels[j]) @ tables.p2[j, k]
            acc += (qw[j] * m.derivs[j]) @ tables.ps2[j, k]
    return acc


def project_Pk_full(m: AdditiveElement, k: int, tables: MarginalTables) -> np.ndarray:
    """Projection onto constants plus functions of ``x_k`` (uncentred)."""
    _check(m, tables)
    tables.require_positive("p")
    return (m.f0 + m.levels[k] + m.derivs[k] * tables.ps[k] / tables.p[k]
            + _level_cross(m, k, tables) / tables.p[k])


def project_Pk(m: AdditiveElement, k: int, tables: MarginalTables) -> np.ndarray:
    """Projection onto centred functions of ``x_k``, values on grid ``k``."""
    _check(m, tables)
    tables.require_positive("p")
    out = (m.levels[k] + m.derivs[k] * tables.ps[k] / tables.p[k]
           - _slope_mass(m, tables)
           + _level_cross(m, k, tables) / tables.p[k])
    # guards against quadrature drift; exact arithmetic gives zero here
    return out - out @ (tables.p[k] * tables.qw[k])


def project_Pkprime(m: AdditiveElement, k: int, tables: MarginalTables) -> np.ndarray:
    """Projection onto slope functions ``g(x_k) (X_ik - x_k)``, values on grid ``k``."""
    _check(m, tables)
    tables.require_positive("pss")
    qw = tables.qw
    acc = np.zeros(tables.grids.grid_size)
    for j in range(tables.d):
        if j != k:
            acc += tables.ps2[k, j] @ (qw[j] * m.levels[j])
            acc += (qw[j] * m.derivs[j]) @ tables.pss2[j, k]
    return m.derivs[k] + ((m.f0 + m.levels[k]) * tables.ps[k] + acc) / tables.pss[k]


def project_component(m: AdditiveElement, c: int, tables: MarginalTables) -> AdditiveElement:
    """Projection onto subspace ``c`` (0..2d), embedded as an additive element."""
    d = tables.d
    out = AdditiveElement.zeros(d, tables.grids.grid_size)
    if c == 0:
        out.f0 = project_P0(m, tables)
    elif 1 <= c <= d:
        out.levels[c - 1] = project_Pk(m, c - 1, tables)
    elif d < c <= 2 * d:
        out.derivs[c - 1 - d] = project_Pkprime(m, c - 1 - d, tables)
    else:
        raise InvalidArgumentError(f"component {c} out of range 0..{2 * d}")
    return out


def project_response(Y, tables: MarginalTables, c: int | None = None):
    """Projections of the response onto the subspaces.

    With ``c=None`` returns an :class:`AdditiveElement` holding all of them
    (mean, centred smooths, slope start values); otherwise the single
    component ``c`` (a float for ``c=0``, else a grid array).
    """
    Y = np.asarray(Y, dtype=float)
    if Y.shape != (tables.n,):
        raise InvalidArgumentError(f"Y must have length {tables.n}, got shape {Y.shape}")
    n, d = tables.n, tables.d
    ybar = float(Y.mean())
    if c == 0:
        return ybar
    if c is None or 1 <= c <= d:
        tables.require_positive("p")
    if c is None or c > d:
        tables.require_positive("pss")
    levels = np.einsum("i,kig->kg", Y - ybar, tables.W) / n / tables.p if (c is None or c <= d) else None
    derivs = np.einsum("i,kig->kg", Y, tables.D) / n / tables.pss if (c is None or c > d) else None
    if c is None:
        return AdditiveElement(ybar, levels, derivs)
    if 1 <= c <= d:
        return levels[c - 1]
    if d < c <= 2 * d:
        return derivs[c - 1 - d]
    raise InvalidArgumentError(f"component {c} out of range 0..{2 * d}")


def seminorm_inner(f: AdditiveElement, g: AdditiveElement, tables: MarginalTables) -> float:
    """``<f, g>_n`` for additive elements, expanded into marginal-table integrals."""
    _check(f, tables)
    _check(g, tables)
    qw, p, ps, pss = tables.qw, tables.p, tables.ps, tables.pss
    total = f.f0 * g.f0
    total += f.f0 * np.sum(qw * (g.levels * p + g.derivs * ps))
    total += g.f0 * np.sum(qw * (f.levels * p + f.derivs * ps))
    total += np.sum(qw * (f.levels * g.levels * p
                          + (f.levels * g.derivs + f.derivs * g.levels) * ps
                          + f.derivs * g.derivs * pss))
    for j in range(tables.d):
        for k in range(tables.d):
            if j == k:
                continue
            fj, fdj = qw[j] * f.levels[j], qw[j] * f.derivs[j]
            gk, gdk = qw[k] * g.levels[k], qw[k] * g.derivs[k]
            total += fj @ tables.p2[j, k] @ gk
            total += fdj @ tables.ps2[j, k] @ gk
            total += gdk @ tables.ps2[k, j] @ fj
            total += fdj @ tables.pss2[j, k] @ gdk
    return float(total)


def seminorm(f: AdditiveElement, tables: MarginalTables) -> float:
    return float(np.sqrt(max(seminorm_inner(f, f, tables), 0.0)))


def residual_seminorm(Y, m: AdditiveElement, tables: MarginalTables) -> float:
    """``||Y - m||_n``, accumulated observation by observation.

    Per observation the integral splits into a squared mean plus per-axis
    spreads, all non-negative, so small residuals keep full precision.
    """
    Y = np.asarray(Y, dtype=float)
    _check(m, tables)
    pts = tables.grids.points
    resid = Y - m.f0
    spread = np.zeros(tables.n)
    for j in range(tables.d):
        Wq = tables.W[j] * tables.qw[j]
        a = m.levels[j] + m.derivs[j] * (tables.X[:, j, None] - pts[j])
        mean = np.sum(Wq * a, axis=1)
        spread += np.sum(Wq * (a - mean[:, None]) ** 2, axis=1)
        resid = resid - mean
    return float(np.sqrt(np.mean(resid**2 + spread)))


@dataclass(frozen=True, eq=False)
class SweepOperators:
    """Precomputed projection kernels for the backfitting sweep (see ``_accel``)."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    E: np.ndarray
    lev_ratio: np.ndarray
    der_ratio: np.ndarray
    ps_w: np.ndarray
    pw: np.ndarray


def build_operators(tables: MarginalTables) -> SweepOperators:
    tables.require_positive("p")
    tables.require_positive("pss")
    d, G = tables.p.shape
    qw = tables.qw
    A = np.zeros((d, d, G, G))
    B = np.zeros((d, d, G, G))
    C = np.zeros((d, d, G, G))
    E = np.zeros((d, d, G, G))
    for k in range(d):
        for j in range(d):
            if j == k:
                continue
            A[k, j] = tables.p2[j, k].T * qw[j][None, :] / tables.p[k][:, None]
            B[k, j] = tables.ps2[j, k].T * qw[j][None, :] / tables.p[k][:, None]
            C[k, j] = tables.ps2[k, j] * qw[j][None, :] / tables.pss[k][:, None]
            E[k, j] = tables.pss2[j, k].T * qw[j][None, :] / tables.pss[k][:, None]
    return SweepOperators(
        A=np.ascontiguousarray(A), B=np.ascontiguousarray(B),
        C=np.ascontiguousarray(C), E=np.ascontiguousarray(E),
        lev_ratio=tables.ps / tables.p, der_ratio=tables.ps / tables.pss,
        ps_w=tables.ps * qw, pw=tables.p * qw,
    )
