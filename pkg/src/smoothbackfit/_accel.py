"""Hot loops, each with a numba and a pure-numpy implementation.

The numba path is used when numba imports and ``SMOOTHBACKFIT_NUMBA`` is not
set to ``0``/``false``/``off``.  Every public function takes ``backend``
(``"numba"``, ``"numpy"`` or ``None`` for the environment default) so the
two paths can be compared directly.
"""
import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


ENV_FLAG = "SMOOTHBACKFIT_NUMBA"


def default_backend() -> str:
    flag = os.environ.get(ENV_FLAG, "1").strip().lower()
    if HAS_NUMBA and flag not in ("0", "false", "off", "no"):
        return "numba"
    return "numpy"


def _resolve(backend):
    backend = backend or default_backend()
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend


# --------------------------------------------------------------------------
# grid-normalised Epanechnikov weights
# --------------------------------------------------------------------------

def _weights_numpy(x, pts, qw, h):
    t = (x[:, None] - pts[None, :]) / h
    raw = np.where(np.abs(t) < 1.0, 0.75 * (1.0 - t * t), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return raw / (raw @ qw)[:, None]


@njit(cache=True)
def _weights_numba(x, pts, qw, h):
    n = x.shape[0]
    G = pts.shape[0]
    W = np.zeros((n, G))
    for i in range(n):
        mass = 0.0
        for g in range(G):
            t = (x[i] - pts[g]) / h
            if abs(t) < 1.0:
                v = 0.75 * (1.0 - t * t)
                W[i, g] = v
                mass += v * qw[g]
        if mass > 0.0:
            for g in range(G):
                W[i, g] /= mass
        else:
            for g in range(G):
                W[i, g] = np.nan
    return W


def weight_matrix(x, pts, qw, h, backend=None):
    if _resolve(backend) == "numba":
        return _weights_numba(x, pts, qw, h)
    return _weights_numpy(x, pts, qw, h)


# --------------------------------------------------------------------------
# backfitting sweeps
# --------------------------------------------------------------------------
#
# Operator arrays (shape (d, d, G, G), diagonal blocks unused), with the
# quadrature weight of the integration variable u folded in:
#   A[k, j][x, u] = w_u p_jk(u, x)      / p_k(x)     level_k  <- level_j
#   B[k, j][x, u] = w_u p*_jk(u, x)     / p_k(x)     level_k  <- deriv_j
#   C[k, j][x, u] = w_u p*_kj(x, u)     / p**_k(x)   deriv_k  <- level_j
#   E[k, j][x, u] = w_u p**_jk(u, x)    / p**_k(x)   deriv_k  <- deriv_j
# and per-axis vectors
#   lev_ratio = p*_k / p_k,  der_ratio = p*_k / p**_k,
#   ps_w = w * p*_k,  pw = w * p_k.


def _sweeps_numpy(t0, T, Td, m0, M, Md, A, B, C, E, lev_ratio, der_ratio,
                  ps_w, pw, tol, max_sweeps, on_update=None):
    d = T.shape[0]
    errors = np.zeros(max_sweeps)
    sweeps = 0
    while sweeps < max_sweeps:
        err = 0.0
        # k = 0
        old = m0
        m0 = t0 - float(np.sum(ps_w * Md))
        err += abs(m0 - old)
        if on_update is not None:
            on_update(0, m0, M, Md)
        # k = 1..d
        for k in range(d):
            acc = Md[k] * lev_ratio[k] - float(np.sum(ps_w * Md))
            for j in range(d):
                if j != k:
                    acc = acc + A[k, j] @ M[j] + B[k, j] @ Md[j]
            new = T[k] - acc
            new = new - new @ pw[k]
            diff = new - M[k]
            err += np.sqrt(diff * diff @ pw[k])
            M[k] = new
            if on_update is not None:
                on_update(1 + k, m0, M, Md)
        # k = d+1..2d
        for k in range(d):
            acc = (m0 + M[k]) * der_ratio[k]
            for j in range(d):
                if j != k:
                    acc = acc + C[k, j] @ M[j] + E[k, j] @ Md[j]
            new = Td[k] - acc
            diff = new - Md[k]
            err += np.sqrt(diff * diff @ pw[k])
            Md[k] = new
            if on_update is not None:
                on_update(1 + d + k, m0, M, Md)
        errors[sweeps] = err
        sweeps += 1
        if err <= tol:
            break
    return m0, M, Md, errors[:sweeps]


@njit(cache=True)
def _matvec_acc(out, mat, vec, sign):
    G = out.shape[0]
    for x in range(G):
        s = 0.0
        for u in range(G):
            s += mat[x, u] * vec[u]
        out[x] += sign * s


@njit(cache=True)
def _sweeps_numba(t0, T, Td, m0, M, Md, A, B, C, E, lev_ratio, der_ratio,
                  ps_w, pw, tol, max_sweeps):
    d, G = T.shape
    errors = np.zeros(max_sweeps)
    sweeps = 0
    new = np.empty(G)
    while sweeps < max_sweeps:
        err = 0.0
        old = m0
        s = 0.0
        for j in range(d):
            for g in range(G):
                s += ps_w[j, g] * Md[j, g]
        m0 = t0 - s
        err += abs(m0 - old)
        for k in range(d):
            s = 0.0
            for j in range(d):
                for g in range(G):
                    s += ps_w[j, g] * Md[j, g]
            for g in range(G):
                new[g] = T[k, g] - (Md[k, g] * lev_ratio[k, g] - s)
            for j in range(d):
                if j != k:
                    _matvec_acc(new, A[k, j], M[j], -1.0)
                    _matvec_acc(new, B[k, j], Md[j], -1.0)
            c = 0.0
            for g in range(G):
                c += new[g] * pw[k, g]
            e = 0.0
            for g in range(G):
                v = new[g] - c
                diff = v - M[k, g]
                e += diff * diff * pw[k, g]
                M[k, g] = v
            err += np.sqrt(e)
        for k in range(d):
            for g in range(G):
                new[g] = Td[k, g] - (m0 + M[k, g]) * der_ratio[k, g]
            for j in range(d):
                if j != k:
                    _matvec_acc(new, C[k, j], M[j], -1.0)
                    _matvec_acc(new, E[k, j], Md[j], -1.0)
            e = 0.0
            for g in range(G):
                diff = new[g] - Md[k, g]
                e += diff * diff * pw[k, g]
                Md[k, g] = new[g]
            err += np.sqrt(e)
        errors[sweeps] = err
        sweeps += 1
        if err <= tol:
            break
    return m0, M, Md, errors[:sweeps]


def run_sweeps(t0, T, Td, m0, M, Md, ops, tol, max_sweeps, backend=None, on_update=None):
    """Cyclic updates ``k = 0, 1..d, d+1..2d`` until the sweep error <= tol.

    ``M`` and ``Md`` are copied, never modified in place.  ``on_update`` is
    called after every single component update and forces the numpy path.
    """
    M = np.array(M, dtype=float, copy=True)
    Md = np.array(Md, dtype=float, copy=True)
    args = (float(t0), T, Td, float(m0), M, Md, ops.A, ops.B, ops.C, ops.E,
            ops.lev_ratio, ops.der_ratio, ops.ps_w, ops.pw, float(tol), int(max_sweeps))
    if on_update is not None or _resolve(backend) == "numpy":
        return _sweeps_numpy(*args, on_update=on_update)
    return _sweeps_numba(*args)
