"""Synthetic additive-model data and Monte Carlo checks against the theory.

Covariates have uniform marginals on each interval, either independent or
coupled through a Gaussian copula with equicorrelation ``rho``; the noise
is homoscedastic Gaussian.  Component functions come from a small library
with analytic first and second derivatives, each centred under the uniform
marginal.
"""
from __future__ import annotations

import configparser
import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .backfit import Dataset, FitConfig, fit
from .domain import Domain, make_uniform_grid
from .errors import HarnessError, InvalidArgumentError, SmoothBackfitError
from .kernel import KernelSpec
from .theory import interior_bias, theory_terms, theory_variance

log = logging.getLogger(__name__)

FAILURE_LIMIT = 0.05


@dataclass(frozen=True)
class Component:
    """``m(x) = f(t) - mean(f)`` with ``t = (x - a) / (b - a)``."""

    name: str
    f: object
    df: object
    d2f: object
    mean: float

    def on(self, a: float, b: float):
        w = b - a

        def m(x):
            return self.f((np.asarray(x, dtype=float) - a) / w) - self.mean

        def m1(x):
            return self.df((np.asarray(x, dtype=float) - a) / w) / w

        def m2(x):
            return self.d2f((np.asarray(x, dtype=float) - a) / w) / w**2

        # int m'' p over [a, b] under the uniform marginal
        m2_mean = (self.df(1.0) - self.df(0.0)) / w**2
        return m, m1, m2, float(m2_mean)


_TWO_PI = 2.0 * np.pi
COMPONENTS = {
    "zero": Component("zero", lambda t: 0.0 * t, lambda t: 0.0 * t, lambda t: 0.0 * t, 0.0),
    "linear": Component("linear", lambda t: t, lambda t: 1.0 + 0.0 * t, lambda t: 0.0 * t, 0.5),
    "quadratic": Component("quadratic", lambda t: t**2, lambda t: 2.0 * t,
                           lambda t: 2.0 + 0.0 * t, 1.0 / 3.0),
    "cubic": Component("cubic", lambda t: t**3, lambda t: 3.0 * t**2, lambda t: 6.0 * t, 0.25),
    "sine": Component("sine", lambda t: np.sin(_TWO_PI * t), lambda t: _TWO_PI * np.cos(_TWO_PI * t),
                      lambda t: -_TWO_PI**2 * np.sin(_TWO_PI * t), 0.0),
}


@dataclass(frozen=True)
class Scenario:
    d: int
    n: int
    components: tuple = ("sine", "quadratic")
    domain: Domain = None
    design: str = "uniform"
    rho: float = 0.0
    sigma: float = 0.5
    c_h: float = 0.5
    m0: float = 0.0
    seed: int = 0
    grid_size: int = 101
    tolerance: float = 1e-8
    max_sweeps: int = 500

    def __post_init__(self):
        if self.domain is None:
            object.__setattr__(self, "domain", Domain.unit(self.d))
        object.__setattr__(self, "components", tuple(self.components))
        if self.d < 1 or self.n < 2:
            raise InvalidArgumentError(f"need d >= 1 and n >= 2, got d={self.d}, n={self.n}")
        if len(self.components) != self.d or self.domain.d != self.d:
            raise InvalidArgumentError("components and domain must have one entry per axis")
        for name in self.components:
            if name not in COMPONENTS:
                raise InvalidArgumentError(f"unknown component {name!r}; choose from {sorted(COMPONENTS)}")
        if self.design not in ("uniform", "copula"):
            raise InvalidArgumentError(f"design must be 'uniform' or 'copula', got {self.design!r}")
        if not -1.0 < self.rho < 1.0:
            raise InvalidArgumentError(f"correlation must lie in (-1, 1), got {self.rho}")
        if self.sigma < 0 or self.c_h <= 0:
            raise InvalidArgumentError("need sigma >= 0 and c_h > 0")

    @property
    def bandwidth(self) -> float:
        return self.c_h * self.n ** (-0.2)

    @property
    def spec(self) -> KernelSpec:
        return KernelSpec.from_rule(self.c_h, self.n, self.d)

    def truth(self, j: int):
        """``(m_j, m_j', m_j'', int m_j'' p_j)`` on axis ``j``."""
        a, b = self.domain.bounds[j]
        return COMPONENTS[self.components[j]].on(a, b)

    def density(self, j: int) -> float:
        a, b = self.domain.bounds[j]
        return 1.0 / (b - a)

    def correlation(self) -> np.ndarray:
        return (1.0 - self.rho) * np.eye(self.d) + self.rho * np.ones((self.d, self.d))

    def with_(self, **changes) -> "Scenario":
        fields = {k: getattr(self, k) for k in self.__dataclass_fields__}
        fields.update(changes)
        return Scenario(**fields)


def generate(scenario: Scenario, seed=None) -> Dataset:
    """Draw one dataset; identical seeds give bit-identical data."""
    rng = np.random.default_rng(scenario.seed if seed is None else seed)
    d, n = scenario.d, scenario.n
    if scenario.design == "copula" and d > 1:
        corr = scenario.correlation()
        try:
            L = np.linalg.cholesky(corr)
        except np.linalg.LinAlgError:
            raise InvalidArgumentError(
                f"equicorrelation {scenario.rho} is not a valid correlation for d={d}"
            ) from None
        U = ndtr(rng.standard_normal((n, d)) @ L.T)
    else:
        U = rng.random((n, d))
    lo, width = scenario.domain.lower, scenario.domain.widths
    X = lo + width * U
    Y = np.full(n, scenario.m0, dtype=float)
    for j in range(d):
        Y += scenario.truth(j)[0](X[:, j])
    if scenario.sigma > 0:
        Y += scenario.sigma * rng.standard_normal(n)
    return Dataset(X, Y, scenario.domain)


@dataclass
class MCSummary:
    """Per-axis, per-point error statistics next to the theoretical predictions.

    ``mean_error``/``var_error`` compare against the scenario component,
    centred under the true density.  The ``_recentered`` columns compare
    against that component recentred under the estimated density, the
    estimator's own constraint, which removes the sampling noise of the
    centring constant; linear truths are then reproduced exactly.
    """

    rows: list
    reps: int
    failures: int
    traces: list = field(default_factory=list, repr=False)
    failure_messages: list = field(default_factory=list, repr=False)

    COLUMNS = ("axis", "x", "reps", "mean_error", "var_error", "se_mean", "se_var",
               "mean_error_recentered", "var_error_recentered",
               "pred_bias", "pred_bias_full", "pred_var")

    def column(self, name, axis=None) -> np.ndarray:
        return np.array([r[name] for r in self.rows if axis is None or r["axis"] == axis])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=self.COLUMNS)
            w.writeheader()
            for r in self.rows:
                w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})

    def traces_to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["rep", "sweep", "error"])
            for rep, errors in self.traces:
                for s, e in enumerate(errors, start=1):
                    w.writerow([rep, s, repr(float(e))])


def default_eval_points(scenario: Scenario, count: int = 5) -> np.ndarray:
    """``count`` evenly spaced points strictly inside ``[a + 2h, b - 2h]`` per axis."""
    h = scenario.bandwidth
    out = []
    for a, b in scenario.domain.bounds:
        lo, hi = a + 2 * h, b - 2 * h
        if lo >= hi:
            raise InvalidArgumentError("bandwidth too large: no interior points")
        out.append(np.linspace(lo, hi, count + 2)[1:-1])
    return np.array(out)


def _eval_points(scenario: Scenario, eval_points) -> np.ndarray:
    if eval_points is None:
        return default_eval_points(scenario)
    pts = np.asarray(eval_points, dtype=float)
    if pts.ndim == 1:
        pts = np.tile(pts, (scenario.d, 1))
    if pts.shape[0] != scenario.d:
        raise InvalidArgumentError(f"eval_points need one row per axis, got {pts.shape}")
    h = scenario.bandwidth
    for j, (a, b) in enumerate(scenario.domain.bounds):
        if np.any(pts[j] < a + 2 * h - 1e-12) or np.any(pts[j] > b - 2 * h + 1e-12):
            raise InvalidArgumentError(
                f"axis {j}: evaluation points must lie in [{a + 2 * h:.4g}, {b - 2 * h:.4g}]"
            )
    return pts


def _replicate(args):
    scenario, seed_seq, pts = args
    data = generate(scenario, seed=np.random.default_rng(seed_seq))
    grids = make_uniform_grid(scenario.domain, scenario.grid_size)
    config = FitConfig(scenario.tolerance, scenario.max_sweeps)
    try:
        result, diag = fit(data, scenario.spec, grids, config)
    except SmoothBackfitError as exc:
        return None, None, f"{exc.kind}: {exc}"
    err = np.empty((2,) + pts.shape)
    for j, g in enumerate(grids):
        m = scenario.truth(j)[0]
        err[0, j] = np.interp(pts[j], g.points, result.element.levels[j]) - m(pts[j])
        # the same truth recentred under the estimated marginal density
        err[1, j] = err[0, j] + np.sum(m(g.points) * result.tables.p[j] * g.weights)
    return err, diag.errors, None


def _predictions(scenario: Scenario, pts: np.ndarray):
    h = scenario.bandwidth
    grids = make_uniform_grid(scenario.domain, max(scenario.grid_size, 201))
    pred_bias = np.empty_like(pts)
    pred_full = np.empty_like(pts)
    pred_var = np.empty_like(pts)
    for j, g in enumerate(grids):
        _, _, m2, m2_mean = scenario.truth(j)
        pred_bias[j] = interior_bias(m2(pts[j]), m2_mean, h)
        terms = theory_terms(m2(g.points), h, g.points, scenario.domain.bounds[j])
        p = scenario.density(j)
        centre = float(terms.beta @ g.weights) * p
        pred_full[j] = np.interp(pts[j], g.points, terms.beta) - centre
        pred_var[j] = theory_variance(pts[j], scenario.sigma**2, p, scenario.n, h)
    return pred_bias, pred_full, pred_var


def monte_carlo(scenario: Scenario, reps: int, eval_points=None, workers: int = 1) -> MCSummary:
    """Fit ``reps`` independent datasets and summarise errors at interior points.

    Replication seeds are spawned from the scenario seed, so serial and
    parallel runs give identical summaries.  Failed fits are recorded and
    excluded; more than 5% failures raises :class:`HarnessError`.
    """
    if reps < 1:
        raise InvalidArgumentError("reps must be >= 1")
    if reps < 50:
        log.warning("only %d replications; Monte Carlo bands will be wide", reps)
    pts = _eval_points(scenario, eval_points)
    seeds = np.random.SeedSequence(scenario.seed).spawn(reps)
    jobs = [(scenario, s, pts) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_replicate, jobs, chunksize=max(1, reps // (4 * workers))))
    else:
        results = [_replicate(job) for job in jobs]

    errors, traces, messages = [], [], []
    for rep, (err, trace, msg) in enumerate(results):
        if err is None:
            messages.append((rep, msg))
            continue
        errors.append(err)
        traces.append((rep, trace))
    failures = len(messages)
    if failures > FAILURE_LIMIT * reps:
        raise HarnessError(f"{failures} of {reps} replications failed; first: {messages[0][1]}")
    if not errors:
        raise HarnessError("every replication failed")

    E = np.array(errors)                 # (R, 2, d, P)
    R = E.shape[0]
    mean = E.mean(axis=0)
    var = E.var(axis=0, ddof=1) if R > 1 else np.full_like(mean, np.nan)
    mean, mean_rc = mean
    var, var_rc = var
    pred_bias, pred_full, pred_var = _predictions(scenario, pts)
    rows = []
    for j in range(scenario.d):
        for q in range(pts.shape[1]):
            rows.append({
                "axis": j,
                "x": float(pts[j, q]),
                "reps": R,
                "mean_error": float(mean[j, q]),
                "var_error": float(var[j, q]),
                "se_mean": float(np.sqrt(var[j, q] / R)) if R > 1 else float("nan"),
                "se_var": float(var[j, q] * np.sqrt(2.0 / (R - 1))) if R > 1 else float("nan"),
                "mean_error_recentered": float(mean_rc[j, q]),
                "var_error_recentered": float(var_rc[j, q]),
                "pred_bias": float(pred_bias[j, q]),
                "pred_bias_full": float(pred_full[j, q]),
                "pred_var": float(pred_var[j, q]),
            })
    return MCSummary(rows, R, failures, traces, messages)


# --------------------------------------------------------------------------
# flat key = value configuration
# --------------------------------------------------------------------------

SECTION = "scenario"


def _parse_domain(text: str) -> Domain:
    bounds = []
    for part in text.split(","):
        a, b = part.split(":")
        bounds.append((float(a), float(b)))
    return Domain(tuple(bounds))


def scenario_from_mapping(values) -> tuple[Scenario, np.ndarray | None]:
    """Build a scenario (and optional evaluation points) from string values."""
    values = dict(values)
    known = {"d", "n", "components", "domain", "design", "rho", "sigma", "c_h", "m0",
             "seed", "grid_size", "tolerance", "max_sweeps", "eval_points"}
    unknown = set(values) - known
    if unknown:
        raise InvalidArgumentError(f"unknown scenario keys: {sorted(unknown)}")
    try:
        d = int(values["d"])
        kwargs = {"d": d, "n": int(values["n"])}
        if "components" in values:
            kwargs["components"] = tuple(s.strip() for s in values["components"].split(","))
        if "domain" in values:
            kwargs["domain"] = _parse_domain(values["domain"])
        for key, cast in (("design", str), ("rho", float), ("sigma", float), ("c_h", float),
                          ("m0", float), ("seed", int), ("grid_size", int),
                          ("tolerance", float), ("max_sweeps", int)):
            if key in values:
                kwargs[key] = cast(values[key].strip()) if cast is str else cast(values[key])
        eval_points = None
        if values.get("eval_points"):
            eval_points = np.array([float(v) for v in values["eval_points"].split(",")])
    except KeyError as exc:
        raise InvalidArgumentError(f"missing scenario key {exc.args[0]!r}") from None
    except ValueError as exc:
        raise InvalidArgumentError(f"bad scenario value: {exc}") from None
    return Scenario(**kwargs), eval_points


def load_scenario(path) -> tuple[Scenario, np.ndarray | None]:
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            text = fh.read()
        if not text.lstrip().startswith("["):
            text = f"[{SECTION}]\n" + text
        parser.read_string(text)
    except (OSError, configparser.Error) as exc:
        raise InvalidArgumentError(f"cannot read scenario config {path}: {exc}") from None
    if not parser.has_section(SECTION):
        raise InvalidArgumentError(f"scenario config {path} has no [{SECTION}] section")
    return scenario_from_mapping(parser[SECTION])


def save_scenario(scenario: Scenario, path, eval_points=None):
    values = {
        "d": str(scenario.d),
        "n": str(scenario.n),
        "components": ", ".join(scenario.components),
        "domain": ", ".join(f"{a!r}:{b!r}" for a, b in scenario.domain.bounds),
        "design": scenario.design,
        "rho": repr(scenario.rho),
        "sigma": repr(scenario.sigma),
        "c_h": repr(scenario.c_h),
        "m0": repr(scenario.m0),
        "seed": str(scenario.seed),
        "grid_size": str(scenario.grid_size),
        "tolerance": repr(scenario.tolerance),
        "max_sweeps": str(scenario.max_sweeps),
    }
    if eval_points is not None:
        values["eval_points"] = ", ".join(repr(float(v)) for v in np.ravel(eval_points))
    parser = configparser.ConfigParser()
    parser[SECTION] = values
    with open(path, "w") as fh:
        parser.write(fh)
