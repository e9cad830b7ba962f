"""Command-line interface: ``fit``, ``check`` and ``simulate``.

Exit codes: 0 success, 1 Monte Carlo harness failure, 2 input error,
3 identifiability failure, 4 non-convergence.  Errors are reported as a
single JSON object on standard error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .backfit import Dataset, FitConfig, check_identifiability, fit
from .domain import DEFAULT_GRID_SIZE, Domain, make_uniform_grid
from .errors import (
    ConvergenceError,
    DataError,
    HarnessError,
    IdentifiabilityError,
    InvalidArgumentError,
    SmoothBackfitError,
)
from .kernel import KernelSpec
from .simulate import load_scenario, monte_carlo

EXIT_OK = 0
EXIT_HARNESS = 1
EXIT_INPUT = 2
EXIT_IDENTIFIABILITY = 3
EXIT_CONVERGENCE = 4

DEFAULT_CH = 0.5


class CLIError(Exception):
    def __init__(self, kind: str, message: str, code: int = EXIT_INPUT, **extra):
        super().__init__(message)
        self.kind = kind
        self.code = code
        self.extra = extra


def read_table(path) -> tuple[list[str], np.ndarray]:
    """Read a comma-separated numeric table with a header row."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise CLIError("io-error", f"cannot read {path}: {exc.strerror}") from None
    if not rows:
        raise CLIError("parse-error", f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if any(cell.strip() for cell in r)]
    if not body:
        raise CLIError("parse-error", f"{path} has a header but no data rows")
    values = np.empty((len(body), len(header)))
    for i, r in enumerate(body):
        if len(r) != len(header):
            raise CLIError("parse-error", f"row {i + 1} has {len(r)} fields, header has {len(header)}",
                           row=i + 1)
        for c, cell in enumerate(r):
            try:
                values[i, c] = float(cell)
            except ValueError:
                raise CLIError("parse-error", f"row {i + 1}, column {header[c]!r}: "
                               f"not a number: {cell!r}", row=i + 1, column=header[c]) from None
    if not np.all(np.isfinite(values)):
        i = int(np.flatnonzero(~np.all(np.isfinite(values), axis=1))[0])
        raise CLIError("data-error", f"row {i + 1} has missing or non-finite values", row=i + 1)
    return header, values


def _select(header, values, response, covariates):
    def col(name):
        if name not in header:
            raise CLIError("column-not-found", f"column {name!r} not in header {header}", column=name)
        return header.index(name)

    yi = col(response)
    names = covariates or [h for h in header if h != response]
    if not names:
        raise CLIError("invalid-argument", "no covariate columns")
    idx = [col(name) for name in names]
    return names, values[:, idx], values[:, yi]


def _split_list(text):
    return [s.strip() for s in text.split(",") if s.strip()] if text else None


def _parse_domain(text: str, d: int) -> list[tuple[float, float]]:
    try:
        bounds = [tuple(float(v) for v in part.split(":")) for part in text.split(",")]
    except ValueError:
        raise CLIError("invalid-argument", f"bad --domain {text!r}; expected a:b,a:b,...") from None
    if len(bounds) == 1 and d > 1:
        bounds = bounds * d
    if len(bounds) != d or any(len(b) != 2 for b in bounds):
        raise CLIError("invalid-argument", f"--domain needs {d} intervals a:b")
    return bounds


def build_problem(args):
    """Dataset, kernel spec and grids from the shared fit/check options."""
    header, values = read_table(args.data)
    names, X, Y = _select(header, values, args.response, _split_list(args.covariates))
    n, d = X.shape
    if args.bandwidth is not None:
        try:
            h = [float(v) for v in _split_list(args.bandwidth)]
        except ValueError:
            raise CLIError("invalid-argument", f"bad --bandwidth {args.bandwidth!r}") from None
        if len(h) == 1:
            h = h * d
        spec = KernelSpec(h)
    else:
        spec = KernelSpec.from_rule(args.ch if args.ch is not None else DEFAULT_CH, n, d)
    if spec.d != d:
        raise CLIError("invalid-argument", f"{spec.d} bandwidths for {d} covariates")

    if args.domain:
        bounds = _parse_domain(args.domain, d)
    else:
        bounds = []
        for j in range(d):
            lo, hi = float(X[:, j].min()), float(X[:, j].max())
            # half a bandwidth keeps the new end points inside the open kernel
            # window of the extreme observations; a constant column needs it
            # to have an interval at all, and the check then reports why
            if args.expand_domain or lo == hi:
                lo, hi = lo - 0.5 * spec.bandwidths[j], hi + 0.5 * spec.bandwidths[j]
            bounds.append((lo, hi))
    domain = Domain(tuple(bounds))
    data = Dataset(X, Y, domain)
    grids = make_uniform_grid(domain, args.grid_size)
    return names, data, spec, grids


def _write_json(obj, path):
    text = json.dumps(obj, indent=2, allow_nan=True)
    if path in (None, "-"):
        print(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text + "\n")


def cmd_fit(args) -> int:
    names, data, spec, grids = build_problem(args)
    config = FitConfig(args.tolerance, args.max_sweeps)
    result, diag = fit(data, spec, grids, config, check=not args.no_check)
    out = result.to_dict()
    for comp, name in zip(out["components"], names):
        comp["name"] = name
    out["n"] = data.n
    out["response"] = args.response
    out["diagnostics"] = diag.to_dict()
    _write_json(out, args.out)

    if args.out not in (None, "-") or args.plot_dir:
        base = Path(args.plot_dir) if args.plot_dir else Path(args.out).parent
        stem = Path(args.out).stem if args.out not in (None, "-") else "fit"
        base.mkdir(parents=True, exist_ok=True)
        for j, g in enumerate(grids):
            with open(base / f"{stem}_axis{j}.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["axis", "x", "m_hat", "m_hat_deriv"])
                for x, m, dm in zip(g.points, result.components[j], result.derivatives[j]):
                    w.writerow([j, repr(float(x)), repr(float(m)), repr(float(dm))])
    return EXIT_OK


def cmd_check(args) -> int:
    names, data, spec, grids = build_problem(args)
    report = check_identifiability(data, spec, grids)
    out = report.to_dict()
    for reason in out["reasons"]:
        if "axis" in reason:
            reason["column"] = names[reason["axis"]]
    _write_json(out, args.out)
    return EXIT_OK if report.passed else EXIT_IDENTIFIABILITY


def cmd_simulate(args) -> int:
    scenario, eval_points = load_scenario(args.config)
    if args.seed is not None:
        scenario = scenario.with_(seed=args.seed)
    summary = monte_carlo(scenario, args.reps, eval_points, workers=args.workers)
    out = Path(args.out)
    summary.to_csv(out)
    trace = Path(args.trace) if args.trace else out.with_name(out.stem + "_trace.csv")
    summary.traces_to_csv(trace)
    if summary.failures:
        log = logging.getLogger(__name__)
        for rep, msg in summary.failure_messages:
            log.warning("replication %d failed: %s", rep, msg)
    return EXIT_OK


def _add_problem_options(p):
    p.add_argument("data", help="CSV file with a header row")
    p.add_argument("--response", required=True, help="response column name")
    p.add_argument("--covariates", help="comma-separated covariate columns (default: all others)")
    bw = p.add_mutually_exclusive_group()
    bw.add_argument("--bandwidth", help="bandwidth, or comma-separated list with one per covariate")
    bw.add_argument("--ch", type=float, help=f"bandwidth constant in h = c_h n^(-1/5) (default {DEFAULT_CH})")
    p.add_argument("--grid-size", type=int, default=DEFAULT_GRID_SIZE)
    p.add_argument("--domain", help="intervals a:b,a:b,... (default: per-column min and max)")
    p.add_argument("--expand-domain", action="store_true",
                   help="widen inferred intervals by half a bandwidth on each side")
    p.add_argument("--out", help="output JSON path (default: standard output)")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smoothbackfit",
                                     description="Local linear smooth backfitting for additive models.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit an additive model to a CSV file")
    _add_problem_options(p)
    p.add_argument("--tolerance", type=float, default=1e-8)
    p.add_argument("--max-sweeps", type=int, default=500)
    p.add_argument("--no-check", action="store_true", help="skip the identifiability check")
    p.add_argument("--plot-dir", help="directory for per-axis plot CSVs (default: next to --out)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("check", help="run the identifiability check")
    _add_problem_options(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", help="Monte Carlo run from a scenario config")
    p.add_argument("config", help="scenario file with key = value lines")
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="summary CSV path")
    p.add_argument("--trace", help="convergence trace CSV (default: <out>_trace.csv)")
    p.set_defaults(func=cmd_simulate)
    return parser


def _fail(kind: str, message: str, code: int, **extra) -> int:
    payload = {"error": kind, "message": message, "exit_code": code}
    payload.update({k: v for k, v in extra.items() if v is not None})
    print(json.dumps(payload), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CLIError as exc:
        return _fail(exc.kind, str(exc), exc.code, **exc.extra)
    except IdentifiabilityError as exc:
        report = getattr(exc, "report", None)
        return _fail(exc.kind, str(exc), EXIT_IDENTIFIABILITY, axis=exc.axis,
                     reasons=report.reasons if report else None)
    except ConvergenceError as exc:
        diag = None
        if exc.diagnostics is not None:
            diag = exc.diagnostics.to_dict()
            diag["errors"] = diag["errors"][-10:]
        return _fail(exc.kind, str(exc), EXIT_CONVERGENCE, diagnostics=diag)
    except HarnessError as exc:
        return _fail(exc.kind, str(exc), EXIT_HARNESS)
    except DataError as exc:
        return _fail(exc.kind, str(exc), EXIT_INPUT, row=exc.row)
    except (InvalidArgumentError, SmoothBackfitError) as exc:
        return _fail(exc.kind, str(exc), EXIT_INPUT)
    except OSError as exc:
        return _fail("io-error", str(exc), EXIT_INPUT)


if __name__ == "__main__":
    sys.exit(main())
