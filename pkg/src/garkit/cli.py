"""``garkit`` command line: estimate, variance, simulate, diagnose.

Exit codes: 0 success, 2 input/config error, 3 degenerate data,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from datetime import datetime, timezone
from statistics import NormalDist
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .empirical import make_bivariate_sample, make_sample
from .errors import ConfigError, DegenerateData, GarkitError, InputError
from .expr import parse, uses_cdf, evaluate
from .functions import InfluenceFunction, WeightFunction
from .gar import residual_rep
from .indexes import (
    G_TRANSFORMS,
    CorrelationMoments,
    corr_asymptotic_variance,
    corr_estimate,
    correlation_gar,
    gini_estimate,
    gini_gar,
    smooth_moment_index,
)
from .models import parse_model_spec
from .montecarlo import (
    ExperimentConfig,
    bahadur_decay,
    representation_gap,
    residual_condition_diagnostic,
    run_experiment,
)
from .quadrature import DEFAULT_NODES, gauss_legendre
from .report import SCHEMA_VERSION, dumps, validate_report
from .variance import total_variance

log = logging.getLogger("garkit")

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE, EXIT_NUMERIC = 0, 2, 3, 4
BOUNDARY_WARNING = "boundary correlation; asymptotic CI invalid (|rho|=1 excluded)"


# ------------------------------------------------------------------ input


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_csv(path: str, columns: int) -> np.ndarray:
    """Numeric CSV with ``columns`` fields per row and an optional header row."""
    try:
        with open(path, newline="", encoding="utf-8-sig") as fh:
            rows = [row for row in csv.reader(fh)]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    rows = [(i + 1, [c.strip() for c in row]) for i, row in enumerate(rows) if any(c.strip() for c in row)]
    if rows and not all(_is_number(c) for c in rows[0][1]):
        rows = rows[1:]
    if not rows:
        raise InputError(f"{path}: no data rows")
    data = []
    for lineno, row in rows:
        if len(row) != columns:
            raise InputError(f"{path}: row {lineno} has {len(row)} field(s), expected {columns}")
        try:
            data.append([float(c) for c in row])
        except ValueError:
            raise InputError(f"{path}: row {lineno} is not numeric: {row}") from None
    return np.array(data, dtype=float)


def _model(spec: Optional[str]):
    return None if spec is None else parse_model_spec(spec)


def _custom_index(args, model):
    if not args.h:
        raise ConfigError("--index custom requires --h EXPR")
    e = parse(args.h)
    if uses_cdf(e) and model is None:
        raise ConfigError("--h uses cdf() and therefore needs --model")
    h = InfluenceFunction(lambda x: evaluate(e, x, model), args.h)
    g_name = args.g or "identity"
    g, g_prime = G_TRANSFORMS[g_name]
    if g_name == "identity":
        return smooth_moment_index(h)
    return smooth_moment_index(h, g, g_prime)


def _predicted_variance(index: str, args, model, quad) -> float:
    if index == "gini":
        return total_variance(gini_gar(model, quad), model, quad).total
    if index == "correlation":
        return corr_asymptotic_variance(CorrelationMoments.from_model(model))
    return total_variance(_custom_index(args, model).representation(model, quad), model, quad).total


def _check_model_kind(index: str, model) -> None:
    if model is None:
        return
    bivariate = getattr(model, "bivariate", False)
    if index == "correlation" and not bivariate:
        raise ConfigError("correlation needs a bivariate model, e.g. binorm:0")
    if index != "correlation" and bivariate:
        raise ConfigError(f"{index} needs a univariate model")


# --------------------------------------------------------------- commands


def cmd_estimate(args) -> dict:
    model = _model(args.model)
    _check_model_kind(args.index, model)
    warnings = []
    if args.index == "correlation":
        sample = make_bivariate_sample(read_csv(args.input, 2))
        est = corr_estimate(sample)
        if abs(est) >= 1.0 - 1e-12:
            warnings.append(BOUNDARY_WARNING)
    else:
        sample = make_sample(read_csv(args.input, 1).ravel())
        if args.index == "gini":
            est = gini_estimate(sample)
        else:
            est = _custom_index(args, model).estimator(sample)
    ci = {"lo": None, "hi": None, "level": args.ci, "method": "none"}
    if model is not None:
        quad = gauss_legendre(args.nodes)
        var = _predicted_variance(args.index, args, model, quad)
        z = NormalDist().inv_cdf(0.5 + args.ci / 2)
        half = z * math.sqrt(max(var, 0.0) / sample.n)
        ci = {"lo": est - half, "hi": est + half, "level": args.ci, "method": "model"}
    return {"index": args.index, "estimate": est, "n": sample.n, "ci": ci, "warnings": warnings}


def cmd_variance(args) -> dict:
    model = _model(args.model)
    _check_model_kind(args.index, model)
    quad = gauss_legendre(args.nodes)
    if args.index == "gini":
        rep = gini_gar(model, quad)
    elif args.index == "correlation":
        rep = correlation_gar(model)
    else:
        rep = _custom_index(args, model).representation(model, quad)
    out = total_variance(rep, model, quad).to_dict()
    out["nodes"] = args.nodes
    out["warnings"] = [f"moment condition {k} looks violated (heuristic)"
                       for k in ("Th11", "Th12", "Th33") if not out["moment_flags"][k]]
    return out


def cmd_simulate(args) -> dict:
    model = _model(args.model)
    _check_model_kind(args.index, model)
    quad = gauss_legendre(args.nodes)
    estimator = rep = None
    if args.index == "custom":
        idx = _custom_index(args, model)
        estimator, rep = idx.estimator, idx.representation(model, quad)
    cfg = ExperimentConfig(args.index, model, args.n, args.reps, args.seed, quad,
                           estimator=estimator, rep=rep, level=args.ci, threads=args.threads)
    report = run_experiment(cfg)
    if args.hist:
        _write_hist(args.hist, report.values, report.predicted_var)
    out = report.to_dict()
    out["warnings"] = []
    return out


def _write_hist(path: str, values: np.ndarray, variance: float) -> None:
    sd = math.sqrt(variance) if variance > 0 else math.nan
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["scaled", "standardized"])
            for v in values:
                w.writerow([repr(float(v)), repr(float(v / sd)) if math.isfinite(sd) else ""])
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _parse_grid(text: str) -> list:
    try:
        grid = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"--ngrid must be comma-separated integers, got {text!r}") from None
    if not grid or any(n < 1 for n in grid):
        raise ConfigError("--ngrid needs positive sample sizes")
    return grid


def cmd_diagnose(args) -> dict:
    model = _model(args.model)
    if getattr(model, "bivariate", False):
        raise ConfigError("diagnose needs a univariate model")
    grid = _parse_grid(args.ngrid)
    quad = gauss_legendre(args.nodes)
    e = parse(args.q)
    q = WeightFunction(lambda x: evaluate(e, x, model), args.q)
    conditions = residual_condition_diagnostic(q, model, grid, args.reps, args.seed, quad, args.threads)
    gap = representation_gap(residual_rep(q, model.quantile), model, grid, args.reps, args.seed, quad, args.threads)
    bahadur = bahadur_decay(grid, args.reps, args.seed, args.threads) if args.bahadur else None
    warnings = list(conditions.warnings) + list(gap.warnings)
    return {
        "residual_conditions": conditions.to_dict(),
        "representation_gap": gap.to_dict(),
        "bahadur": None if bahadur is None else bahadur.to_dict(),
        "stable": not warnings,
        "warnings": warnings,
    }


COMMANDS = {"estimate": cmd_estimate, "variance": cmd_variance, "simulate": cmd_simulate, "diagnose": cmd_diagnose}


# ----------------------------------------------------------------- parser


def _level(text: str) -> float:
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError("level must lie in (0, 1)")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="garkit", description="Asymptotic representations of statistical indexes.")
    p.add_argument("--version", action="version", version=f"garkit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, model_required: bool):
        sp.add_argument("--index", choices=["gini", "correlation", "custom"], required=True)
        sp.add_argument("--model", required=model_required, help="e.g. uniform:0,1  exp:1  pareto:1,1.5  lognormal:0,1  binorm:0")
        sp.add_argument("--h", help="influence expression in x for --index custom")
        sp.add_argument("--g", choices=sorted(G_TRANSFORMS), help="smooth map applied to the mean of h")
        sp.add_argument("--nodes", type=int, default=DEFAULT_NODES, help="quadrature nodes (default 256)")
        sp.add_argument("--output", help="write the JSON report here instead of stdout")

    est = sub.add_parser("estimate", help="point estimate and optional model-based CI")
    common(est, False)
    est.add_argument("--input", required=True, help="CSV file")
    est.add_argument("--ci", type=_level, default=0.95)

    var = sub.add_parser("variance", help="asymptotic variance under a model")
    common(var, True)

    sim = sub.add_parser("simulate", help="Monte Carlo check of the normal limit")
    common(sim, True)
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--reps", type=int, required=True)
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--ci", type=_level, default=0.95)
    sim.add_argument("--threads", type=int, default=None, help="worker threads (default: CPU count capped by GARKIT_THREADS)")
    sim.add_argument("--hist", help="CSV dump of the replicate values")

    dia = sub.add_parser("diagnose", help="residual-term conditions and decay diagnostics")
    dia.add_argument("--q", required=True, help="weight expression in x")
    dia.add_argument("--model", required=True)
    dia.add_argument("--ngrid", default="100,1000,10000")
    dia.add_argument("--reps", type=int, default=200)
    dia.add_argument("--seed", type=int, default=0)
    dia.add_argument("--bahadur", action="store_true")
    dia.add_argument("--nodes", type=int, default=DEFAULT_NODES)
    dia.add_argument("--threads", type=int, default=None)
    dia.add_argument("--output")
    return p


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, InputError):
        return EXIT_INPUT
    if isinstance(exc, DegenerateData):
        return EXIT_DEGENERATE
    return EXIT_NUMERIC


def _emit(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="garkit: %(message)s")
    args = build_parser().parse_args(argv)
    arg_record = {k: v for k, v in vars(args).items() if k != "command"}
    manifest = {
        "command": args.command,
        "args": arg_record,
        "tool_version": __version__,
        "schema_version": SCHEMA_VERSION,
        "seed": getattr(args, "seed", None),
        "started_at": _now(),
    }
    kind = args.command
    try:
        doc = COMMANDS[args.command](args)
        code = EXIT_OK
    except GarkitError as exc:
        code = _exit_code(exc)
        kind = "error"
        doc = {"error": {"type": type(exc).__name__, "message": str(exc)}, "exit_code": code}
        log.error("%s", exc)
    except (ArithmeticError, ValueError) as exc:
        code = EXIT_NUMERIC
        kind = "error"
        doc = {"error": {"type": type(exc).__name__, "message": str(exc)}, "exit_code": code}
        log.error("%s", exc)
    manifest["finished_at"] = _now()
    doc = {"schema_version": SCHEMA_VERSION, **doc, "manifest": manifest}
    doc.setdefault("warnings", [])
    for w in doc["warnings"]:
        log.warning("%s", w)
    text = dumps(doc)
    validate_report(json.loads(text), kind)
    try:
        _emit(text, getattr(args, "output", None))
    except OSError as exc:
        log.error("cannot write report: %s", exc)
        return EXIT_INPUT
    return code


if __name__ == "__main__":
    sys.exit(main())
