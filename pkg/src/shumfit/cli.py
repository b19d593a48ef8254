"""Command-line front end: fit, simulate, hum.

Machine outputs are deterministic given the seed: JSON keeps full float
precision, table CSVs round to 4 decimals, stdout tables to 3.  Wall-clock
diagnostics go to timings.json only, so every other artifact of a run is
byte-identical across repeats and worker counts.  All outputs embed the hash
of the reproducible manifest (command, config, seed, version).

Exit codes: 0 success, 2 input/flag errors, 3 fit failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .data import MarkerDataset, load_csv, project_scores
from .errors import ShumFitError, StudyAborted
from .hum import ehum_fast, random_guess_baseline
from .methods import (
    METHOD_NAMES,
    FitConfig,
    bootstrap_se,
    fit_method,
    unit_norm_aligned,
)
from .simulate import ScenarioConfig, run_study
from .smooth import default_lambda, lambda_rule_check

STUDY_METHODS = ("empirical", "minmax", "parametric", "frechet", "sshum", "nshum")


# ---------------------------------------------------------------------------
# manifest and writers
# ---------------------------------------------------------------------------

def _manifest(config, seed):
    # reproducible fields only: execution details (raw command, workers,
    # out dir, timings) live in timings.json so machine outputs stay
    # byte-identical across runs and worker counts
    body = {
        "config": config,
        "seed": seed,
        "version": __version__,
    }
    canonical = json.dumps(body, sort_keys=True, separators=(",", ":"))
    body["manifest_hash"] = hashlib.sha256(canonical.encode("utf-8")).hexdigest()
    return body


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path, header, rows, manifest_hash):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# manifest_hash={manifest_hash}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt4(v) for v in row) + "\n")


def _fmt4(v):
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def _out_dir(args):
    out = args.out or os.environ.get("SHUMFIT_OUT_DIR") or "."
    os.makedirs(out, exist_ok=True)
    return out


def _workers(args):
    if getattr(args, "workers", None):
        return args.workers
    env = os.environ.get("SHUMFIT_WORKERS")
    if env:
        return int(env)
    return os.cpu_count() or 1


def _fail(message, code):
    print(f"error: {message}", file=sys.stderr)
    return code


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------

def _parse_methods(token, allowed):
    methods = [m.strip() for m in token.split(",") if m.strip()]
    for m in methods:
        if m not in allowed:
            raise ShumFitError(f"unknown method {m!r} (choose from {', '.join(allowed)})")
    return methods


def _load_dataset(args):
    markers = [m.strip() for m in args.markers.split(",") if m.strip()]
    data = load_csv(args.data, args.outcome, markers)
    if data.n_dropped:
        print(f"dropped {data.n_dropped} incomplete row(s)", file=sys.stderr)
    if getattr(args, "log_transform", False):
        for x in data.categories:
            if not (x > 0).all():
                raise ShumFitError("log transform needs strictly positive marker values")
        data = MarkerDataset(
            categories=tuple(np.log(x) for x in data.categories),
            marker_names=data.marker_names,
            category_labels=data.category_labels,
            n_dropped=data.n_dropped,
        )
    return data


def _resolve_lambda(args, data):
    if args.lam is None or args.lam == "auto":
        return default_lambda(data.n_total), True
    try:
        lam = float(args.lam)
    except ValueError:
        raise ShumFitError(f"--lambda expects a number or 'auto', got {args.lam!r}")
    return lam, False


def cmd_fit(args):
    try:
        data = _load_dataset(args)
        methods = _parse_methods(args.methods, METHOD_NAMES)
        lam, auto_lam = _resolve_lambda(args, data)
    except (ShumFitError, OSError) as exc:
        return _fail(str(exc), 2)

    cfg = FitConfig(lam=lam)
    reports = {}
    for method in methods:
        try:
            report = fit_method(data, method, cfg)
            if args.bootstrap:
                report = dataclasses.replace(
                    report,
                    bootstrap=bootstrap_se(data, method, args.bootstrap,
                                           args.seed, cfg),
                )
        except (ShumFitError, np.linalg.LinAlgError) as exc:
            return _fail(f"fit failed for method {method}: {exc}", 3)
        reports[method] = report
        if auto_lam and method in ("sshum", "nshum"):
            frac = lambda_rule_check(data, report.coefficients.beta, lam)
            msg = f"lambda rule check ({method}): {frac:.3f} of adjacent pairs exceed 5*lambda"
            print(msg, file=sys.stderr)
            if frac < 0.9:
                print("warning: smoothing bandwidth may be too wide for this data",
                      file=sys.stderr)

    config = {
        "data": os.path.basename(args.data),
        "outcome": args.outcome,
        "markers": list(data.marker_names),
        "methods": methods,
        "lambda": lam,
        "lambda_auto": auto_lam,
        "bootstrap": args.bootstrap,
        "log_transform": bool(args.log_transform),
        "format": args.format,
    }
    manifest = _manifest(config, args.seed)
    out = _out_dir(args)

    payload = {
        "manifest_hash": manifest["manifest_hash"],
        "n_per_category": list(data.sizes),
        "category_labels": list(data.category_labels),
        "n_dropped": data.n_dropped,
        "reports": {},
    }
    for method, report in reports.items():
        entry = {
            "coefficients": report.coefficients.beta,
            "anchor_index": report.coefficients.anchor_index,
            "coefficients_unit_norm": unit_norm_aligned(report.coefficients.beta),
            "ehum": report.ehum_at_solution,
            "objective": report.objective_at_solution,
            "iterations": report.iterations,
            "converged": report.converged,
        }
        if report.bootstrap is not None:
            entry["bootstrap"] = {
                "se_coefficients": report.bootstrap.se_coefficients,
                "se_ehum": report.bootstrap.se_ehum,
                "replicates": report.bootstrap.n_replicates,
                "failures": report.bootstrap.n_failures,
                "convention": report.bootstrap.convention,
            }
        payload["reports"][method] = entry

    _write_json(os.path.join(out, "fit_report.json"), payload)
    if args.format == "csv":
        rows = []
        for method, report in reports.items():
            unit = unit_norm_aligned(report.coefficients.beta)
            # minmax coefficients live on the derived (max, min) features
            names = ("max", "min") if method == "minmax" else data.marker_names
            for name, value in zip(names, unit):
                rows.append([method, name, float(value)])
            rows.append([method, "ehum", report.ehum_at_solution])
            if report.bootstrap is not None:
                rows.append([method, "se_ehum", report.bootstrap.se_ehum])
        _write_csv(os.path.join(out, "fit_report.csv"),
                   ["method", "quantity", "value"], rows,
                   manifest["manifest_hash"])
    _write_json(os.path.join(out, "manifest.json"), manifest)
    _write_json(os.path.join(out, "timings.json"),
                {"manifest_hash": manifest["manifest_hash"],
                 "command": args.raw_argv,
                 "wall_clock_s": time.process_time()})

    _print_fit_table(data, reports)
    return 0


def _print_fit_table(data, reports):
    methods = list(reports)
    dim_methods = [m for m in methods if m != "minmax"]
    width = max(12, *(len(m) + 2 for m in methods))
    if dim_methods:
        print("coefficients (unit norm)")
        print(f"{'marker':<12}" + "".join(f"{m:>{width}}" for m in dim_methods))
        units = {m: unit_norm_aligned(reports[m].coefficients.beta)
                 for m in dim_methods}
        for j, name in enumerate(data.marker_names):
            cells = "".join(f"{units[m][j]:>{width}.3f}" for m in dim_methods)
            print(f"{name:<12}" + cells)
    for m in methods:
        if m not in dim_methods:
            beta = reports[m].coefficients.beta
            print(f"{m}: max + ({beta[1]:.3f}) * min, "
                  f"ehum {reports[m].ehum_at_solution:.3f}")
    print(f"{'ehum':<12}" + "".join(
        f"{reports[m].ehum_at_solution:>{width}.3f}" for m in dim_methods))
    ses = [m for m in dim_methods if reports[m].bootstrap is not None]
    if ses:
        print(f"{'se(ehum)':<12}" + "".join(
            f"{reports[m].bootstrap.se_ehum:>{width}.3f}" if reports[m].bootstrap
            else " " * width for m in dim_methods))
    print(f"baseline 1/M! = {random_guess_baseline(data.n_categories):.4f}")


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def cmd_simulate(args):
    try:
        n = tuple(int(v) for v in args.n.split(","))
        methods = _parse_methods(args.methods, METHOD_NAMES)
        cfg = ScenarioConfig(scenario_id=args.scenario, n=n,
                             replications=args.reps, master_seed=args.seed)
    except (ShumFitError, ValueError) as exc:
        return _fail(str(exc), 2)

    try:
        summary = run_study(cfg, methods, FitConfig(), workers=_workers(args))
    except StudyAborted as exc:
        return _fail(str(exc), 3)
    except ShumFitError as exc:
        return _fail(str(exc), 2)

    config = {
        "scenario": args.scenario,
        "n": list(n),
        "reps": args.reps,
        "methods": methods,
    }
    manifest = _manifest(config, args.seed)
    out = _out_dir(args)
    mhash = manifest["manifest_hash"]

    payload = {"manifest_hash": mhash, "scenario": args.scenario,
               "n": list(n), "reps": args.reps, "methods": {}}
    ehum_rows, coef_rows = [], []
    timings = {}
    for ms in summary.methods:
        payload["methods"][ms.method] = {
            "mean_ehum": ms.mean_ehum,
            "sd_ehum": ms.sd_ehum,
            "coef_mean": ms.coef_mean,
            "coef_sd": ms.coef_sd,
            "coef_bias": ms.coef_bias,
            "n_failures": ms.n_failures,
        }
        ehum_rows.append([ms.method, ms.mean_ehum, ms.sd_ehum, ms.n_failures])
        for j in range(ms.coef_mean.size):
            coef_rows.append([
                ms.method, f"c{j + 1}", float(ms.coef_mean[j]),
                float(ms.coef_bias[j]) if ms.coef_bias is not None else "",
                float(ms.coef_sd[j]),
            ])
        timings[ms.method] = ms.wall_clock

    _write_json(os.path.join(out, "study_summary.json"), payload)
    _write_csv(os.path.join(out, "study_ehum.csv"),
               ["method", "mean_ehum", "sd_ehum", "n_failures"], ehum_rows, mhash)
    _write_csv(os.path.join(out, "study_coefficients.csv"),
               ["method", "coefficient", "mean", "bias", "sd"], coef_rows, mhash)
    _write_json(os.path.join(out, "manifest.json"), manifest)
    _write_json(os.path.join(out, "timings.json"),
                {"manifest_hash": mhash, "command": args.raw_argv,
                 "method_wall_clock_s": timings})

    print(f"scenario {args.scenario}  n={n}  R={args.reps}  seed={args.seed}")
    print(f"{'method':<12}{'mean ehum':>12}{'sd':>10}{'failures':>10}")
    for ms in summary.methods:
        print(f"{ms.method:<12}{ms.mean_ehum:>12.3f}{ms.sd_ehum:>10.3f}"
              f"{ms.n_failures:>10d}")
    return 0


# ---------------------------------------------------------------------------
# hum
# ---------------------------------------------------------------------------

def cmd_hum(args):
    try:
        data = _load_dataset(args)
        if args.weights.strip() == "naive":
            d = data.n_markers
            weights = np.full(d, 1.0 / np.sqrt(d))
        else:
            weights = np.array([float(w) for w in args.weights.split(",")])
        if weights.size != data.n_markers:
            raise ShumFitError(
                f"{weights.size} weights for {data.n_markers} markers"
            )
    except (ShumFitError, ValueError, OSError) as exc:
        return _fail(str(exc), 2)

    combined = ehum_fast(project_scores(data, weights)).value
    individual = {}
    for j, name in enumerate(data.marker_names):
        individual[name] = ehum_fast([x[:, j] for x in data.categories]).value
    baseline = random_guess_baseline(data.n_categories)

    print(f"combined ehum: {combined:.3f}")
    print("individual marker ehum:")
    for name, value in individual.items():
        print(f"  {name:<12}{value:>8.3f}")
    print(f"baseline 1/M!: {baseline:.4f}")

    if args.out or os.environ.get("SHUMFIT_OUT_DIR"):
        config = {
            "data": os.path.basename(args.data),
            "outcome": args.outcome,
            "markers": list(data.marker_names),
            "weights": [float(w) for w in weights],
        }
        manifest = _manifest(config, 0)
        out = _out_dir(args)
        _write_json(os.path.join(out, "hum.json"), {
            "manifest_hash": manifest["manifest_hash"],
            "combined_ehum": combined,
            "individual_ehum": individual,
            "baseline": baseline,
        })
        _write_json(os.path.join(out, "manifest.json"), manifest)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="shumfit",
        description="Linear biomarker combinations for ordered multi-category outcomes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit combination methods to a CSV dataset")
    fit.add_argument("--data", required=True)
    fit.add_argument("--outcome", required=True)
    fit.add_argument("--markers", required=True, help="comma-separated column names")
    fit.add_argument("--methods", default=",".join(METHOD_NAMES))
    fit.add_argument("--lambda", dest="lam", default="auto",
                     help="smoothing bandwidth, a number or 'auto' (1/sqrt(n))")
    fit.add_argument("--bootstrap", type=int, default=0, metavar="B")
    fit.add_argument("--log-transform", action="store_true")
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--out", default=None)
    fit.add_argument("--format", choices=("json", "csv"), default="json")
    fit.set_defaults(func=cmd_fit)

    sim = sub.add_parser("simulate", help="run a replication study")
    sim.add_argument("--scenario", type=int, choices=(1, 2, 3, 4), required=True)
    sim.add_argument("--n", required=True, help="per-category sizes, e.g. 120,120,120")
    sim.add_argument("--reps", type=int, required=True)
    sim.add_argument("--methods", default=",".join(STUDY_METHODS))
    sim.add_argument("--seed", type=int, default=1)
    sim.add_argument("--out", default=None)
    sim.add_argument("--workers", type=int, default=None)
    sim.set_defaults(func=cmd_simulate)

    hum = sub.add_parser("hum", help="evaluate the empirical HUM of fixed weights")
    hum.add_argument("--data", required=True)
    hum.add_argument("--outcome", required=True)
    hum.add_argument("--markers", required=True)
    hum.add_argument("--weights", required=True,
                     help="comma-separated weights, or 'naive'")
    hum.add_argument("--log-transform", action="store_true")
    hum.add_argument("--out", default=None)
    hum.set_defaults(func=cmd_hum)
    return parser


def main(argv=None):
    raw = list(sys.argv[1:]) if argv is None else list(argv)
    args = build_parser().parse_args(raw)
    args.raw_argv = raw
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
