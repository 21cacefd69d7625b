"""Batch runner: one JSON experiment config in, ``report.json`` and CSVs out.

Exit status is 0 when every pass criterion of the run holds, 2 when one
fails and 1 on any error (malformed config, numerical failure).
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import math
import os
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .calculus import (
    DEFAULT_SEED,
    cauchy_solve,
    dunford_matrix,
    fit_contour,
    heat_semigroup,
    hinf_bound_estimate,
    imaginary_power,
    mode_propagators,
    random_sine_forcing,
    set_threads,
)
from .cone_laplacian import CrossSectionSpectrum, WeightedGrid, interval_spectrum, mode_operators
from .ellipticity import check_E4_numeric, e2_assumption, strip_report, window_report
from .errors import ConecalcError
from .hclass import HFunction
from .kernel_estimates import GreenKernelSpec, hardy_grid, hardy_norm_check, hardy_slope
from .operators import DenseOperator, DiagonalOperator, default_radii, sectoriality_scan, spectrum_in_sector
from .sectors import Sector

log = logging.getLogger("conecalc")

EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2

COMMANDS = (
    "sector-check",
    "weight-window",
    "ellipticity-report",
    "funcalc",
    "hinf-bound",
    "heat-solve",
    "cauchy",
    "hardy-check",
)

# ------------------------------------------------------------------ schema

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_THETA = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": math.pi}
_ENTRY = {"oneOf": [_NUM, {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}]}

_OPERATOR = {
    "oneOf": [
        {
            "type": "object",
            "properties": {"kind": {"const": "diagonal"}, "entries": {"type": "array", "items": _ENTRY}},
            "required": ["kind", "entries"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "dense"},
                "matrix": {"type": "array", "items": {"type": "array", "items": _ENTRY}},
            },
            "required": ["kind", "matrix"],
            "additionalProperties": False,
        },
    ]
}

_BC = {"enum": ["Dirichlet", "Neumann"]}

_SPECTRUM = {
    "oneOf": [
        {
            "type": "object",
            "properties": {
                "kind": {"const": "interval"},
                "length": _POS,
                "bc": _BC,
                "count": {"type": "integer", "minimum": 1},
            },
            "required": ["kind", "length", "bc", "count"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "list"},
                "eigs": {"type": "array", "items": {"type": "number", "maximum": 0}, "minItems": 1},
                "bc": _BC,
            },
            "required": ["kind", "eigs", "bc"],
            "additionalProperties": False,
        },
    ]
}

_GRID = {"type": "array", "prefixItems": [_POS, {"type": "integer", "minimum": 1}], "minItems": 2, "maxItems": 2}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


_FUNCTION = _obj(
    {
        "kind": {"enum": ["power_quotient", "shifted_rational", "imaginary_power_regularized"]},
        "params": {"type": "object"},
    },
    ["kind", "params"],
)

PARAMETER_SCHEMAS = {
    "sector-check": _obj(
        {
            "theta": _THETA,
            "operator": _OPERATOR,
            "decades": {"type": "array", "prefixItems": [_NUM, _NUM], "minItems": 2, "maxItems": 2},
            "per_decade": {"type": "integer", "minimum": 1},
            "angles": {"type": "integer", "minimum": 2},
            "max_ratio": _POS,
        },
        ["theta", "operator"],
    ),
    "weight-window": _obj(
        {"n": {"type": "integer", "minimum": 1}, "bc": _BC, "lambda0": {"type": "number", "maximum": 0}},
        ["n", "bc", "lambda0"],
    ),
    "ellipticity-report": _obj(
        {
            "n": {"type": "integer", "minimum": 1},
            "spectrum": _SPECTRUM,
            "gamma": _NUM,
            "mu": {"type": "integer", "minimum": 1},
            "theta": _THETA,
            "grids": {"type": "array", "items": _GRID, "minItems": 2},
        },
        ["n", "spectrum", "theta", "grids"],
    ),
    "funcalc": _obj(
        {
            "theta": _THETA,
            "operator": _OPERATOR,
            "function": _FUNCTION,
            "tol": _POS,
            "max_nodes": {"type": "integer", "minimum": 8},
            "imaginary_powers": _obj(
                {
                    "t": {"type": "array", "items": _NUM, "minItems": 1},
                    "mode": {"enum": ["regularized", "closed_contour"]},
                    "growth_slack": _POS,
                },
                ["t"],
            ),
        },
        ["theta", "operator"],
    ),
    "hinf-bound": _obj(
        {
            "theta": _THETA,
            "operator": _OPERATOR,
            "family_size": {"type": "integer", "minimum": 1},
            "tol": _POS,
            "max_nodes": {"type": "integer", "minimum": 8},
            "refine": {"type": "integer", "minimum": 0},
            "max_M": _POS,
        },
        ["theta", "operator"],
    ),
    "heat-solve": _obj(
        {
            "theta": _THETA,
            "operator": _OPERATOR,
            "tau": {"type": "array", "items": _POS, "minItems": 1},
            "initial": {"type": "array", "items": _ENTRY},
            "tol": _POS,
        },
        ["operator", "tau"],
    ),
    "cauchy": _obj(
        {
            "n": {"type": "integer", "minimum": 1},
            "spectrum": _SPECTRUM,
            "gamma": _NUM,
            "grid": _GRID,
            "T": _POS,
            "steps": {"type": "integer", "minimum": 2},
            "r": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 1}, "minItems": 1},
            "forcings": {"type": "integer", "minimum": 1},
            "terms": {"type": "integer", "minimum": 1},
            "rho_max": _POS,
            "e4_theta": _THETA,
        },
        ["n", "spectrum", "grid", "T", "steps"],
    ),
    "hardy-check": _obj(
        {
            "epsilon": {"oneOf": [_POS, {"type": "array", "items": _POS, "minItems": 1}]},
            "p": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 1}, "minItems": 1},
            "grids": {"type": "array", "items": _GRID, "minItems": 1},
            "n": {"type": "integer", "minimum": 0},
            "samples": {"type": "integer", "minimum": 1},
            "slope_range": {"type": "array", "prefixItems": [_NUM, _NUM], "minItems": 2, "maxItems": 2},
        },
        ["epsilon", "grids"],
    ),
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "parameters": {"type": "object"},
        "output": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
    },
    "required": ["command", "parameters"],
    "additionalProperties": False,
    "allOf": [
        {
            "if": {"properties": {"command": {"const": cmd}}, "required": ["command"]},
            "then": {"properties": {"parameters": schema}},
        }
        for cmd, schema in PARAMETER_SCHEMAS.items()
    ],
}


class ConfigError(ConecalcError):
    pass


def validate_config(cfg) -> None:
    """Raise ``ConfigError`` listing every schema violation."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        lines = []
        for e in errors:
            # oneOf / allOf failures hide the useful message one level down
            leaf = jsonschema.exceptions.best_match([e]) if e.context else e
            path = "/".join(str(x) for x in leaf.absolute_path) or "<root>"
            lines.append(f"{path}: {leaf.message}")
        raise ConfigError("invalid config:\n  " + "\n  ".join(lines))


# ----------------------------------------------------------------- builders


def _complex(x):
    return complex(x[0], x[1]) if isinstance(x, list) else complex(x)


def _operator(spec):
    if spec["kind"] == "diagonal":
        eigs = np.array([_complex(x) for x in spec["entries"]])
        return DiagonalOperator(eigs if np.any(eigs.imag) else eigs.real)
    m = np.array([[_complex(x) for x in row] for row in spec["matrix"]])
    return DenseOperator(m if np.any(m.imag) else m.real)


def _spectrum(spec):
    if spec["kind"] == "interval":
        return interval_spectrum(spec["length"], spec["bc"], spec["count"])
    return CrossSectionSpectrum(tuple(spec["eigs"]), spec["bc"])


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [_jsonable(float(x.real)), _jsonable(float(x.imag))]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


# ----------------------------------------------------------------- commands
# Each returns (verdicts, estimates, data, extra_csvs).


def _cmd_sector_check(p, seed):
    op = _operator(p["operator"])
    sector = Sector(p["theta"])
    lo, hi = p.get("decades", [-4, 6])
    radii = default_radii((lo, hi), p.get("per_decade", 64))
    angles = np.linspace(sector.theta, 2 * math.pi - sector.theta, p.get("angles", 33))
    clear, offenders = spectrum_in_sector(op, sector)
    verdicts = {"spectrum_outside_sector": clear}
    est, data, extra = {}, {"scan": []}, {}
    ev = op.eigenvalues()
    extra["spectrum.csv"] = (("re", "im"), [(z.real, z.imag) for z in ev])
    if clear:
        scan = sectoriality_scan(op, sector, radii, angles)
        est = {"M_R": scan.m_r, "argmax": scan.argmax}
        data["scan"] = scan.rows()
        if "max_ratio" in p:
            verdicts["M_R_within_bound"] = scan.m_r <= p["max_ratio"]
    else:
        est = {"offending_eigenvalues": offenders}
    return verdicts, est, data, extra


def _cmd_weight_window(p, seed):
    spec = CrossSectionSpectrum((p["lambda0"],), p["bc"])
    rep = window_report(p["n"], spec.lambda0)
    pr = rep["parameters"]
    est = {"window": [pr["lower"], pr["upper"]], "s0": pr["s0"], "admissible": pr["admissible"],
           "rule_consistent": pr["rule_consistent"]}
    return {"admissible": rep["verdict"]}, est, {}, {}


def _cmd_ellipticity(p, seed):
    n, gamma, mu = p["n"], p.get("gamma", 0.0), p.get("mu", 2)
    spectrum = _spectrum(p["spectrum"])
    sector = Sector(p["theta"])
    reports = [
        window_report(n, spectrum.lambda0),
        strip_report(spectrum, n, gamma, mu, "line"),
        strip_report(spectrum, n, gamma, mu, "closed_strip"),
        e2_assumption(),
    ]
    modes, rows = [], []
    for R, N in p["grids"]:
        level = mode_operators(spectrum, WeightedGrid(R, N, gamma, n))
        modes += level
        for op in level:
            for z in op.eigenvalues():
                rows.append((R, N, op.lambda_j, z.real, z.imag))
    ok, e4 = check_E4_numeric(modes, sector)
    reports.append(e4)
    verdicts = {r["condition"]: r["verdict"] for r in reports}
    est = {"reports": reports, "spectrum": spectrum.to_dict()}
    extra = {"mode_spectra.csv": (("R", "N", "lambda_j", "re", "im"), rows)}
    return verdicts, est, {}, extra


def _cmd_funcalc(p, seed):
    op = _operator(p["operator"])
    sector = Sector(p["theta"])
    tol, max_nodes = p.get("tol", 1e-8), p.get("max_nodes", 400)
    verdicts, est, data = {}, {}, {"powers": []}
    if "function" in p:
        f = HFunction.from_spec({**p["function"], "theta": sector.theta})
        contour = fit_contour(op, f, tol=tol, max_nodes=max_nodes)
        value, res = dunford_matrix(op, f, contour)
        est["function"] = {"f": f.spec(), "value": value, "norm": op.op_norm(value), **res.to_dict()}
        # the a-posteriori figure compares against the half rule and is far more pessimistic
        verdicts["a_priori_error_within_tol"] = contour.error_estimate <= tol
    ip = p.get("imaginary_powers")
    if ip is not None:
        slack = ip.get("growth_slack", 1.1)
        rows = []
        for t in ip["t"]:
            res = imaginary_power(op, t, ip.get("mode", "regularized"), sector=sector)
            rows.append({"t": t, **res.to_dict()})
            data["powers"].append((t, res.norm, res.growth_bound))
        est["imaginary_powers"] = rows
        verdicts["growth_check"] = all(r["ratio"] <= slack for r in rows)
    return verdicts, est, data, {}


def _cmd_hinf(p, seed):
    op = _operator(p["operator"])
    rep = hinf_bound_estimate(
        op, Sector(p["theta"]), p.get("family_size", 16), seed,
        tol=p.get("tol", 1e-8), max_nodes=p.get("max_nodes", 2000), refine=p.get("refine", 0),
    )
    verdicts = {"family_complete": not rep.failures}
    if "max_M" in p:
        verdicts["M_hat_within_bound"] = bool(rep.M_hat <= p["max_M"])
    extra = {"hinf.csv": (("member", "kind", "norm_fA", "sup_f", "ratio", "nodes"),
                          [(k, r["f"]["kind"], r["norm_fA"], r["sup_f"], r["ratio"], r["nodes"])
                           for k, r in enumerate(rep.table)])}
    return verdicts, rep.to_dict(), {}, extra


def _cmd_heat(p, seed):
    op = _operator(p["operator"])
    sector = Sector(p.get("theta", math.pi / 2))
    tol = p.get("tol", 1e-12)
    rhs = None
    if "initial" in p:
        rhs = np.array([_complex(x) for x in p["initial"]])
    rows, traj, ok = [], [], True
    for tau in p["tau"]:
        val, res = heat_semigroup(op, tau, sector, rhs=rhs, tol=tol)
        norm = float(np.linalg.norm(val)) if rhs is not None else op.op_norm(val)
        rows.append({"tau": tau, "norm": norm, **res.to_dict()})
        traj.append((tau, 0, norm))
        ok = ok and res.error_estimate <= tol * max(1.0, norm)
    return {"converged": ok}, {"semigroup": rows}, {"trajectories": traj}, {}


def _cmd_cauchy(p, seed):
    n, gamma = p["n"], p.get("gamma", 0.0)
    R, N = p["grid"]
    spectrum = _spectrum(p["spectrum"])
    T, steps = p["T"], p["steps"]
    rs = p.get("r", [2.0])
    rho_max = p.get("rho_max", 50.0)
    modes = mode_operators(spectrum, WeightedGrid(R, N, gamma, n))
    check = Sector(p["e4_theta"]) if "e4_theta" in p else None
    tau = np.linspace(0.0, T, steps + 1)
    props = mode_propagators(modes, float(tau[1] - tau[0]))
    runs, traj, maxreg = [], [], []
    for k in range(p.get("forcings", 1)):
        forcing = random_sine_forcing(modes, T, p.get("terms", 4), seed + k)
        sol = cauchy_solve(modes, forcing, tau, list(rs), check_e4=check, propagators=props)
        reps = [r.to_dict() for r in sol.report]
        runs.append({"forcing": k, "reports": reps})
        maxreg += [(k, r["r"], r["rho"], r["norm_du"], r["norm_au"], r["norm_f"]) for r in reps]
        if k == 0:
            for j, (op, u) in enumerate(zip(modes, sol.u)):
                vals = np.sqrt(np.sum(np.abs(u) ** 2, axis=1) * op.grid.h)
                traj += [(float(t), j, float(v)) for t, v in zip(tau, vals)]
    rho = [row[2] for row in maxreg]
    verdicts = {"rho_below_max": all(math.isfinite(x) and x < rho_max for x in rho)}
    est = {"rho_max_observed": max(rho), "rho_min_observed": min(rho), "runs": runs}
    extra = {"maxreg.csv": (("forcing", "r", "rho", "norm_du", "norm_au", "norm_f"), maxreg)}
    return verdicts, est, {"trajectories": traj}, extra


def _cmd_hardy(p, seed):
    eps = p["epsilon"] if isinstance(p["epsilon"], list) else [p["epsilon"]]
    ps = p.get("p", [2.0])
    n = p.get("n", 0)
    results = []
    for R, N in p["grids"]:
        for pp in ps:
            grid = hardy_grid(R, N, n, pp)
            for e in eps:
                results.append(hardy_norm_check(GreenKernelSpec(e, n, grid), pp,
                                                samples=p.get("samples", 200), seed=seed))
    verdicts = {"norm_within_bound": all(r.passed for r in results)}
    est = {"results": [r.__dict__ for r in results]}
    if len(set(eps)) >= 2:
        lo, hi = p.get("slope_range", [0.8, 1.1])
        slopes = []
        for R, N in p["grids"]:
            for pp in ps:
                sel = [r for r in results if r.R == R and r.N == N and r.p == pp]
                slopes.append({"R": R, "N": N, "p": pp, "slope": hardy_slope(sel)})
        est["slopes"] = slopes
        verdicts["slope_in_range"] = all(lo <= s["slope"] <= hi for s in slopes)
    data = {"hardy": [(r.epsilon, r.p, r.N, r.R, r.norm_estimate, r.bound) for r in results]}
    return verdicts, est, data, {}


_HANDLERS = {
    "sector-check": _cmd_sector_check,
    "weight-window": _cmd_weight_window,
    "ellipticity-report": _cmd_ellipticity,
    "funcalc": _cmd_funcalc,
    "hinf-bound": _cmd_hinf,
    "heat-solve": _cmd_heat,
    "cauchy": _cmd_cauchy,
    "hardy-check": _cmd_hardy,
}

# ------------------------------------------------------------------ outputs

PLOT_COLUMNS = {
    "scan.csv": ("abs_lambda", "arg_lambda", "ratio"),
    "powers.csv": ("t", "norm", "bound"),
    "hardy.csv": ("epsilon", "p", "N", "R", "norm", "inv_epsilon"),
    "trajectories.csv": ("tau", "mode", "value"),
}


def _cell(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(x) for x in row])


def emit_plot_data(report: dict, out_dir=".") -> list[Path]:
    """Flat CSVs from the ``data`` block of a report; missing blocks give header-only files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = (report or {}).get("data", {}) or {}
    written = []
    for name, cols in PLOT_COLUMNS.items():
        write_csv(out / name, cols, data.get(name[:-4], []))
        written.append(out / name)
    return written


def resolve_seed(flag, config) -> int:
    """Flag beats ``CONECALC_SEED`` beats the config value."""
    if flag is not None:
        return int(flag)
    env = os.environ.get("CONECALC_SEED")
    if env not in (None, ""):
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"CONECALC_SEED must be an integer, got {env!r}") from exc
    return int(config.get("seed", DEFAULT_SEED))


def run(config: dict, out_dir=None, seed=None) -> tuple[int, dict]:
    """Validate, execute and write artifacts; returns ``(exit_code, report)``."""
    validate_config(config)
    seed = resolve_seed(seed, config)
    out = Path(out_dir or config.get("output", "conecalc-out"))
    cmd = config["command"]
    log.info("running %s with seed %d", cmd, seed)
    verdicts, estimates, data, extra = _HANDLERS[cmd](config["parameters"], seed)
    passed = all(v is True or v == "assumed" for v in verdicts.values())
    report = _jsonable({
        "tool": "conecalc",
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "command": cmd,
        "seed": seed,
        "parameters": config["parameters"],
        "verdicts": verdicts,
        "passed": passed,
        "estimates": estimates,
        "data": data,
    })
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report, fh, indent=2, allow_nan=False)
        fh.write("\n")
    emit_plot_data(report, out)
    for name, (cols, rows) in extra.items():
        write_csv(out / name, cols, rows)
    log.info("verdicts: %s", verdicts)
    return (EXIT_PASS if passed else EXIT_FAIL), report


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="conecalc", description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True, help="experiment config (JSON)")
    ap.add_argument("--out", help="output directory (overrides the config)")
    ap.add_argument("--seed", type=int, help="RNG seed (overrides CONECALC_SEED and the config)")
    ap.add_argument("--threads", type=int, default=1, help="worker threads for inner loops")
    ap.add_argument("--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        set_threads(args.threads)
        with open(args.config, encoding="utf-8") as fh:
            config = json.load(fh)
        code, report = run(config, args.out, args.seed)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ConecalcError, KeyError, TypeError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    verdict = "PASS" if code == EXIT_PASS else "FAIL"
    print(f"{report['command']}: {verdict} {json.dumps(report['verdicts'])}")
    return code


if __name__ == "__main__":
    sys.exit(main())
