"""Command-line front end.

Commands
--------
simulate   draw a point pattern from a configured model -> points CSV
fit        fit one penalized model -> fit.json
path       fit a whole lambda path -> path.json
select     pick a path entry by the information criterion -> selection.json
se         sandwich standard errors for a fit -> se.json
study      replicated simulation study -> report CSV + figures
surface    fitted-intensity raster for a converged fit -> ASCII grid

Every command accepts a TOML config (``--config``) with flag overrides;
unknown keys are rejected.  The fully resolved configuration is echoed
into JSON outputs under ``"config"`` and next to CSV/raster outputs as
``<out>.config.toml``, and re-running from the echo reproduces the output
byte for byte (fixed seed and worker count).

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
Failures also emit a one-line JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import toml
import tomli

from .domain import Window, standardize
from .errors import DataError, NumericError
from .inference import compute_ABC, compute_sigma
from .io import (dump_scheme_csv, load_covariate_dir, load_pattern_csv,
                 read_ascii_grid, save_pattern_csv, write_ascii_grid)
from .penalties import PENALTY_KINDS, PenaltySpec, adaptive_lambdas
from .quadrature import Likelihood, POISSON, build_scheme
from .simulate import (IntensityModel, ThomasParams, calibrate_intercept,
                       simulate_poisson, simulate_thomas,
                       thomas_pair_correlation)
from .solver import (SolverConfig, compute_wpl_weights, fit_penalized,
                     lambda_path)
from .study import MethodSpec, ScenarioSpec, StudyConfig, run_study
from .tuning import select_lambda, wqbic
from .domain import CovariateStack, RasterGrid

__all__ = ["main"]

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route argparse failures to exit code 1
        raise UsageError(message)


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------

def _resolve_path(base_dir, p):
    """Resolve a config-file path entry against the config's directory."""
    if p is None:
        return None
    p = Path(p)
    if p.is_absolute() or base_dir is None:
        return str(p)
    return str((Path(base_dir) / p).resolve())


def _load_toml(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise DataError(f"config file not found: {path}")
    with open(path, "rb") as fh:
        try:
            return tomli.load(fh)
        except tomli.TOMLDecodeError as exc:
            raise DataError(f"{path}: invalid TOML: {exc}") from exc


def _check_keys(section: dict, allowed, where: str) -> None:
    unknown = set(section) - set(allowed)
    if unknown:
        raise DataError(f"unknown key(s) {sorted(unknown)} in {where}; "
                        f"allowed: {sorted(allowed)}")


def _echo_config(resolved: dict, out_path) -> None:
    sidecar = Path(str(out_path) + ".config.toml")
    with open(sidecar, "w") as fh:
        fh.write(toml.dumps(resolved))


def _window_from(cfg: dict, where: str = "[window]") -> Window:
    _check_keys(cfg, {"x_min", "x_max", "y_min", "y_max"}, where)
    try:
        return Window(float(cfg["x_min"]), float(cfg["x_max"]),
                      float(cfg["y_min"]), float(cfg["y_max"]))
    except KeyError as exc:
        raise DataError(f"{where} must define x_min/x_max/y_min/y_max") from exc


def _solver_from(cfg: dict) -> SolverConfig:
    allowed = {"tol", "max_outer", "max_inner", "n_lambda", "lambda_min_ratio",
               "penalize_intercept", "standardize_internally"}
    _check_keys(cfg, allowed, "[solver]")
    try:
        return SolverConfig(**cfg)
    except (TypeError, ValueError) as exc:
        raise DataError(f"[solver]: {exc}") from exc


def _thomas_from(cfg: dict, where: str = "[thomas]") -> ThomasParams:
    _check_keys(cfg, {"kappa", "omega", "mu"}, where)
    try:
        return ThomasParams(float(cfg["kappa"]), float(cfg["omega"]),
                            float(cfg["mu"]) if "mu" in cfg else None)
    except KeyError as exc:
        raise DataError(f"{where} needs kappa and omega") from exc


def _json_dump(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _float_list(x):
    return [float(v) for v in np.asarray(x).ravel()]


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _build_sim_model(cfg: dict, base_dir=None):
    # seed/out appear in echoed configs; accept and ignore them
    _check_keys(cfg, {"window", "model", "thomas", "seed", "out"},
                "simulate config")
    window = _window_from(cfg.get("window", {}))
    model_cfg = cfg.setdefault("model", {})
    _check_keys(model_cfg, {"covariate_dir", "standardize", "beta",
                            "intercept", "target_count"}, "[model]")
    cov_dir = model_cfg.get("covariate_dir")
    if cov_dir:
        cov_dir = _resolve_path(base_dir, cov_dir)
        model_cfg["covariate_dir"] = cov_dir
    if cov_dir:
        stack = load_covariate_dir(cov_dir)
        if stack.window != window:
            raise DataError(
                f"covariate window {stack.window} does not match [window] {window}"
            )
        if model_cfg.get("standardize", True):
            stack, _ = standardize(stack)
        stack = stack.with_intercept(True)
        beta_cov = [float(b) for b in model_cfg.get("beta", [])]
        if len(beta_cov) != stack.n_covariates:
            raise DataError(
                f"[model].beta has {len(beta_cov)} entries for "
                f"{stack.n_covariates} covariates"
            )
    else:
        ones = RasterGrid(1, 1, window, np.ones((1, 1)), "const")
        stack = CovariateStack((ones,), includes_intercept=False)
        # intercept-only: the single constant grid is the intercept column
        beta_cov = []

    has_target = "target_count" in model_cfg
    has_intercept_val = "intercept" in model_cfg
    if has_target == has_intercept_val:
        raise DataError("[model] needs exactly one of intercept / target_count")
    if cov_dir:
        if has_target:
            beta = calibrate_intercept(stack, beta_cov, float(model_cfg["target_count"]))
        else:
            beta = np.concatenate([[float(model_cfg["intercept"])], beta_cov])
    else:
        if has_target:
            b0 = np.log(float(model_cfg["target_count"]) / window.area())
        else:
            b0 = float(model_cfg["intercept"])
        beta = np.array([b0])
    model = IntensityModel(stack, beta)
    thomas = _thomas_from(cfg["thomas"]) if "thomas" in cfg else None
    return model, thomas


def _cmd_simulate(args) -> int:
    cfg = _load_toml(args.config)
    model, thomas = _build_sim_model(cfg, Path(args.config).parent)
    if thomas is None:
        pattern = simulate_poisson(model, args.seed)
    else:
        pattern = simulate_thomas(model, thomas, args.seed)
    save_pattern_csv(pattern, args.out)
    resolved = dict(cfg)
    resolved["seed"] = args.seed
    resolved["out"] = str(args.out)
    _echo_config(resolved, args.out)
    print(f"wrote {pattern.n_points} points to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# fit / path
# ---------------------------------------------------------------------------

_FIT_KEYS = {"points", "covariates", "standardize", "penalty", "lambda",
             "gamma", "likelihood", "delta", "weights", "dummy",
             "dump_scheme"}


def _resolve_fit_config(args) -> dict:
    cfg = _load_toml(args.config) if args.config else {}
    base_dir = Path(args.config).parent if args.config else None
    _check_keys(cfg, {"fit", "window", "solver", "wpl", "out"}, "fit config")
    fit_cfg = dict(cfg.get("fit", {}))
    _check_keys(fit_cfg, _FIT_KEYS, "[fit]")
    for key in ("points", "covariates"):
        if key in fit_cfg:
            fit_cfg[key] = _resolve_path(base_dir, fit_cfg[key])

    def override(key, value):
        if value is not None:
            fit_cfg[key] = value

    override("points", args.points)
    override("covariates", args.covariates)
    override("penalty", args.penalty)
    override("lambda", args.lam)
    override("gamma", args.gamma)
    override("likelihood", args.likelihood)
    override("delta", args.delta)
    override("weights", args.weights)
    override("dummy", args.dummy)

    fit_cfg.setdefault("penalty", "lasso")
    fit_cfg.setdefault("lambda", "auto")
    fit_cfg.setdefault("likelihood", "poisson")
    fit_cfg.setdefault("weights", "none")
    fit_cfg.setdefault("standardize", True)
    if fit_cfg["penalty"] not in PENALTY_KINDS:
        raise DataError(f"unknown penalty '{fit_cfg['penalty']}'")
    if fit_cfg["likelihood"] not in ("poisson", "logistic"):
        raise DataError(f"unknown likelihood '{fit_cfg['likelihood']}'")
    if fit_cfg["weights"] not in ("none", "wpl"):
        raise DataError(f"unknown weights mode '{fit_cfg['weights']}'")
    if "points" not in fit_cfg or "covariates" not in fit_cfg:
        raise UsageError("fit needs --points and --covariates (or config keys)")

    wpl_cfg = dict(cfg.get("wpl", {}))
    _check_keys(wpl_cfg, {"kappa", "omega", "radius"}, "[wpl]")
    return {
        "fit": fit_cfg,
        "window": dict(cfg.get("window", {})) if "window" in cfg else None,
        "solver": dict(cfg.get("solver", {})),
        "wpl": wpl_cfg,
    }


def _prepare_fit_inputs(resolved):
    fit_cfg = resolved["fit"]
    stack = load_covariate_dir(fit_cfg["covariates"])
    if resolved["window"] is not None:
        window = _window_from(resolved["window"])
        if window != stack.window:
            raise DataError("[window] does not match the covariate grids")
    if fit_cfg["standardize"]:
        stack, _ = standardize(stack)
    stack = stack.with_intercept(True)
    pattern = load_pattern_csv(fit_cfg["points"], stack.window)

    dummy = fit_cfg.get("dummy")
    if dummy is None:
        nx, ny = min(stack.n_cols, 201), min(stack.n_rows, 101)
    else:
        try:
            nx, ny = (int(v) for v in str(dummy).lower().split("x"))
        except ValueError as exc:
            raise DataError(f"dummy grid must look like '100x50', got {dummy!r}") from exc
    scheme = build_scheme(pattern, stack, nx, ny)
    fit_cfg["dummy"] = f"{nx}x{ny}"

    if fit_cfg["likelihood"] == "logistic":
        delta = fit_cfg.get("delta")
        if delta is None:
            delta = (scheme.n_points - scheme.n_data) / scheme.domain_area()
            fit_cfg["delta"] = delta
        likelihood = Likelihood("logistic", float(delta))
    else:
        likelihood = POISSON
    solver = _solver_from(resolved["solver"])
    return stack, scheme, likelihood, solver


def _wpl_weight_vector(scheme, model, resolved):
    wpl_cfg = resolved["wpl"]
    if "kappa" not in wpl_cfg or "omega" not in wpl_cfg:
        raise DataError("weights='wpl' needs [wpl] kappa and omega for the "
                        "pair-correlation model")
    params = ThomasParams(float(wpl_cfg["kappa"]), float(wpl_cfg["omega"]))
    radius = float(wpl_cfg.get("radius", 4.0 * params.omega))
    wpl_cfg["radius"] = radius
    return compute_wpl_weights(scheme, model,
                               lambda r: thomas_pair_correlation(params, r),
                               radius)


def _auto_fit(scheme, w, likelihood, kind, gamma, solver):
    if kind in ("adaptive_lasso", "adaptive_enet"):
        from .tuning import fit_adaptive
        fit = fit_adaptive(scheme, w, likelihood, kind, solver, gamma=gamma)
        return fit, None
    path = lambda_path(scheme, w, likelihood, PenaltySpec(kind, 1.0, gamma), solver)
    sel = select_lambda(path, scheme, w, likelihood)
    return path[sel.chosen_index][1], (path, sel)


def _single_fit(scheme, w, likelihood, kind, gamma, lam, solver):
    if kind in ("adaptive_lasso", "adaptive_enet"):
        pilot_path = lambda_path(scheme, w, likelihood, PenaltySpec("ridge", 1.0),
                                 solver)
        pilot_sel = select_lambda(pilot_path, scheme, w, likelihood)
        pilot = pilot_path[pilot_sel.chosen_index][1]
        lam_w, capped = adaptive_lambdas(1.0,
                                         pilot.beta_hat[scheme.penalized_columns])
        spec = PenaltySpec(kind, lam, gamma, lam_weights=lam_w,
                           weight_capped=capped)
        return fit_penalized(scheme, w, likelihood, spec, solver)
    return fit_penalized(scheme, w, likelihood, PenaltySpec(kind, lam, gamma), solver)


def _fit_with_weights(scheme, stack, resolved, likelihood, solver):
    """Apply the pilot-then-reweight flow when weights='wpl'."""
    fit_cfg = resolved["fit"]
    kind, gamma = fit_cfg["penalty"], fit_cfg.get("gamma")
    lam = fit_cfg["lambda"]

    def run(w):
        if lam == "auto":
            return _auto_fit(scheme, w, likelihood, kind, gamma, solver)
        return _single_fit(scheme, w, likelihood, kind, gamma, float(lam), solver), None

    if fit_cfg["weights"] == "none":
        return run(1.0) + (np.ones(scheme.n_points),)
    pilot_fit, _ = run(1.0)
    pilot_model = IntensityModel(stack, pilot_fit.beta_hat)
    w = _wpl_weight_vector(scheme, pilot_model, resolved)
    fit, extra = run(w)
    return fit, extra, w


def _fit_to_dict(fit, scheme, resolved=None) -> dict:
    names = list(scheme.column_names)
    out = {
        "beta": {names[j]: float(b) for j, b in enumerate(fit.beta_hat)},
        "beta_vector": _float_list(fit.beta_hat),
        "columns": names,
        "support": [int(j) for j in fit.support],
        "support_names": [names[j] for j in fit.support],
        "lambda": fit.lam,
        "objective": fit.objective,
        "loglik": fit.loglik,
        "converged": bool(fit.converged),
        "diagnostics": {
            "n_outer": fit.n_outer,
            "n_inner": fit.n_inner,
            "overflow_warnings": fit.overflow_warnings,
            "kkt": fit.kkt,
            **{k: (int(v) if isinstance(v, (int, np.integer)) else float(v))
               for k, v in fit.diagnostics.items()
               if isinstance(v, (int, float, np.integer, np.floating))},
        },
    }
    if resolved is not None:
        out["config"] = resolved
    return out


def _cmd_fit(args) -> int:
    resolved = _resolve_fit_config(args)
    stack, scheme, likelihood, solver = _prepare_fit_inputs(resolved)
    fit, _, w = _fit_with_weights(scheme, stack, resolved, likelihood, solver)
    if not fit.converged:
        raise NumericError("fit did not converge; try more iterations or a "
                           "larger tolerance")
    dump = resolved["fit"].get("dump_scheme")
    if dump:
        dump_scheme_csv(scheme, dump)
    resolved["out"] = str(args.out)
    _json_dump(_fit_to_dict(fit, scheme, resolved), args.out)
    print(f"fit written to {args.out} "
          f"(lambda={fit.lam:.6g}, support size {len(fit.support)})")
    return EXIT_OK


def _cmd_path(args) -> int:
    resolved = _resolve_fit_config(args)
    stack, scheme, likelihood, solver = _prepare_fit_inputs(resolved)
    fit_cfg = resolved["fit"]
    kind, gamma = fit_cfg["penalty"], fit_cfg.get("gamma")
    if kind in ("adaptive_lasso", "adaptive_enet"):
        raise DataError("the path command covers single-stage penalties; use "
                        "'fit' for adaptive kinds")
    if fit_cfg["weights"] == "wpl":
        pilot, _ = _auto_fit(scheme, 1.0, likelihood, kind, gamma, solver)
        w = _wpl_weight_vector(scheme, IntensityModel(stack, pilot.beta_hat),
                               resolved)
    else:
        w = 1.0
    path = lambda_path(scheme, w, likelihood, PenaltySpec(kind, 1.0, gamma), solver)
    resolved["out"] = str(args.out)
    entries = []
    for lam, fit in path:
        d = _fit_to_dict(fit, scheme)
        d["lambda"] = lam
        entries.append(d)
    _json_dump({"entries": entries, "domain_area": scheme.domain_area(),
                "config": resolved}, args.out)
    print(f"path with {len(entries)} entries written to {args.out}")
    return EXIT_OK


def _cmd_select(args) -> int:
    path_file = Path(args.path)
    if not path_file.exists():
        raise DataError(f"path file not found: {path_file}")
    with open(path_file) as fh:
        payload = json.load(fh)
    entries = payload.get("entries", [])
    if not entries:
        raise DataError(f"{path_file}: no path entries")
    area = float(payload["domain_area"])
    records = []
    for e in entries:
        s = len(e["support"])
        records.append({
            "lambda": float(e["lambda"]),
            "loglik": float(e["loglik"]),
            "n_selected": s,
            "wqbic": wqbic(float(e["loglik"]), s, area),
            "converged": bool(e["converged"]),
        })
    candidates = [i for i, r in enumerate(records) if r["converged"]]
    if not candidates:
        raise NumericError("no converged entries in the path file")
    best = min(candidates, key=lambda i: (records[i]["wqbic"], -records[i]["lambda"]))
    out = {"chosen_index": best, "chosen": entries[best], "records": records,
           "config": {"path": str(path_file), "out": str(args.out)}}
    _json_dump(out, args.out)
    print(f"selected entry {best} (lambda={records[best]['lambda']:.6g}, "
          f"wqbic={records[best]['wqbic']:.6g})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# se
# ---------------------------------------------------------------------------

def _cmd_se(args) -> int:
    fit_file = Path(args.fit)
    if not fit_file.exists():
        raise DataError(f"fit file not found: {fit_file}")
    with open(fit_file) as fh:
        fit_doc = json.load(fh)
    fit_cfg = fit_doc.get("config", {}).get("fit", {})
    cov_dir = args.covariates or fit_cfg.get("covariates")
    if not cov_dir:
        raise UsageError("se needs --covariates (not recorded in the fit file)")
    stack = load_covariate_dir(cov_dir)
    if fit_cfg.get("standardize", True):
        stack, _ = standardize(stack)
    stack = stack.with_intercept(True)
    beta = np.asarray(fit_doc["beta_vector"], dtype=float)
    if len(beta) != stack.n_outputs:
        raise DataError("fit coefficients do not match the covariate stack")

    g_kind = args.g or ("thomas" if fit_doc.get("config", {}).get("wpl") else "poisson")
    wpl_cfg = fit_doc.get("config", {}).get("wpl", {}) or {}
    if g_kind == "thomas":
        kappa = args.kappa if args.kappa is not None else wpl_cfg.get("kappa")
        omega = args.omega if args.omega is not None else wpl_cfg.get("omega")
        if kappa is None or omega is None:
            raise UsageError("g='thomas' needs --kappa and --omega")
        params = ThomasParams(float(kappa), float(omega))
        g_r = lambda r: thomas_pair_correlation(params, r)  # noqa: E731
        radius = float(args.radius if args.radius is not None
                       else wpl_cfg.get("radius", 4.0 * params.omega))
    elif g_kind == "poisson":
        g_r, params, radius = None, None, None
    else:
        raise UsageError(f"unknown pair-correlation model '{g_kind}'")

    model = IntensityModel(stack, beta)
    weights_mode = fit_cfg.get("weights", "none")
    if weights_mode == "wpl":
        if g_r is None:
            raise DataError("fit used wpl weights; se needs the thomas g model")
        from .solver import pair_correlation_excess
        excess = pair_correlation_excess(g_r, radius)
        w_fn = lambda x, y: 1.0 / (1.0 + model.intensity_at(x, y) * excess)  # noqa: E731
    else:
        w_fn = None

    likelihood = fit_cfg.get("likelihood", "poisson")
    delta = float(fit_cfg["delta"]) if likelihood == "logistic" else None
    mats = compute_ABC(stack, beta, w=w_fn, g_r=g_r,
                       likelihood=likelihood, delta=delta)

    support = [0] + [int(j) for j in fit_doc["support"]]
    kind = fit_cfg.get("penalty", "lasso")
    gamma = fit_cfg.get("gamma")
    spec = None
    lam = fit_doc.get("lambda", 0.0)
    if lam and kind not in ("lasso", "adaptive_lasso"):
        spec = PenaltySpec(kind, float(lam), gamma)
    est = compute_sigma(mats, support, spec, beta, stack.window.area())
    ses = est.standard_errors(stack.window.area())
    names = fit_doc.get("columns") or stack.column_names()
    rows = []
    for k, col in enumerate(est.support):
        b = float(beta[col])
        se = float(ses[k])
        rows.append({"column": int(col), "name": names[col], "estimate": b,
                     "se": se, "z": b / se if se > 0 else float("nan")})
    out = {"coefficients": rows, "sigma": [_float_list(r) for r in est.sigma],
           "config": {"fit": str(fit_file), "covariates": str(cov_dir),
                      "g": g_kind,
                      "kappa": params.kappa if params else None,
                      "omega": params.omega if params else None,
                      "radius": radius, "out": str(args.out)}}
    _json_dump(out, args.out)
    print(f"standard errors for {len(rows)} coefficients written to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# study
# ---------------------------------------------------------------------------

def _cmd_study(args) -> int:
    cfg = _load_toml(args.config)
    _check_keys(cfg, {"study", "scenario", "thomas", "quadrature", "solver",
                      "wpl", "methods", "out"}, "study config")
    study_cfg = dict(cfg.get("study", {}))
    _check_keys(study_cfg, {"replicates", "seed", "threads", "figures"}, "[study]")
    sc = dict(cfg.get("scenario", {}))
    _check_keys(sc, {"n_covariates", "true_support", "beta_true", "window",
                     "grid", "target_count", "extra_source", "real_grid_dir",
                     "collinearity_base"}, "[scenario]")
    quad = dict(cfg.get("quadrature", {}))
    _check_keys(quad, {"n_dummy_x", "n_dummy_y"}, "[quadrature]")
    wpl_cfg = dict(cfg.get("wpl", {}))
    _check_keys(wpl_cfg, {"radius", "delta"}, "[wpl]")

    try:
        win = sc["window"]
        window = Window(float(win[0]), float(win[1]), float(win[2]), float(win[3]))
        grid = sc.get("grid", [201, 101])
        scenario = ScenarioSpec(
            n_covariates=int(sc["n_covariates"]),
            true_support=tuple(int(j) for j in sc["true_support"]),
            beta_true=tuple(float(b) for b in sc["beta_true"]),
            window=window,
            n_cols=int(grid[0]), n_rows=int(grid[1]),
            target_count=float(sc.get("target_count", 1600.0)),
            thomas=_thomas_from(cfg["thomas"]) if "thomas" in cfg else None,
            extra_source=sc.get("extra_source", "gaussian_white_noise"),
            real_grid_dir=_resolve_path(Path(args.config).parent,
                                        sc.get("real_grid_dir")),
            collinearity_base=float(sc.get("collinearity_base", 0.7)),
        )
    except KeyError as exc:
        raise DataError(f"[scenario] is missing required key {exc}") from exc

    methods = []
    for m in cfg.get("methods", []):
        _check_keys(m, {"penalty", "likelihood", "weights", "gamma"},
                    "[[methods]]")
        methods.append(MethodSpec(
            penalty=m["penalty"], likelihood=m.get("likelihood", "poisson"),
            weights=m.get("weights", "none"), gamma=m.get("gamma"),
        ))
    if not methods:
        raise DataError("study config needs at least one [[methods]] table")

    seed = args.seed if args.seed is not None else study_cfg.get("seed")
    if seed is None:
        raise UsageError("study needs a master seed (--seed or [study].seed)")
    threads = args.threads if args.threads is not None else int(study_cfg.get("threads", 1))
    config = StudyConfig(
        replicates=int(study_cfg.get("replicates", 100)),
        master_seed=int(seed),
        n_dummy_x=int(quad["n_dummy_x"]) if "n_dummy_x" in quad else None,
        n_dummy_y=int(quad["n_dummy_y"]) if "n_dummy_y" in quad else None,
        solver=_solver_from(dict(cfg.get("solver", {}))),
        wpl_radius=float(wpl_cfg["radius"]) if "radius" in wpl_cfg else None,
        logistic_delta=float(wpl_cfg["delta"]) if "delta" in wpl_cfg else None,
        threads=threads,
    )

    report = run_study(scenario, methods, config)

    from .report import render_report_figures, write_report_csv
    out = Path(args.out)
    write_report_csv(report, out)
    resolved = dict(cfg)
    resolved.setdefault("study", {})
    resolved["study"].update(seed=int(seed), threads=threads,
                             replicates=config.replicates)
    resolved["out"] = str(out)
    _echo_config(resolved, out)
    figures = study_cfg.get("figures", True) and not args.no_figures
    made = []
    if figures:
        made = render_report_figures(report, out.parent, stem=out.stem)
    print(f"study report ({len(report.rows)} rows, "
          f"{report.n_replicates} replicates, {report.runtime_s:.1f}s) "
          f"written to {out}" + (f"; figures: {', '.join(str(p) for p in made)}"
                                 if made else ""))
    return EXIT_OK


# ---------------------------------------------------------------------------
# surface
# ---------------------------------------------------------------------------

def _cmd_surface(args) -> int:
    fit_file = Path(args.fit)
    if not fit_file.exists():
        raise DataError(f"fit file not found: {fit_file}")
    with open(fit_file) as fh:
        fit_doc = json.load(fh)
    if not fit_doc.get("converged", False):
        raise NumericError("fit did not converge; refusing to render a surface")
    fit_cfg = fit_doc.get("config", {}).get("fit", {})
    cov_dir = args.covariates or fit_cfg.get("covariates")
    if not cov_dir:
        raise UsageError("surface needs --covariates")
    stack = load_covariate_dir(cov_dir)
    if fit_cfg.get("standardize", True):
        stack, _ = standardize(stack)
    stack = stack.with_intercept(True)
    beta = np.asarray(fit_doc["beta_vector"], dtype=float)
    if len(beta) != stack.n_outputs:
        raise DataError("fit coefficients do not match the covariate stack")
    model = IntensityModel(stack, beta)
    surface = RasterGrid(stack.n_cols, stack.n_rows, stack.window,
                         model.intensity_grid(), name="intensity")
    write_ascii_grid(surface, args.out, fmt="%.17g")
    _echo_config({"fit": str(fit_file), "covariates": str(cov_dir),
                  "out": str(args.out)}, args.out)
    if args.png:
        from .report import render_surface_png
        render_surface_png(surface, Path(args.out).with_suffix(".png"))
    print(f"intensity surface written to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing and dispatch
# ---------------------------------------------------------------------------

def _build_parser() -> _Parser:
    parser = _Parser(prog="ppreg",
                     description="Penalized intensity estimation for spatial "
                                 "point processes")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("simulate", help="simulate a point pattern")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    def add_fit_args(q):
        q.add_argument("--config")
        q.add_argument("--points")
        q.add_argument("--covariates")
        q.add_argument("--penalty", choices=PENALTY_KINDS)
        q.add_argument("--lambda", dest="lam",
                       type=lambda s: s if s == "auto" else float(s))
        q.add_argument("--gamma", type=float)
        q.add_argument("--likelihood", choices=["poisson", "logistic"])
        q.add_argument("--delta", type=float)
        q.add_argument("--weights", choices=["none", "wpl"])
        q.add_argument("--dummy", help="dummy grid, e.g. 100x50")
        q.add_argument("--out", required=True)

    p = sub.add_parser("fit", help="fit one penalized model")
    add_fit_args(p)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("path", help="fit a lambda path")
    add_fit_args(p)
    p.set_defaults(func=_cmd_path)

    p = sub.add_parser("select", help="select a path entry by the criterion")
    p.add_argument("--path", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("se", help="sandwich standard errors for a fit")
    p.add_argument("--fit", required=True)
    p.add_argument("--covariates")
    p.add_argument("--g", choices=["poisson", "thomas"])
    p.add_argument("--kappa", type=float)
    p.add_argument("--omega", type=float)
    p.add_argument("--radius", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_se)

    p = sub.add_parser("study", help="replicated simulation study")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_study)

    p = sub.add_parser("surface", help="fitted-intensity raster")
    p.add_argument("--fit", required=True)
    p.add_argument("--covariates")
    p.add_argument("--png", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_surface)
    return parser


def _emit_error(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "command", None) is None:
            parser.print_help()
            return EXIT_OK
        return args.func(args)
    except UsageError as exc:
        _emit_error("usage", str(exc))
        return EXIT_USAGE
    except DataError as exc:
        _emit_error("data", str(exc))
        return EXIT_DATA
    except NumericError as exc:
        _emit_error("numeric", str(exc))
        return EXIT_NUMERIC
    except ValueError as exc:
        _emit_error("data", str(exc))
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
