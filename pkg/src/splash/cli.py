"""Command-line interface: ``splash {simulate,estimate,replicate,forecast-eval}``.

Settings come from the built-in defaults, then ``--config FILE``
(``key = value`` lines), then explicit flags. Every result file embeds the
resolved configuration and a ``schema_version``.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .config import FIELDS, ConfigError, RunConfig
from .estimators import CvGrid, ConstEstimator, GmwyEstimator, PvarEstimator, SplashEstimator
from .evaluation import rolling_windows, score_table, ts_cross_validate, window_length
from .experiments import METHOD_LABELS, METHODS, diagonal_profile, make_model, replicate
from .io import SCHEMA_VERSION, PanelFormatError, read_panel_csv, write_json, write_panel_csv, write_table_csv
from .linalg import spectral_norm
from .model import reduced_form
from .simulate import RngSpec, simulate_var
from . import solver

logger = logging.getLogger("splash")

HELP = {
    "design": "simulation design, A (random banded) or B (spatial grid)",
    "n": "number of units for design A",
    "m": "grid side for design B (N = m*m)",
    "k0": "bandwidth of design A",
    "t": "number of time points",
    "reps": "Monte Carlo replications",
    "burn_in": "discarded initial simulation steps",
    "bandwidth": "autocovariance banding: bootstrap, none or an integer",
    "n_boot": "resamples for bootstrap bandwidth selection",
    "cap": "largest diagonal estimated (auto: floor(N/4))",
    "alpha": "fixed alpha for estimate (auto: tune over --alphas)",
    "alphas": "comma-separated alpha grid",
    "lambdas": "comma-separated descending lambda grid (auto: log-spaced path)",
    "n_lambda": "points on the automatic lambda path",
    "lambda_ratio": "smallest/largest lambda on the automatic path",
    "train_frac": "training share in time-series cross-validation",
    "select": "estimate: cv (one tuned fit) or path (whole lambda path)",
    "methods": "comma-separated method list",
    "window_frac": "rolling window length as a share of T",
    "loss": "loss for the win counts and DM test in forecast-eval summaries",
}


def _grid(cfg: RunConfig) -> CvGrid:
    return CvGrid(lambdas=cfg.lambdas, alphas=list(cfg.alphas), train_frac=cfg.train_frac,
                  n_lambda=cfg.n_lambda, ratio=cfg.lambda_ratio)


def _header(command: str, cfg: RunConfig) -> dict:
    return {"schema_version": SCHEMA_VERSION, "command": command, "config": cfg.as_dict()}


def _size(cfg: RunConfig) -> int:
    return cfg.n if cfg.design == "A" else cfg.m


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(cfg: RunConfig, out: Path) -> list:
    """Write ``panel.csv`` and ``truth.json``."""
    model = make_model(cfg.design, _size(cfg), k0=cfg.k0, seed=cfg.seed)
    panel = simulate_var(model, cfg.t, burn_in=cfg.burn_in, rng=RngSpec(cfg.seed, 1))
    rf = reduced_form(model)
    write_panel_csv(panel, out / "panel.csv")
    truth = _header("simulate", cfg)
    truth.update({
        "n_units": model.n, "a": model.a, "b": model.b, "sigma_eps": model.sigma_eps,
        "bandwidth_k": model.bandwidth_k, "bandwidth_l0": model.bandwidth_l0,
        "c": rf.c, "spectral_norm_c": spectral_norm(rf.c), "unit_labels": panel.unit_labels,
    })
    write_json(truth, out / "truth.json")
    return [out / "panel.csv", out / "truth.json"]


def _group_summary(fit: solver.SplashFit) -> list:
    return [{"group": g.name, "matrix": g.matrix, "k": g.k, "size": g.size,
             "norm": float(np.linalg.norm(fit.c_hat[g.members])),
             "nonzero": bool(np.any(fit.c_hat[g.members]))}
            for g in fit.layout.groups]


def _fit_json(fit: solver.SplashFit) -> dict:
    return {"lambda": fit.lam, "alpha": fit.alpha, "c_hat": fit.c_hat, "a_hat": fit.a_hat,
            "b_hat": fit.b_hat, "objective": fit.objective, "n_iter": fit.n_iter,
            "kkt_residual": fit.kkt_residual, "nonzero_groups": fit.nonzero_groups(),
            "groups": _group_summary(fit)}


def cmd_estimate(cfg: RunConfig, panel_file: Path, out: Path) -> list:
    """Fit SPLASH to a panel (demeaned per unit) and write ``fit.json``."""
    panel = read_panel_csv(panel_file, interpolate=cfg.interpolate)
    means = panel.values.mean(axis=1)
    y = np.ascontiguousarray(panel.values - means[:, None])
    est = SplashEstimator(cfg.alpha, cfg.bandwidth_value, cap=cfg.cap, rng=RngSpec(cfg.seed, 2),
                          n_boot=cfg.n_boot)
    grid = _grid(cfg)
    result = _header("estimate", cfg)
    result.update({"unit_labels": panel.unit_labels, "n_units": panel.n_units, "n_time": panel.n_time,
                   "means": means})
    if cfg.select == "cv":
        choice = ts_cross_validate(y, grid, est)
        fitted = est.fit(y, choice, grid)
        fit = fitted.info["fit"]
        result.update({"bandwidth": fitted.info["bandwidth"], "cv_score": choice.score,
                       "lambda_index": choice.lam_index, "fit": _fit_json(fit),
                       "transition": fitted.transition})
    else:
        sys_, h = est.system(y)
        path = []
        for alpha in ([cfg.alpha] if cfg.alpha is not None else cfg.alphas):
            lams = grid.path(solver.lambda_max(sys_, alpha))
            path.extend(_fit_json(f) for f in solver.fit_path(sys_, alpha, lams))
        result.update({"bandwidth": h, "path": path})
    write_json(result, out / "fit.json")
    return [out / "fit.json"]


def cmd_replicate(cfg: RunConfig, out: Path) -> list:
    """Monte Carlo table as ``replicate.json`` and ``replicate.csv``."""
    methods = cfg.methods or list(METHODS)
    bad = [x for x in methods if x not in METHODS]
    if bad:
        raise ConfigError("methods", f"not available for replicate: {bad}")
    res = replicate(cfg.design, _size(cfg), cfg.t, cfg.reps, seed=cfg.seed, methods=methods, k0=cfg.k0,
                    bandwidth=cfg.bandwidth_value, grid=_grid(cfg), n_boot=cfg.n_boot)
    rows = res.rows()
    header = ["N", "T", "metric", "method", "value"]
    write_table_csv(header, rows, out / "replicate.csv")
    result = _header("replicate", cfg)
    result.update({
        "n_units": res.n, "t": res.t, "reps": res.reps,
        "excluded": {METHOD_LABELS[k]: v for k, v in res.excluded.items()},
        "table": [dict(zip(header, r)) for r in rows],
        "diagonal_profile_a": {METHOD_LABELS[k]: diagonal_profile(s.mean_abs_a)
                               for k, s in res.summaries.items() if s.mean_abs_a is not None},
    })
    write_json(result, out / "replicate.json")
    return [out / "replicate.csv", out / "replicate.json"]


def _forecast_estimator(name: str, cfg: RunConfig, n: int):
    rng = RngSpec(cfg.seed, 2)
    bw = cfg.bandwidth_value
    if name in ("splash0", "splash_a", "splash1"):
        alpha = {"splash0": 0.0, "splash_a": None, "splash1": 1.0}[name]
        return SplashEstimator(alpha, bw, cap=cfg.cap, rng=rng, n_boot=cfg.n_boot, label=METHOD_LABELS[name])
    if name in ("gmwy", "gmwy_k0"):
        return GmwyEstimator(cfg.cap if cfg.cap is not None else n // 4, label="GMWY")
    if name == "const":
        return ConstEstimator()
    if name == "pvar":
        return PvarEstimator()
    raise ConfigError("methods", f"{name!r} is not available for forecast-eval")


def cmd_forecast_eval(cfg: RunConfig, panel_file: Path, out: Path) -> list:
    """Rolling-window comparison against PVAR: ``forecast_eval.json`` / ``.csv``."""
    panel = read_panel_csv(panel_file, interpolate=cfg.interpolate)
    n, t = panel.values.shape
    w = window_length(t, cfg.window_frac)
    if w >= t:
        raise ConfigError("window_frac", f"window of {w} columns leaves no forecasts for T={t}")
    if w < 3:
        raise ConfigError("window_frac", f"window of {w} columns is shorter than 3")
    grid = _grid(cfg)
    methods = [x for x in (cfg.methods or ["splash0", "splash_a", "splash1", "gmwy", "const"]) if x != "pvar"]
    bench = rolling_windows(panel, cfg.window_frac, PvarEstimator(), grid, label="PVAR")
    records = [rolling_windows(panel, cfg.window_frac, _forecast_estimator(x, cfg, n), grid)
               for x in methods]
    header = ["method", "loss", "wins", "significant_wins", "ratio", "n_units"]
    rows = []
    for loss in ("squared", "absolute"):
        for r in score_table(records, bench, loss=loss):
            rows.append([r.label, loss, r.wins, r.significant_wins, r.ratio, r.n_units])
    write_table_csv(header, rows, out / "forecast_eval.csv")
    result = _header("forecast-eval", cfg)
    result.update({
        "n_units": n, "n_time": t, "window_length": w, "n_forecasts": t - w,
        "table": [dict(zip(header, r)) for r in rows],
        "headline_loss": cfg.loss,
        "failed_windows": {r.label: r.failed for r in [bench] + records},
        "errors": {r.label: r.errors for r in [bench] + records},
    })
    write_json(result, out / "forecast_eval.json")
    return [out / "forecast_eval.csv", out / "forecast_eval.json"]


# ---------------------------------------------------------------------------
# argument handling


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="splash", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "simulate": ("simulate a design and write panel.csv + truth.json", False),
        "estimate": ("fit SPLASH to a panel CSV and write fit.json", True),
        "replicate": ("Monte Carlo RMSFE / EE table", False),
        "forecast-eval": ("rolling-window forecast comparison against PVAR", True),
    }
    for name, (help_text, needs_panel) in specs.items():
        p = sub.add_parser(name, help=help_text)
        if needs_panel:
            p.add_argument("panel", type=Path, help="panel CSV (header of unit labels, one row per time point)")
        p.add_argument("--config", type=Path, help="key = value settings file")
        p.add_argument("--seed", type=str, help="random seed")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--interpolate", action="store_true", default=None,
                       help="fill missing panel cells by linear interpolation in time")
        p.add_argument("-v", "--verbose", action="store_true")
        for fname in FIELDS:
            if fname in ("seed", "interpolate"):
                continue
            p.add_argument("--" + fname.replace("_", "-"), dest=fname, type=str, help=HELP.get(fname))
    return parser


def resolve_config(args) -> RunConfig:
    cfg = cfgmod.load(args.config) if args.config else RunConfig()
    updates = {k: getattr(args, k) for k in FIELDS if getattr(args, k, None) is not None}
    return cfgmod.merge(cfg, cfgmod.coerce(updates))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        parser.error(str(exc))
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    try:
        if args.command == "simulate":
            files = cmd_simulate(cfg, out)
        elif args.command == "estimate":
            files = cmd_estimate(cfg, args.panel, out)
        elif args.command == "replicate":
            files = cmd_replicate(cfg, out)
        else:
            files = cmd_forecast_eval(cfg, args.panel, out)
    except ConfigError as exc:
        parser.error(str(exc))
    except (PanelFormatError, FileNotFoundError) as exc:
        print(f"splash {args.command}: error: {exc}", file=sys.stderr)
        return 1
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
