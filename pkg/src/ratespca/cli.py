"""Command-line interface.

Subcommands: simulate, contaminate, cov, pca, factors, price, experiment,
ingest.  Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical
failure.  Errors print to stderr with a machine-parsable prefix
``error: <class>: <message>``.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import dataio, lrcov, pca
from .curves import CurveError, CurvePanel, MaturityGrid, STANDARD_GRID_MONTHS, first_difference
from .dataio import DataError
from .experiments import (
    ExperimentConfig,
    ExperimentError,
    PricingSpec,
    emit_report,
    run_experiment,
)
from .models import (
    Cir3Params,
    G2PP_SET_1,
    G2PP_SET_2,
    OptionSpec,
    default_hjm_spec,
    g2pp_option_price,
    simulate_cir3,
    simulate_g2pp,
    simulate_gaussian_hjm,
)
from .noise import NoiseError, NoiseSpec, apply_noise

USAGE_EXIT, DATA_EXIT, NUMERIC_EXIT = 1, 2, 3


def _fail(kind: str, message: str, code: int) -> int:
    print(f"error: {kind}: {message}", file=sys.stderr)
    return code


def _grid_from_arg(arg: str | None) -> MaturityGrid:
    if not arg:
        return MaturityGrid.from_months(STANDARD_GRID_MONTHS)
    return MaturityGrid(tuple(float(tok) for tok in arg.split(",")))


def _cmd_simulate(args) -> int:
    grid = _grid_from_arg(args.maturities)
    seed = args.seed
    if args.model == "hjm":
        panel = simulate_gaussian_hjm(default_hjm_spec(), args.n_obs, args.dt, grid, seed)
        dataio.write_panel_csv(panel, args.out)
    elif args.model == "cir3":
        paths = simulate_cir3(Cir3Params(kappa=(0.8, 0.2, 1.2), theta=(0.02, 0.03, 0.01),
                                         sigma=(0.10, 0.05, 0.12)) if args.baseline
                              else _experiment_cir(), args.n_obs, args.dt, grid, seed)
        dataio.write_panel_csv(paths.yields, args.out)
    else:
        params = G2PP_SET_1 if args.param_set == 1 else G2PP_SET_2
        paths = simulate_g2pp(params, args.n_obs, args.dt, grid, seed)
        dataio.write_panel_csv(paths.yields, args.out)
    print(f"wrote {args.out}")
    return 0


def _experiment_cir() -> Cir3Params:
    from .experiments import FACTOR_STUDY_CIR

    return FACTOR_STUDY_CIR


def _cmd_contaminate(args) -> int:
    panel = dataio.read_panel_csv(args.panel)
    spec = NoiseSpec(kind=args.kind, variance=args.variance, omit_count=args.omit_count)
    kwargs = {}
    if spec.kind in ("iid_gaussian", "mme_on_forward"):
        kwargs["forwards"] = panel
    elif spec.kind == "spline_ies":
        kwargs["prices"] = panel
    else:
        kwargs["yields"] = panel
    x_panel, z_panel = apply_noise(spec, args.seed, **kwargs)
    dataio.write_panel_csv(x_panel, args.out_prefix + "_X.csv")
    dataio.write_panel_csv(z_panel, args.out_prefix + "_Z.csv")
    print(f"wrote {args.out_prefix}_X.csv and {args.out_prefix}_Z.csv")
    return 0


def _cmd_cov(args) -> int:
    panel = dataio.read_panel_csv(args.panel)
    estimate = lrcov.estimate(panel, args.estimator, p=args.p)
    dataio.write_covariance_csv(estimate, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_pca(args) -> int:
    estimate = dataio.read_covariance_csv(args.cov)
    decomp = pca.eigen_decompose(estimate)
    dataio.write_decomposition_csv(decomp, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_factors(args) -> int:
    panel = dataio.read_panel_csv(args.panel)
    estimators = tuple(args.estimator.split(","))
    report = dataio.empirical_factor_analysis(panel, estimators, threshold=args.threshold)
    print("series,estimator,count,cum_r2_at_count")
    for (sname, ename), cell in sorted(report.factor_cells.items()):
        if cell.counts.size == 0:
            print(f"{sname},{ename},degenerate,nan")
            continue
        k = int(cell.counts[0])
        print(f"{sname},{ename},{k},{cell.mean_cum_r2[k - 1]:.6f}")
    return 0


def _cmd_price(args) -> int:
    params = G2PP_SET_1 if args.param_set == 1 else G2PP_SET_2
    spec = PricingSpec(param_set=args.param_set, bond_maturity=args.bond_maturity)
    if args.expiry is not None and args.strike is not None:
        cells = [(args.expiry, args.strike)]
    else:
        cells = list(spec.cells)
    print("expiry,strike,price")
    for expiry, strike in cells:
        price = g2pp_option_price(params, OptionSpec(expiry=expiry,
                                                     maturity=args.bond_maturity,
                                                     strike=strike))
        print(f"{expiry},{strike},{price:.6f}")
    return 0


def config_from_dict(blob: dict) -> ExperimentConfig:
    """Build an ExperimentConfig from a parsed JSON config file."""
    blob = dict(blob)
    kwargs = {}
    for key in ("kind", "dgp", "n_obs", "reps", "dt", "master_seed", "threshold",
                "rate_units", "workers", "pricing_threshold", "fixed_m", "mueller_p"):
        if key in blob:
            kwargs[key] = blob.pop(key)
    if "series" in blob:
        kwargs["series"] = tuple(blob.pop("series"))
    if "estimators" in blob:
        kwargs["estimators"] = tuple(blob.pop("estimators"))
    if "grid_months" in blob:
        kwargs["grid_months"] = tuple(blob.pop("grid_months"))
    if "noise" in blob:
        kwargs["noise_spec"] = NoiseSpec(**blob.pop("noise"))
    if "cir" in blob:
        cir = blob.pop("cir")
        kwargs["cir"] = Cir3Params(
            kappa=tuple(cir["kappa"]), theta=tuple(cir["theta"]),
            sigma=tuple(cir["sigma"]), y0=tuple(cir["y0"]) if cir.get("y0") else None)
    if "pricing" in blob and blob["pricing"] is not None:
        pr = blob.pop("pricing")
        kwargs["pricing"] = PricingSpec(
            param_set=pr.get("param_set", 1),
            bond_maturity=pr.get("bond_maturity", 10.0),
            cells=tuple((float(e), float(k)) for e, k in pr["cells"])
            if "cells" in pr else PricingSpec().cells)
    elif "pricing" in blob:
        blob.pop("pricing")
    if blob:
        raise DataError(f"unknown config fields {sorted(blob)}")
    return ExperimentConfig(**kwargs)


def _cmd_experiment(args) -> int:
    if args.action != "run":
        return _fail("usage", f"unknown experiment action {args.action!r}", USAGE_EXIT)
    with open(args.config) as fh:
        blob = json.load(fh)
    config = config_from_dict(blob)
    if args.workers is not None:
        from dataclasses import replace

        config = replace(config, workers=args.workers)
    report = run_experiment(config)
    written = emit_report(report, args.out_dir)
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_ingest(args) -> int:
    manifest = dataio.DatasetManifest.from_json(args.manifest)
    panel = dataio.ingest_panel(manifest)
    dataio.write_panel_csv(panel, args.out)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ratespca",
        description="Long-run covariance PCA toolkit for noisy forward-rate curves")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("simulate", help="simulate a model panel to CSV")
    p.add_argument("--model", choices=("hjm", "cir3", "g2pp"), required=True)
    p.add_argument("--n-obs", type=int, default=500)
    p.add_argument("--dt", type=float, default=1 / 252)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--param-set", type=int, choices=(1, 2), default=1)
    p.add_argument("--baseline", action="store_true",
                   help="use the baseline CIR parameters instead of the study set")
    p.add_argument("--maturities", help="comma-separated maturities in years")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("contaminate", help="apply a contamination pipeline to a panel")
    p.add_argument("--panel", required=True)
    p.add_argument("--kind", choices=("none", "iid_gaussian", "mme_on_forward",
                                      "mme_on_yield", "spline_ies"), required=True)
    p.add_argument("--variance", type=float, default=0.0035)
    p.add_argument("--omit-count", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=_cmd_contaminate)

    p = sub.add_parser("cov", help="estimate a covariance matrix from a panel")
    p.add_argument("--panel", required=True)
    p.add_argument("--estimator", choices=("static", "andrews_qs", "vk_bartlett",
                                           "mueller_ua"), required=True)
    p.add_argument("--p", type=int, default=4)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_cov)

    p = sub.add_parser("pca", help="eigendecompose a covariance CSV")
    p.add_argument("--cov", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_pca)

    p = sub.add_parser("factors", help="factor counts for a panel, all four series")
    p.add_argument("--panel", required=True)
    p.add_argument("--estimator", default="static,andrews_qs,vk_bartlett,mueller_ua")
    p.add_argument("--threshold", type=float, default=0.99)
    p.set_defaults(func=_cmd_factors)

    p = sub.add_parser("price", help="analytic bond-option prices")
    p.add_argument("--param-set", type=int, choices=(1, 2), default=1)
    p.add_argument("--bond-maturity", type=float, default=10.0)
    p.add_argument("--expiry", type=float)
    p.add_argument("--strike", type=float)
    p.set_defaults(func=_cmd_price)

    p = sub.add_parser("experiment", help="run a Monte Carlo experiment from a config")
    p.add_argument("action", choices=("run",))
    p.add_argument("config")
    p.add_argument("--out-dir", default="run_output")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("ingest", help="normalize an external dataset via a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ingest)
    return parser


def cli_dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage problems; remap to the documented code
        return 0 if exc.code == 0 else USAGE_EXIT
    if getattr(args, "func", None) is None:
        parser.print_usage(sys.stderr)
        return _fail("usage", "missing subcommand", USAGE_EXIT)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        return _fail("data", str(exc), DATA_EXIT)
    except (DataError, CurveError, NoiseError, ExperimentError,
            lrcov.EstimatorError, json.JSONDecodeError) as exc:
        return _fail("data", str(exc), DATA_EXIT)
    except (np.linalg.LinAlgError, FloatingPointError, pca.PcaError) as exc:
        return _fail("numeric", str(exc), NUMERIC_EXIT)


def main() -> None:
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()
