"""Command-line pipeline: sample, fit, eval, diagnose, split.

All randomness flows from the configured seed; sweep cells and repeats
use recorded sub-seeds spawned from it, so equal configs and inputs give
byte-identical outputs. Angles in every output file are radians. No
plotting: outputs are plot-ready CSV tables plus key-value reports.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from . import evaluation
from .circular import sample_von_mises
from .config import RunConfig, parse_config
from .data import Dataset, ingest, load_dataset, split_indices, write_rows
from .errors import ConfigError, DataError, NumericalError, VmqpError
from .gibbs import run_chain
from .inference import (
    FitConfig,
    block_gibbs_fit,
    build_param_model,
    cd_gradient,
    gradient_names,
)
from .model import conditional_params, full_state_params


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([cell if isinstance(cell, str) else _fmt(cell) for cell in row])


def _write_report(path, items) -> None:
    with open(path, "w") as fh:
        for key, value in items:
            fh.write(f"{key} = {value}\n")


def read_samples_csv(path) -> np.ndarray:
    """Read a phi_samples.csv back into an (S, m) array."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(c) for c in row] for row in reader if row]
    data = np.array(rows, dtype=float)
    return data.reshape(-1, len(header))


def _assemble(cfg: RunConfig, dataset: Dataset):
    """Model pieces shared by sample and diagnose."""
    if dataset.n_test == 0:
        raise DataError("no prediction locations")
    w = cfg.param_vector()
    locations = np.vstack([dataset.test_locations, dataset.observed_locations])
    model = build_param_model(w, locations, dataset.n_test, cfg.slack)
    if w.noise_concentration is not None:
        cp = full_state_params(model.precision, w, dataset.observed_angles)
    else:
        cp = conditional_params(model.precision, dataset.observed_angles, w)
    return w, model, cp


def _diagnostics_rows(samples: np.ndarray):
    means, variances = evaluation.predictive_summary(samples)
    rows = []
    for j in range(samples.shape[1]):
        try:
            r = evaluation.circular_ress(samples[:, j])
        except ValueError:
            r = math.nan
        rows.append([j + 1, means[j], variances[j], r])
    return rows


def cmd_sample(cfg: RunConfig, dataset: Dataset, out: Path) -> None:
    w, model, cp = _assemble(cfg, dataset)
    chain = run_chain(
        cp,
        cfg.n_iter,
        cfg.burn_in,
        cfg.thin,
        cfg.slack,
        seed=cfg.seed,
        init_mean=w.mean_direction,
        init_conc=w.concentration,
    )
    m = dataset.n_test
    samples = chain.samples[:, :m]
    _write_csv(
        out / "phi_samples.csv",
        [f"phi_{j + 1}" for j in range(m)],
        samples,
    )
    _write_csv(
        out / "diagnostics.csv",
        ["location", "mean_rad", "circular_variance", "ress"],
        _diagnostics_rows(samples),
    )
    _write_report(
        out / "report.txt",
        [
            ("command", "sample"),
            ("n_retained", samples.shape[0]),
            ("lambda", _fmt(chain.lam)),
            ("seed", cfg.seed),
        ],
    )


def cmd_fit(cfg: RunConfig, dataset: Dataset, out: Path) -> None:
    if dataset.n_test == 0:
        raise DataError("no prediction locations")
    fit_cfg = FitConfig(
        n_iter=cfg.n_iter,
        burn_in=cfg.burn_in,
        thin=cfg.thin,
        phi_sweeps=cfg.phi_sweeps,
        dmh_steps=cfg.dmh_steps,
        priors=cfg.priors(),
        proposals=cfg.proposals(),
        bridge=cfg.bridge(),
        learn_mean=cfg.learn_mean,
        slack=cfg.slack,
    )
    result = block_gibbs_fit(
        dataset.observed_angles,
        dataset.observed_locations,
        dataset.test_locations,
        cfg.param_vector(),
        fit_cfg,
        np.random.default_rng(cfg.seed),
    )
    names = list(result.param_names)
    header = ["iter", "sigma2", "l"]
    cols = {"sigma2": names.index("sigma2"), "lengthscale2": names.index("lengthscale2")}
    if "gradient2" in names:
        header.append("g")
        cols["gradient2"] = names.index("gradient2")
    header += ["kappa", "nu", "accepted"]
    cols["kappa"] = names.index("kappa")
    cols["nu"] = names.index("nu")
    rows = []
    for i, values in enumerate(result.param_trace):
        row = [i, values[cols["sigma2"]], math.sqrt(values[cols["lengthscale2"]])]
        if "gradient2" in cols:
            row.append(math.sqrt(values[cols["gradient2"]]))
        row += [values[cols["kappa"]], values[cols["nu"]], result.accepted_trace[i]]
        rows.append(row)
    _write_csv(out / "w_trace.csv", header, rows)
    _write_csv(
        out / "phi_samples.csv",
        [f"phi_{j + 1}" for j in range(dataset.n_test)],
        result.phi_samples,
    )
    items = [("command", "fit"), ("n_retained", result.param_trace.shape[0]), ("seed", cfg.seed)]
    for block, rate in result.accept_rates.items():
        items.append((f"accept_rate_{block}", _fmt(rate)))
    means, variances = evaluation.predictive_summary(result.phi_samples)
    for j in range(dataset.n_test):
        items.append((f"predictive_mean_rad_{j + 1}", _fmt(means[j])))
        items.append((f"predictive_variance_{j + 1}", _fmt(variances[j])))
    _write_report(out / "summary.txt", items)


def cmd_eval(pred_paths, truth_paths, schema: str, out: Path) -> None:
    if len(pred_paths) != len(truth_paths):
        raise DataError("need one truth file per prediction file")
    rows = []
    split_means = []
    for split_idx, (pred_path, truth_path) in enumerate(
        zip(pred_paths, truth_paths), start=1
    ):
        samples = read_samples_csv(pred_path)
        truth_ds = ingest(truth_path, schema)
        truth = truth_ds.observed_angles
        if truth.shape[0] != samples.shape[1]:
            raise DataError(
                f"split {split_idx}: {samples.shape[1]} prediction columns but "
                f"{truth.shape[0]} truth rows"
            )
        scores = [
            evaluation.circular_crps(samples[:, j], truth[j])
            for j in range(samples.shape[1])
        ]
        rows.extend(
            [split_idx, j + 1, score] for j, score in enumerate(scores)
        )
        split_means.append(float(np.mean(scores)))
    _write_csv(out / "crps.csv", ["split", "location", "crps"], rows)
    _write_report(
        out / "summary.txt",
        [
            ("command", "eval"),
            ("n_splits", len(split_means)),
            ("crps_mean", _fmt(np.mean(split_means))),
            ("crps_std", _fmt(np.std(split_means))),
        ],
    )


def cmd_diagnose(cfg: RunConfig, dataset: Dataset, out: Path) -> None:
    w, model, cp = _assemble(cfg, dataset)
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.sweep_seeds + cfg.cd_repeats)
    sweep_rows = []
    for mult in cfg.lambda_multipliers:
        cell = []
        for s in range(cfg.sweep_seeds):
            chain = run_chain(
                cp,
                cfg.sweep_iters,
                cfg.sweep_burn_in,
                thin=1,
                lam_multiplier=mult,
                seed=np.random.default_rng(seeds[s]),
                init_mean=w.mean_direction,
                init_conc=w.concentration,
            )
            cell.append(float(np.nanmedian(chain.ress)))
        sweep_rows.append([mult, float(np.median(cell))])
    _write_csv(out / "lambda_sweep.csv", ["lambda_multiplier", "median_ress"], sweep_rows)

    names = gradient_names(w)
    grad_rows = []
    for r in range(cfg.cd_repeats):
        rng = np.random.default_rng(seeds[cfg.sweep_seeds + r])
        grad = cd_gradient(dataset.observed_angles, model, cfg.cd_mc_samples, rng)
        grad_rows.append(list(grad))
    _write_csv(out / "cd_gradient.csv", list(names), grad_rows)
    _write_report(
        out / "report.txt",
        [
            ("command", "diagnose"),
            ("sweep_seeds", cfg.sweep_seeds),
            ("cd_repeats", cfg.cd_repeats),
            ("seed", cfg.seed),
        ],
    )


def cmd_split(data_path, schema: str, fraction: float, seed: int, out: Path) -> None:
    ds = ingest(data_path, schema)
    train_idx, test_idx = split_indices(ds.n_observed, fraction, seed)
    write_rows(
        out / "train.csv",
        schema,
        ds.observed_locations[train_idx],
        ds.observed_angles[train_idx],
    )
    write_rows(
        out / "test.csv",
        schema,
        ds.observed_locations[test_idx],
        ds.observed_angles[test_idx],
    )
    _write_report(
        out / "report.txt",
        [
            ("command", "split"),
            ("n_train", len(train_idx)),
            ("n_test", len(test_idx)),
            ("fraction", _fmt(fraction)),
            ("seed", seed),
        ],
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vmqp", description="Circular regression with von Mises quasi-processes"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="run configuration file")
        p.add_argument("--schema", choices=("wind", "gait", "generic"), default="generic")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override config seed")

    p = sub.add_parser("sample", help="fixed-parameter posterior sampling")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--test-data", default=None)

    p = sub.add_parser("fit", help="fully Bayesian transductive fit")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--test-data", default=None)

    p = sub.add_parser("eval", help="score predictions with circular CRPS")
    p.add_argument("--pred", action="append", required=True, help="phi_samples.csv (repeatable)")
    p.add_argument("--truth", action="append", required=True, help="truth CSV (repeatable)")
    p.add_argument("--schema", choices=("wind", "gait", "generic"), default="generic")
    p.add_argument("--out", required=True)

    p = sub.add_parser("diagnose", help="lambda sweep and CD-gradient tables")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--test-data", default=None)

    p = sub.add_parser("split", help="seeded train/test split")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", choices=("wind", "gait", "generic"), default="generic")
    p.add_argument("--fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.command == "split":
        cmd_split(args.data, args.schema, args.fraction, args.seed, out)
        return 0
    if args.command == "eval":
        cmd_eval(args.pred, args.truth, args.schema, out)
        return 0
    cfg = parse_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.validate()
    dataset = load_dataset(args.data, args.schema, args.test_data)
    if args.command == "sample":
        cmd_sample(cfg, dataset, out)
    elif args.command == "fit":
        cmd_fit(cfg, dataset, out)
    elif args.command == "diagnose":
        cmd_diagnose(cfg, dataset, out)
    return 0


_ERROR_CATEGORIES = (
    (ConfigError, "configuration error", 2),
    (DataError, "data error", 3),
    (NumericalError, "numerical error", 4),
    (VmqpError, "error", 1),
)


def main(argv=None) -> int:
    try:
        return run(argv)
    except VmqpError as exc:
        for klass, label, code in _ERROR_CATEGORIES:
            if isinstance(exc, klass):
                print(f"{label}: {exc}", file=sys.stderr)
                return code
        raise AssertionError  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
