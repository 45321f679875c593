"""Command-line entry point: ``da3d <command> [flags]``.

Exit codes: 0 success, 1 configuration or usage error, 2 data error,
3 training divergence.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import data as data_mod
from .detector import score, write_scores_csv
from .errors import CheckpointError, ConfigError, DataError, TrainingDivergedError
from .evaluation import EvalReport, roc_auc, run_experiment, summarize, write_report
from .generator import generate_anomalies
from .model import load_checkpoint, save_checkpoint
from .trainer import MODES, TrainConfig, fit

log = logging.getLogger("da3d")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_DIVERGED = 0, 1, 2, 3
DEFAULT_SEED = 42


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; that code is reserved for data errors here
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# shared plumbing

def load_config(args) -> TrainConfig:
    cfg = TrainConfig.from_json(args.config) if args.config else TrainConfig()
    return TrainConfig.from_dict({**cfg.to_dict(), "seed": args.seed})


def load_dataset(uri: str, schema: Optional[str], seed: int, pollution: float = 0.0) -> data_mod.Dataset:
    """Resolve ``synth:<kind>`` or a CSV path into a split, preprocessed dataset."""
    kind = data_mod.parse_data_uri(uri)
    if kind is not None:
        try:
            ds = data_mod.synth_task(kind, seed=seed)
        except ValueError as exc:
            raise DataError(str(exc)) from None
    else:
        if not schema:
            raise DataError(f"{uri}: CSV input needs --schema")
        try:
            raw = data_mod.load_csv(uri, data_mod.load_schema(schema))
        except (OSError, ValueError) as exc:
            raise DataError(str(exc)) from None
        ds = data_mod.preprocess(data_mod.split(raw, seed=seed))
    if pollution:
        try:
            spec = data_mod.PollutionSpec(fraction=pollution, seed=seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        ds = data_mod.pollute(ds, spec)
    return ds


def _load_model(path):
    try:
        return load_checkpoint(path)
    except OSError as exc:
        raise DataError(f"cannot read checkpoint {path}: {exc}") from None
    except CheckpointError as exc:
        raise DataError(f"{path}: {exc}") from None


def _test_split(ds):
    y = ds.part_labels("test")
    if len(np.unique(y)) < 2:
        raise DataError("test split holds a single class; AUC is undefined")
    return ds.rows("test"), y


def _print_summary(reports) -> None:
    mean, std = summarize(reports)
    print(f"{reports[0].mode}: mean AUC {mean:.4f} +- {std:.4f} over {len(reports)} run(s)")


# ---------------------------------------------------------------------------
# commands

def cmd_train(args) -> int:
    cfg = load_config(args)
    ds = load_dataset(args.data, args.schema, args.seed, args.pollution)
    model, pre_log, main_log = fit(ds.rows("train"), cfg, args.mode)
    out = Path(args.out_checkpoint)
    save_checkpoint(model, out)
    log_path = Path(args.log) if args.log else out.with_suffix(".log.csv")
    pre_log.records.extend(main_log.records)
    pre_log.write_csv(log_path)
    print(f"checkpoint written to {out}; training log at {log_path}")
    return EXIT_OK


def cmd_score(args) -> int:
    model = _load_model(args.checkpoint)
    ds = load_dataset(args.data, args.schema, args.seed)
    x = ds.rows(args.part)
    if x.shape[1] != model.input_dim:
        raise DataError(f"data has {x.shape[1]} features, checkpoint expects {model.input_dim}")
    write_scores_csv(args.out, score(model, x), ds.part_labels(args.part))
    print(f"{len(x)} scores written to {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    ds = load_dataset(args.data, args.schema, args.seed, args.pollution)
    test_x, test_y = _test_split(ds)
    if args.checkpoint:
        model = _load_model(args.checkpoint)
        if test_x.shape[1] != model.input_dim:
            raise DataError(f"data has {test_x.shape[1]} features, checkpoint expects {model.input_dim}")
        reports = [EvalReport(
            run=0, seed=args.seed, mode=model.meta.get("mode", args.mode), dataset=ds.name,
            pollution=float(ds.meta.get("pollution", 0.0)), auc=roc_auc(score(model, test_x), test_y),
            runtime_s=0.0, experiment=f"{ds.name}-checkpoint",
        )]
    else:
        reports, _, _ = run_experiment(ds, load_config(args), args.mode, n_runs=args.runs)
    csv_path, json_path = write_report(reports, args.out)
    _print_summary(reports)
    print(f"report written to {csv_path} and {json_path}")
    return EXIT_OK


def cmd_ablate(args) -> int:
    cfg = load_config(args)
    ds = load_dataset(args.data, args.schema, args.seed, args.pollution)
    _test_split(ds)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for mode in MODES:
        reports, _, _ = run_experiment(ds, cfg, mode, n_runs=args.runs)
        write_report(reports, out_dir / f"{mode}.csv")
        _print_summary(reports)
    return EXIT_OK


def cmd_generate(args) -> int:
    load_config(args)
    if args.count < 1:
        raise ConfigError("--count must be at least 1")
    model = _load_model(args.checkpoint)
    if not model.meta.get("generator_trained"):
        log.warning("checkpoint generator was never trained; samples are from an untrained network")
    rows = generate_anomalies(model, args.count, np.random.default_rng(args.seed))
    header = ",".join(f"x{i}" for i in range(rows.shape[1]))
    np.savetxt(args.out, rows, delimiter=",", header=header, comments="", fmt="%.17g")
    print(f"{args.count} anomalies written to {args.out}")
    return EXIT_OK


def cmd_synth_data(args) -> int:
    load_config(args)
    ds = load_dataset(f"synth:{args.kind}", None, args.seed, args.pollution)
    out = Path(args.out)
    meta = Path(args.meta) if args.meta else out.with_suffix(".meta.json")
    data_mod.write_cache(ds, out, meta)
    print(f"{len(ds)} rows written to {out}; metadata at {meta}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="da3d", description="Unsupervised anomaly detection with a double-adversarial generator.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, func, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="random seed (default 42)")
        p.add_argument("--config", help="training config JSON (unknown keys are rejected)")
        p.set_defaults(func=func)
        return p

    def data_flags(p, pollution=True):
        p.add_argument("--data", required=True, help="CSV path or synth:<blobs2d|ring2d|blobs10d>")
        p.add_argument("--schema", help="schema JSON for CSV input")
        if pollution:
            p.add_argument("--pollution", type=float, default=0.0,
                           help="fraction of train rows replaced by anomalies (e.g. 0.01)")

    p = command("train", cmd_train, "pretrain and train a model, write a checkpoint")
    data_flags(p)
    p.add_argument("--out-checkpoint", required=True, help="checkpoint path")
    p.add_argument("--log", help="training log CSV (default <checkpoint>.log.csv)")
    p.add_argument("--mode", choices=MODES, default="da3d", help="training mode")

    p = command("score", cmd_score, "score a data split with a trained checkpoint")
    data_flags(p, pollution=False)
    p.add_argument("--checkpoint", required=True, help="trained checkpoint")
    p.add_argument("--part", choices=data_mod.SPLIT_KEYS, default="test", help="split to score")
    p.add_argument("--out", required=True, help="scores CSV (index,score,label)")

    p = command("eval", cmd_eval, "AUC report over fresh runs, or for one checkpoint")
    data_flags(p)
    p.add_argument("--checkpoint", help="evaluate this checkpoint instead of training")
    p.add_argument("--runs", type=int, default=7, help="independent runs (default 7)")
    p.add_argument("--mode", choices=MODES, default="da3d", help="training mode")
    p.add_argument("--out", default="report.csv", help="report CSV; a JSON mirror is written next to it")

    p = command("ablate", cmd_ablate, "run all three training modes and write one report each")
    data_flags(p)
    p.add_argument("--runs", type=int, default=7, help="runs per mode (default 7)")
    p.add_argument("--out-dir", default="ablation", help="directory for the per-mode reports")

    p = command("generate", cmd_generate, "sample artificial anomalies in input space")
    p.add_argument("--checkpoint", required=True, help="trained checkpoint")
    p.add_argument("--count", type=int, default=500, help="number of samples (default 500)")
    p.add_argument("--out", required=True, help="output CSV")

    p = command("synth-data", cmd_synth_data, "write a built-in synthetic task as a cached CSV")
    p.add_argument("--kind", choices=sorted(data_mod._GENERATORS), default="blobs2d", help="task")
    p.add_argument("--pollution", type=float, default=0.0, help="fraction of train rows replaced by anomalies")
    p.add_argument("--out", required=True, help="output CSV")
    p.add_argument("--meta", help="metadata JSON (default <out>.meta.json)")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"da3d: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"da3d: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"da3d: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TrainingDivergedError as exc:
        print(f"da3d: training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
