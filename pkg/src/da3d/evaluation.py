"""ROC-AUC, the experiment runner for the three training modes, and reports."""
from __future__ import annotations

import csv
import dataclasses
import json
import statistics
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.stats import rankdata

from .data import Dataset
from .detector import score
from .trainer import MODES, TrainConfig, fit


def roc_auc(scores, labels) -> float:
    """Area under the ROC curve via the Mann-Whitney rank statistic.

    Ties between an anomaly and a normal sample count one half. Label 1
    marks the anomalous (positive) class.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in length")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC is undefined unless both classes are present")
    ranks = rankdata(scores, method="average")
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass
class EvalReport:
    run: int
    seed: int
    mode: str
    dataset: str
    pollution: float
    auc: float
    runtime_s: float
    config_hash: str = ""
    experiment: str = ""

    def __post_init__(self):
        if not 0.0 <= self.auc <= 1.0:
            raise ValueError(f"auc {self.auc} outside [0, 1]")


CSV_FIELDS = ("run", "seed", "mode", "dataset", "pollution", "auc", "runtime_s")


def summarize(reports) -> tuple[float, float]:
    # exactly rounded, so identical AUCs give exactly their value and std 0
    aucs = [float(r.auc) for r in reports]
    return statistics.fmean(aucs), statistics.pstdev(aucs)


def run_experiment(
    dataset: Dataset,
    cfg: TrainConfig,
    mode: str = "da3d",
    n_runs: int = 7,
    experiment: Optional[str] = None,
) -> tuple[list, float, float]:
    """Train ``n_runs`` models with seeds ``cfg.seed + i`` and score the test split.

    Returns ``(reports, mean_auc, std_auc)``.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; choose from {MODES}")
    train_x = dataset.rows("train")
    test_x, test_y = dataset.rows("test"), dataset.part_labels("test")
    pollution = float(dataset.meta.get("pollution", 0.0))
    experiment = experiment or f"{dataset.name}-{mode}"
    reports = []
    for run in range(n_runs):
        run_cfg = dataclasses.replace(cfg, seed=cfg.seed + run)
        t0 = time.perf_counter()
        try:
            model, _, _ = fit(train_x, run_cfg, mode)
        except Exception as exc:
            raise RuntimeError(f"run {run} (seed {run_cfg.seed}) failed: {exc}") from exc
        auc = roc_auc(score(model, test_x), test_y)
        reports.append(EvalReport(
            run=run, seed=run_cfg.seed, mode=mode, dataset=dataset.name, pollution=pollution,
            auc=auc, runtime_s=time.perf_counter() - t0, config_hash=run_cfg.digest(),
            experiment=experiment,
        ))
    mean, std = summarize(reports)
    return reports, mean, std


def write_report(reports, path) -> tuple[Path, Path]:
    """CSV with one row per run plus a summary row; JSON mirror next to it."""
    if not reports:
        raise ValueError("no reports to write")
    path = Path(path)
    mean, std = summarize(reports)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_FIELDS)
        for r in reports:
            writer.writerow([r.run, r.seed, r.mode, r.dataset, repr(r.pollution), repr(r.auc), repr(r.runtime_s)])
        modes = "|".join(sorted({r.mode for r in reports}))
        total = sum(r.runtime_s for r in reports)
        # summary row: the auc cell carries "mean+-std"
        writer.writerow(["summary", "", modes, reports[0].dataset, repr(reports[0].pollution),
                         f"{mean!r}+-{std!r}", repr(total)])
    json_path = path.with_suffix(".json")
    json_path.write_text(json.dumps(
        {"runs": [dataclasses.asdict(r) for r in reports], "mean_auc": mean, "std_auc": std},
        indent=2,
    ))
    return path, json_path


def read_report(path) -> list:
    """Parse the JSON mirror written by :func:`write_report`."""
    path = Path(path)
    if path.suffix != ".json":
        path = path.with_suffix(".json")
    payload = json.loads(path.read_text())
    return [EvalReport(**r) for r in payload["runs"]]
