"""Tabular data loading, preprocessing, splitting, pollution and synthetic tasks."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from .errors import DataError

log = logging.getLogger(__name__)

SPLIT_KEYS = ("train", "val", "test", "reserve", "unused")


@dataclass
class Dataset:
    """Samples with true labels (0 normal, 1 anomalous) and split indices.

    ``features`` is the preprocessed [0, 1] matrix; ``frame`` holds raw
    columns until :func:`preprocess` runs. ``split`` maps split names to
    row-index arrays: ``reserve`` keeps anomalies withheld from train/val in
    clean mode, ``unused`` keeps rows displaced by pollution.
    """

    labels: np.ndarray
    features: Optional[np.ndarray] = None
    frame: Optional[pd.DataFrame] = None
    split: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    name: str = "dataset"

    def __len__(self) -> int:
        return len(self.labels)

    def rows(self, part: str) -> np.ndarray:
        if self.features is None:
            raise DataError("dataset has not been preprocessed")
        return self.features[self.split[part]]

    def part_labels(self, part: str) -> np.ndarray:
        return self.labels[self.split[part]]

    @property
    def n_features(self) -> int:
        return 0 if self.features is None else self.features.shape[1]


@dataclass(frozen=True)
class PollutionSpec:
    fraction: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.fraction < 0.5:
            raise ValueError(f"pollution fraction must lie in [0, 0.5), got {self.fraction}")


# ---------------------------------------------------------------------------
# CSV ingestion

def load_schema(path) -> dict:
    with Path(path).open() as fh:
        schema = json.load(fh)
    if "label" not in schema or "normal" not in schema:
        raise DataError("schema needs 'label' and 'normal' entries")
    return schema


def load_csv(path, schema: dict, name: Optional[str] = None) -> Dataset:
    """Read a CSV with a header row into a raw (unscaled) dataset.

    ``schema`` keys: ``label`` (column name), ``normal`` (label values treated
    as normal), optional ``categorical``, ``numeric`` and ``ignore`` column
    lists. Unlisted columns are numeric. Rows whose numeric columns do not
    parse are dropped and counted in ``meta["dropped_rows"]``.
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise DataError(f"{path}: no samples") from None
    label_col = schema["label"]
    if label_col not in frame.columns:
        raise DataError(f"{path}: label column {label_col!r} missing")
    if frame.empty:
        raise DataError(f"{path}: no samples")

    ignore = set(schema.get("ignore", []))
    categorical = [c for c in schema.get("categorical", []) if c in frame.columns]
    numeric = schema.get("numeric")
    if numeric is None:
        numeric = [c for c in frame.columns if c != label_col and c not in ignore and c not in categorical]
    missing = [c for c in (*numeric, *categorical) if c not in frame.columns]
    if missing:
        raise DataError(f"{path}: columns {missing} missing")

    numbers = frame[numeric].apply(pd.to_numeric, errors="coerce")
    bad = ~np.isfinite(numbers.to_numpy(dtype=np.float64)).all(axis=1) if numeric else np.zeros(len(frame), bool)
    dropped = int(bad.sum())
    if dropped:
        log.warning("%s: dropped %d rows with non-numeric values", path, dropped)
    keep = ~bad
    raw = pd.concat([numbers[keep].reset_index(drop=True),
                     frame.loc[keep, categorical].reset_index(drop=True)], axis=1)
    if raw.empty:
        raise DataError(f"{path}: no samples")

    normal_values = {str(v).strip() for v in schema["normal"]}
    label_values = frame.loc[keep, label_col].astype(str).str.strip().to_numpy()
    labels = np.array([0 if v in normal_values else 1 for v in label_values], dtype=np.int64)
    meta = {"numeric": list(numeric), "categorical": list(categorical),
            "dropped_rows": dropped, "source": str(path)}
    return Dataset(labels=labels, frame=raw, meta=meta, name=name or path.stem)


# ---------------------------------------------------------------------------
# preprocessing

def preprocess(dataset: Dataset) -> Dataset:
    """Min-max scale numeric columns and one-hot encode categorical ones.

    Statistics come from the train split when one exists (all rows otherwise);
    other rows are clipped into [0, 1]. Unseen categories encode as all zeros.
    """
    if dataset.frame is None:
        raise DataError("dataset has no raw columns to preprocess")
    frame = dataset.frame
    fit_rows = dataset.split.get("train", np.arange(len(frame)))
    if len(fit_rows) == 0:
        raise DataError("cannot fit preprocessing on an empty train split")
    numeric = dataset.meta.get("numeric", [])
    categorical = dataset.meta.get("categorical", [])

    blocks, columns, scaling, categories, constant = [], [], {}, {}, []
    for col in numeric:
        values = frame[col].to_numpy(dtype=np.float64)
        lo, hi = float(values[fit_rows].min()), float(values[fit_rows].max())
        scaling[col] = [lo, hi]
        if hi > lo:
            blocks.append(np.clip((values - lo) / (hi - lo), 0.0, 1.0)[:, None])
        else:
            constant.append(col)
            blocks.append(np.zeros((len(values), 1)))
        columns.append(col)
    for col in categorical:
        values = frame[col].astype(str).to_numpy()
        cats = sorted(set(values[fit_rows]))
        categories[col] = cats
        blocks.append((values[:, None] == np.array(cats)[None, :]).astype(np.float64))
        columns.extend(f"{col}={c}" for c in cats)
    if not blocks:
        raise DataError("no feature columns")
    features = np.hstack(blocks)

    meta = dict(dataset.meta)
    meta.update(scaling=scaling, categories=categories, constant_columns=constant, columns=columns)
    return replace(dataset, features=features, frame=None, meta=meta)


def transform(meta: dict, frame: pd.DataFrame) -> np.ndarray:
    """Apply stored preprocessing metadata to new raw rows."""
    blocks = []
    for col in meta.get("numeric", []):
        lo, hi = meta["scaling"][col]
        values = pd.to_numeric(frame[col], errors="coerce").to_numpy(dtype=np.float64)
        blocks.append((np.clip((values - lo) / (hi - lo), 0.0, 1.0) if hi > lo else np.zeros_like(values))[:, None])
    for col in meta.get("categorical", []):
        values = frame[col].astype(str).to_numpy()
        blocks.append((values[:, None] == np.array(meta["categories"][col])[None, :]).astype(np.float64))
    return np.hstack(blocks)


# ---------------------------------------------------------------------------
# splitting and pollution

def _stratified_counts(labels: np.ndarray, total: int) -> dict:
    classes, counts = np.unique(labels, return_counts=True)
    exact = counts * total / len(labels)
    base = np.floor(exact).astype(int)
    order = np.argsort(-(exact - base), kind="stable")
    for i in order[: total - base.sum()]:
        base[i] += 1
    return dict(zip(classes.tolist(), base.tolist()))


def split(
    dataset: Dataset,
    seed: int = 0,
    test_fraction: float = 0.2,
    val_fraction: float = 0.05,
    clean: bool = True,
) -> Dataset:
    """Stratified test split, then a validation slice taken from the remainder.

    Fractions are of the whole dataset. In clean mode anomalies outside the
    test split are moved to ``reserve``.
    """
    rng = np.random.default_rng(seed)
    labels = dataset.labels
    n = len(labels)
    n_test = int(round(test_fraction * n))
    test = []
    for cls, k in _stratified_counts(labels, n_test).items():
        idx = np.flatnonzero(labels == cls)
        test.append(rng.permutation(idx)[:k])
    test = np.sort(np.concatenate(test)) if test else np.array([], dtype=int)
    rest = rng.permutation(np.setdiff1d(np.arange(n), test))
    n_val = min(int(round(val_fraction * n)), len(rest))
    val, train = np.sort(rest[:n_val]), np.sort(rest[n_val:])
    reserve = np.array([], dtype=int)
    if clean:
        reserve = np.sort(np.concatenate([train[labels[train] == 1], val[labels[val] == 1]]))
        train, val = train[labels[train] == 0], val[labels[val] == 0]
    for cls in (0, 1):
        if np.sum(labels[test] == cls) < 10:
            log.warning("test split holds fewer than 10 samples of class %d", cls)
    parts = {"train": train, "val": val, "test": test, "reserve": reserve,
             "unused": np.array([], dtype=int)}
    return replace(dataset, split=parts)


def pollute(dataset: Dataset, spec: PollutionSpec) -> Dataset:
    """Swap ceil(fraction * |train|) train rows for anomalies from ``reserve``.

    True labels are kept, so ``labels[split["train"]]`` audits the
    contamination. The test split is never touched.
    """
    if spec.fraction == 0:
        return dataset
    train = dataset.split["train"]
    k = math.ceil(spec.fraction * len(train))
    reserve = dataset.split.get("reserve", np.array([], dtype=int))
    pool = reserve[dataset.labels[reserve] == 1]
    if len(pool) < k:
        raise DataError(f"pollution needs {k} anomalies outside the test split, only {len(pool)} available")
    rng = np.random.default_rng(spec.seed)
    injected = np.sort(rng.choice(pool, size=k, replace=False))
    displaced = np.sort(rng.choice(train, size=k, replace=False))
    parts = dict(dataset.split)
    parts["train"] = np.sort(np.concatenate([np.setdiff1d(train, displaced), injected]))
    parts["reserve"] = np.setdiff1d(reserve, injected)
    parts["unused"] = np.sort(np.concatenate([parts.get("unused", np.array([], dtype=int)), displaced]))
    meta = dict(dataset.meta, pollution=spec.fraction, polluted_indices=injected.tolist())
    return replace(dataset, split=parts, meta=meta)


def contamination(dataset: Dataset) -> float:
    return float(np.mean(dataset.part_labels("train")))


# ---------------------------------------------------------------------------
# synthetic tasks

BLOB_CENTERS = np.array([[0.3, 0.3], [0.7, 0.35], [0.5, 0.7]])
BLOB_STD = 0.04
BLOB_CORE = 0.12
NOISE_DIMS = 8


def _blobs_normal(n, rng):
    which = rng.integers(0, len(BLOB_CENTERS), size=n)
    pts = BLOB_CENTERS[which] + BLOB_STD * rng.standard_normal((n, 2))
    return np.clip(pts, 0.2, 0.8)


def _blobs_anomalous(n, rng):
    out = np.empty((0, 2))
    while len(out) < n:
        cand = rng.random((2 * n, 2))
        d = np.linalg.norm(cand[:, None, :] - BLOB_CENTERS[None], axis=2).min(axis=1)
        out = np.vstack([out, cand[d > BLOB_CORE]])
    return out[:n]


def _ring_normal(n, rng):
    angle = rng.uniform(0, 2 * np.pi, n)
    radius = rng.uniform(0.25, 0.35, n)
    return 0.5 + radius[:, None] * np.c_[np.cos(angle), np.sin(angle)]


def _ring_anomalous(n, rng):
    n_center = n // 2
    angle = rng.uniform(0, 2 * np.pi, n_center)
    radius = 0.1 * np.sqrt(rng.random(n_center))
    center = 0.5 + radius[:, None] * np.c_[np.cos(angle), np.sin(angle)]
    corners = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    pick = corners[rng.integers(0, 4, n - n_center)]
    offset = rng.uniform(0.0, 0.12, (n - n_center, 2))
    far = np.abs(pick - offset)
    return np.vstack([center, far])


_GENERATORS = {
    "blobs2d": (_blobs_normal, _blobs_anomalous),
    "ring2d": (_ring_normal, _ring_anomalous),
    "blobs10d": (_blobs_normal, _blobs_anomalous),
}


def synth_dataset(kind: str, n_normal: int, n_anom: int, seed: int = 0) -> Dataset:
    """Small labelled tasks with all features in [0, 1].

    blobs2d: three tight Gaussian clusters, anomalies uniform outside the
    cluster cores. ring2d: an annulus, anomalies at the centre and corners.
    blobs10d: blobs2d plus eight noise columns shared by both classes.
    Rows are ordered normals first, then anomalies.
    """
    if kind not in _GENERATORS:
        raise ValueError(f"unknown synthetic dataset {kind!r}; choose from {sorted(_GENERATORS)}")
    if n_normal < 1 or n_anom < 1:
        raise ValueError("need at least one normal and one anomalous sample")
    rng = np.random.default_rng(seed)
    make_normal, make_anom = _GENERATORS[kind]
    x = np.vstack([make_normal(n_normal, rng), make_anom(n_anom, rng)])
    if kind == "blobs10d":
        noise = np.clip(0.5 + 0.15 * rng.standard_normal((len(x), NOISE_DIMS)), 0.0, 1.0)
        x = np.hstack([x, noise])
    x = np.clip(x, 0.0, 1.0)
    labels = np.r_[np.zeros(n_normal, dtype=np.int64), np.ones(n_anom, dtype=np.int64)]
    meta = {"columns": [f"x{i}" for i in range(x.shape[1])], "synthetic": kind}
    return Dataset(labels=labels, features=x, meta=meta, name=kind)


def synth_task(
    kind: str = "blobs2d",
    n_train: int = 2000,
    n_val: int = 100,
    n_test_normal: int = 200,
    n_test_anom: int = 200,
    n_reserve_anom: int = 100,
    seed: int = 0,
) -> Dataset:
    """Synthetic dataset with fixed split sizes (clean train, reserve anomalies for pollution)."""
    n_normal = n_train + n_val + n_test_normal
    n_anom = n_test_anom + n_reserve_anom
    ds = synth_dataset(kind, n_normal, n_anom, seed)
    rng = np.random.default_rng(seed + 1)
    normals = rng.permutation(n_normal)
    anoms = n_normal + rng.permutation(n_anom)
    parts = {
        "train": np.sort(normals[:n_train]),
        "val": np.sort(normals[n_train : n_train + n_val]),
        "test": np.sort(np.r_[normals[n_train + n_val :], anoms[:n_test_anom]]),
        "reserve": np.sort(anoms[n_test_anom:]),
        "unused": np.array([], dtype=int),
    }
    return replace(ds, split=parts)


def parse_data_uri(uri: str) -> Optional[str]:
    """Return the synthetic kind for ``synth:<kind>`` URIs, else None."""
    if uri.startswith("synth:"):
        return uri.split(":", 1)[1]
    return None


# ---------------------------------------------------------------------------
# cache

def write_cache(dataset: Dataset, csv_path, meta_path) -> None:
    """Write preprocessed features + label + split name as CSV, metadata as JSON."""
    if dataset.features is None:
        raise DataError("dataset has not been preprocessed")
    columns = dataset.meta.get("columns") or [f"x{i}" for i in range(dataset.n_features)]
    frame = pd.DataFrame(dataset.features, columns=columns)
    frame["label"] = dataset.labels
    part = np.full(len(dataset), "", dtype=object)
    for key, idx in dataset.split.items():
        part[idx] = key
    frame["split"] = part
    frame.to_csv(csv_path, index=False, float_format="%.17g")
    meta = {k: v for k, v in dataset.meta.items()}
    meta["name"] = dataset.name
    Path(meta_path).write_text(json.dumps(meta, indent=2, sort_keys=True))


def read_cache(csv_path, meta_path) -> Dataset:
    frame = pd.read_csv(csv_path, keep_default_na=False, float_precision="round_trip")
    meta = json.loads(Path(meta_path).read_text())
    labels = frame.pop("label").to_numpy(dtype=np.int64)
    part = frame.pop("split").astype(str).to_numpy()
    parts = {k: np.flatnonzero(part == k) for k in SPLIT_KEYS}
    return Dataset(labels=labels, features=frame.to_numpy(dtype=np.float64), split=parts,
                   meta=meta, name=meta.get("name", "dataset"))
