"""Two-phase training schedule: AAE pretraining, then the adversarial main loop."""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .aae import aae_pretrain_step, encode, standardize_encoder
from .detector import TrainingTriple, activations_of_inputs, detector_step
from .errors import ConfigError, NonFiniteError, TrainingDivergedError
from .generator import (
    SIMPLE_POOL_SIZE,
    critic_step,
    generate_codes,
    generator_step,
    simple_generate,
    trivial_anomalies,
)
from .model import PRESETS, Da3dModel, build_model, load_checkpoint, save_checkpoint  # noqa: F401

MODES = ("da3d", "trivial_only", "simple_gen")
STANDARDIZE_ROWS = 1024

StepHook = Callable[[str, Da3dModel], None]


@dataclass
class TrainConfig:
    seed: int = 42
    batch_size: int = 256
    epochs_main: int = 500
    epochs_pretrain: int = 50
    lr: float = 1e-4
    clip: float = 0.01
    critic_steps_per_batch: int = 5
    preset: str = "synth"
    critic_prior_std: float = math.sqrt(2.0)
    dropout: float = 0.1

    def __post_init__(self):
        for name in ("batch_size", "critic_steps_per_batch"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        for name in ("epochs_main", "epochs_pretrain", "seed"):
            if int(getattr(self, name)) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if not self.lr > 0:
            raise ConfigError("lr must be positive")
        if not self.clip > 0:
            raise ConfigError("clip must be positive")
        if not self.critic_prior_std > 0:
            raise ConfigError("critic_prior_std must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must lie in [0, 1)")
        if self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}; choose from {sorted(PRESETS)}")

    @classmethod
    def from_dict(cls, values: dict) -> "TrainConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        try:
            return cls(**values)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, path) -> "TrainConfig":
        try:
            values = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(values, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(values)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


LOSS_FIELDS = ("recon", "disc", "enc_adv", "critic", "gen", "detector")


@dataclass
class TrainLog:
    seed: int
    records: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def losses(self, key: str) -> np.ndarray:
        return np.array([r[key] for r in self.records], dtype=float)

    def write_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["phase", "epoch", *LOSS_FIELDS, "seconds"])
            writer.writeheader()
            for r in self.records:
                writer.writerow(r)
        return path


def _record(phase: str, epoch: int, sums: dict, count: int, seconds: float) -> dict:
    rec = {"phase": phase, "epoch": epoch}
    for key in LOSS_FIELDS:
        rec[key] = sums[key] / count if key in sums and count else float("nan")
    rec["seconds"] = seconds
    return rec


def _batches(n: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def _hook(on_step: Optional[StepHook], event: str, model: Da3dModel) -> None:
    if on_step is not None:
        on_step(event, model)


def pretrain(
    model: Da3dModel,
    train_data,
    cfg: TrainConfig,
    rng: np.random.Generator,
    on_step: Optional[StepHook] = None,
) -> TrainLog:
    """Train the AAE and warm the alarm up on normal and trivial-noise inputs."""
    x = np.asarray(train_data, dtype=np.float64)
    if len(x) == 0:
        raise ValueError("empty training set")
    log = TrainLog(seed=cfg.seed)
    if cfg.epochs_pretrain and not model.meta.get("pretrained"):
        standardize_encoder(model.aae, x[rng.permutation(len(x))[:STANDARDIZE_ROWS]])
    for epoch in range(cfg.epochs_pretrain):
        t0 = time.perf_counter()
        sums = dict.fromkeys(("recon", "disc", "enc_adv", "detector"), 0.0)
        count = 0
        for b, idx in enumerate(_batches(len(x), cfg.batch_size, rng)):
            batch = x[idx]
            try:
                losses = aae_pretrain_step(model.aae, batch, rng, lr=cfg.lr, clip=cfg.clip)
                _hook(on_step, "aae", model)
                triple = TrainingTriple(batch, trivial_anomalies(len(batch), x.shape[1], rng))
                losses["detector"] = detector_step(model, triple, rng, lr=cfg.lr)
                _hook(on_step, "detector", model)
            except NonFiniteError as exc:
                raise TrainingDivergedError(f"pretrain epoch {epoch} batch {b}: {exc}") from exc
            for k, v in losses.items():
                sums[k] += v
            count += 1
        log.records.append(_record("pretrain", epoch, sums, count, time.perf_counter() - t0))
    if cfg.epochs_pretrain:
        model.meta["pretrained"] = True
    return log


def frozen_digest(model: Da3dModel) -> str:
    return model.encoder.digest() + model.decoder.digest()


def train(
    model: Da3dModel,
    train_data,
    cfg: TrainConfig,
    rng: np.random.Generator,
    mode: str = "da3d",
    on_step: Optional[StepHook] = None,
) -> TrainLog:
    """Main phase with the encoder and decoder frozen.

    Per batch: ``critic_steps_per_batch`` critic updates, one generator
    update, one detector update (``da3d``). ``trivial_only`` trains the
    detector on normal and trivial streams only; ``simple_gen`` adds a fixed
    pool of decoded random codes, resampled per batch.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; choose from {MODES}")
    x = np.asarray(train_data, dtype=np.float64)
    if len(x) == 0:
        raise ValueError("empty training set")
    frozen = frozen_digest(model)
    # the frozen AAE makes normal-data activations constant for the whole phase
    normal_acts = activations_of_inputs(model, x)
    normal_codes = encode(model.aae, x)
    pool = None
    if mode == "simple_gen":
        pool = activations_of_inputs(model, simple_generate(model.aae, SIMPLE_POOL_SIZE, rng,
                                                           std=cfg.critic_prior_std))

    log = TrainLog(seed=cfg.seed)
    for epoch in range(cfg.epochs_main):
        t0 = time.perf_counter()
        sums = dict.fromkeys(("detector",) + (("critic", "gen") if mode == "da3d" else ()), 0.0)
        count = 0
        for b, idx in enumerate(_batches(len(x), cfg.batch_size, rng)):
            batch = x[idx]
            m = len(batch)
            try:
                cached = {"normal": normal_acts[idx]}
                triple = TrainingTriple(batch, trivial_anomalies(m, x.shape[1], rng))
                if mode == "da3d":
                    critic_total = 0.0
                    for _ in range(cfg.critic_steps_per_batch):
                        critic_total += critic_step(model, batch, rng, lr=cfg.lr, clip=cfg.clip,
                                                    prior_std=cfg.critic_prior_std,
                                                    normal_codes=normal_codes[idx])
                        _hook(on_step, "critic", model)
                    sums["critic"] += critic_total / cfg.critic_steps_per_batch
                    sums["gen"] += generator_step(model, rng, batch_size=m, lr=cfg.lr)
                    _hook(on_step, "generator", model)
                    triple.generated_codes = generate_codes(model, m, rng)
                elif mode == "simple_gen":
                    cached["generated"] = pool[rng.integers(0, len(pool), m)]
                sums["detector"] += detector_step(model, triple, rng, lr=cfg.lr, activations=cached)
                _hook(on_step, "detector", model)
            except NonFiniteError as exc:
                raise TrainingDivergedError(f"main epoch {epoch} batch {b}: {exc}") from exc
            count += 1
        log.records.append(_record("main", epoch, sums, count, time.perf_counter() - t0))
    if frozen_digest(model) != frozen:
        raise RuntimeError("encoder/decoder parameters changed during the main phase")
    if mode == "da3d" and cfg.epochs_main:
        model.meta["generator_trained"] = True
    return log


def fit(
    train_data,
    cfg: TrainConfig,
    mode: str = "da3d",
    on_step: Optional[StepHook] = None,
) -> tuple[Da3dModel, TrainLog, TrainLog]:
    """Build a model from ``cfg.seed`` and run both phases."""
    x = np.asarray(train_data, dtype=np.float64)
    rng = np.random.default_rng(cfg.seed)
    model = build_model(x.shape[1], cfg.preset, rng, dropout=cfg.dropout)
    model.meta["mode"] = mode
    pre_log = pretrain(model, x, cfg, rng, on_step)
    main_log = train(model, x, cfg, rng, mode, on_step)
    return model, pre_log, main_log
