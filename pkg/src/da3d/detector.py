"""Anomaly detector: an alarm network reading the decoder's hidden activations."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .aae import decode, encode
from .errors import NonFiniteError
from .model import Da3dModel
from .nn import adam_step, backward, forward, hidden_activations

_EPS = 1e-12


@dataclass
class TrainingTriple:
    """One detector step's worth of inputs.

    ``generated_codes`` are code-space anomalies (scored through the decoder
    only). ``generated_inputs`` are input-space anomalies scored through the
    full encoder/decoder path; the ablation with a fixed pool uses these.
    Leaving both empty trains on the normal and trivial streams alone.
    """

    normal_batch: np.ndarray
    trivial_batch: np.ndarray
    generated_codes: Optional[np.ndarray] = None
    generated_inputs: Optional[np.ndarray] = None


def activations_of_inputs(model: Da3dModel, batch) -> np.ndarray:
    return hidden_activations(decode(model.aae, encode(model.aae, batch)))


def activations_of_codes(model: Da3dModel, codes) -> np.ndarray:
    return hidden_activations(decode(model.aae, codes))


def score(model: Da3dModel, batch) -> np.ndarray:
    """Anomaly score in [0, 1] per row of ``batch`` (1 = anomalous)."""
    acts = activations_of_inputs(model, batch)
    return forward(model.alarm, acts, "infer").output[:, 0]


def score_code(model: Da3dModel, codes) -> np.ndarray:
    acts = activations_of_codes(model, codes)
    return forward(model.alarm, acts, "infer").output[:, 0]


def stream_bce(p_normal, p_trivial, p_generated=None) -> float:
    """Equal-weight mean of per-stream binary cross-entropies.

    Normal rows have target 0, trivial and generated rows target 1.
    """
    terms = [-np.mean(np.log(np.clip(1.0 - np.asarray(p_normal), _EPS, 1.0))),
             -np.mean(np.log(np.clip(np.asarray(p_trivial), _EPS, 1.0)))]
    if p_generated is not None:
        terms.append(-np.mean(np.log(np.clip(np.asarray(p_generated), _EPS, 1.0))))
    return float(np.mean(terms))


def detector_step(
    model: Da3dModel,
    triple: TrainingTriple,
    rng: np.random.Generator,
    lr: float = 1e-4,
    activations: Optional[dict] = None,
) -> float:
    """Update the alarm network only; returns the loss before the update.

    ``activations`` may supply precomputed hidden activations for any stream
    (keys ``"normal"``, ``"trivial"``, ``"generated"``) to skip the frozen
    encoder/decoder pass.
    """
    activations = activations or {}
    streams = [
        ("normal", 0.0, lambda: activations_of_inputs(model, triple.normal_batch)),
        ("trivial", 1.0, lambda: activations_of_inputs(model, triple.trivial_batch)),
    ]
    if triple.generated_codes is not None:
        streams.append(("generated", 1.0, lambda: activations_of_codes(model, triple.generated_codes)))
    elif triple.generated_inputs is not None or "generated" in activations:
        streams.append(("generated", 1.0, lambda: activations_of_inputs(model, triple.generated_inputs)))

    acts, targets, weights = [], [], []
    for name, target, compute in streams:
        a = activations[name] if name in activations else compute()
        acts.append(a)
        targets.append(np.full(a.shape[0], target))
        weights.append(np.full(a.shape[0], 1.0 / (len(streams) * a.shape[0])))
    x = np.concatenate(acts)
    y = np.concatenate(targets)[:, None]
    w = np.concatenate(weights)[:, None]

    trace = forward(model.alarm, x, "train", rng)
    z = trace.pre[-1]
    # BCE from logits: softplus(z) for target 0, softplus(-z) for target 1
    per_row = np.logaddexp(0.0, np.where(y > 0.5, -z, z))
    loss = float(np.sum(w * per_row))
    if not np.isfinite(loss):
        raise NonFiniteError(f"detector loss is not finite ({loss})")
    grads = backward(model.alarm, trace, w * (trace.output - y), wrt_logits=True)
    adam_step(model.alarm, grads, lr)
    return loss


def write_scores_csv(path, scores, labels=None) -> Path:
    """Write ``index,score,label`` rows; label is -1 where unknown."""
    path = Path(path)
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.full(len(scores), -1, dtype=int) if labels is None else np.asarray(labels, dtype=int)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "score", "label"])
        for i, (s, l) in enumerate(zip(scores, labels)):
            writer.writerow([i, repr(float(s)), int(l)])
    return path


def read_scores_csv(path) -> tuple[np.ndarray, np.ndarray]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    return (np.array([float(r["score"]) for r in rows]),
            np.array([int(r["label"]) for r in rows], dtype=int))
