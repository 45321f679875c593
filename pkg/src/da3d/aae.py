"""Adversarial autoencoder with a Wasserstein code discriminator."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import NonFiniteError, ShapeError
from .nn import (
    AdamState,
    ForwardTrace,
    Mlp,
    adam_step,
    backward,
    clip_weights,
    forward,
    make_mlp,
)

DISC_DIMS = (50, 40, 30, 20, 10)


@dataclass
class AaeModel:
    encoder: Mlp
    decoder: Mlp
    code_disc: Mlp
    # the encoder gets separate Adam moments for its adversarial objective
    enc_adv_adam: Optional[AdamState] = field(default=None, repr=False)

    def __post_init__(self):
        if self.decoder.dims != self.encoder.dims[::-1]:
            raise ShapeError(
                f"decoder dims {self.decoder.dims} are not the encoder dims "
                f"{self.encoder.dims} reversed"
            )
        if self.code_disc.in_dim != self.code_dim or self.code_disc.out_dim != 1:
            raise ShapeError("code discriminator must map code vectors to a scalar")
        if self.enc_adv_adam is None:
            self.enc_adv_adam = AdamState.zeros_like(self.encoder.layers)

    @property
    def code_dim(self) -> int:
        return self.encoder.out_dim

    @property
    def input_dim(self) -> int:
        return self.encoder.in_dim


def make_aae(
    input_dim: int,
    encoder_dims: Sequence[int],
    rng: np.random.Generator,
    dropout: float = 0.1,
    disc_dims: Sequence[int] = DISC_DIMS,
) -> AaeModel:
    """Symmetric AAE. ``encoder_dims`` lists hidden widths ending in the code width."""
    dims = [input_dim, *encoder_dims]
    encoder = make_mlp(dims, rng, output_activation="linear", dropout=dropout)
    decoder = make_mlp(dims[::-1], rng, output_activation="sigmoid", dropout=dropout)
    code_disc = make_mlp([dims[-1], *disc_dims, 1], rng, output_activation="linear", dropout=dropout)
    return AaeModel(encoder=encoder, decoder=decoder, code_disc=code_disc)


def standardize_encoder(aae: AaeModel, batch) -> AaeModel:
    """Data-dependent init: rescale each encoder layer to unit-variance, zero-mean pre-activations.

    Applied layer by layer on ``batch`` so the codes of fresh training data
    start near N(0, I). Columns with no spread are left alone.
    """
    h = np.asarray(batch, dtype=np.float64)
    for layer in aae.encoder.layers:
        z = h @ layer.weights + layer.bias
        mu, sd = z.mean(axis=0), z.std(axis=0)
        ok = sd > 1e-12
        layer.weights[:, ok] /= sd[ok]
        layer.bias[ok] = (layer.bias[ok] - mu[ok]) / sd[ok]
        h = forward(Mlp([layer]), h, "infer").output
    return aae


def encode(aae: AaeModel, batch) -> np.ndarray:
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != aae.input_dim:
        raise ShapeError(f"expected batch with {aae.input_dim} columns, got shape {batch.shape}")
    return forward(aae.encoder, batch, "infer").output


def decode(aae: AaeModel, code) -> ForwardTrace:
    code = np.asarray(code, dtype=np.float64)
    if code.ndim != 2 or code.shape[1] != aae.code_dim:
        raise ShapeError(f"expected codes with {aae.code_dim} columns, got shape {code.shape}")
    return forward(aae.decoder, code, "infer")


def reconstruction_mse(aae: AaeModel, batch) -> float:
    recon = decode(aae, encode(aae, batch)).output
    return float(np.mean((recon - np.asarray(batch)) ** 2))


def balance_weight(g_main: np.ndarray, g_adv: np.ndarray, balance: bool = True) -> float:
    """Factor that brings ``g_adv`` to the norm of ``g_main`` (1 if either is zero)."""
    if not balance:
        return 1.0
    nm, na = float(np.linalg.norm(g_main)), float(np.linalg.norm(g_adv))
    if nm == 0.0 or na == 0.0:
        return 1.0
    return nm / na


def _finite(value: float, what: str) -> float:
    if not np.isfinite(value):
        raise NonFiniteError(f"{what} loss is not finite ({value})")
    return value


def aae_pretrain_step(
    aae: AaeModel,
    normal_batch,
    rng: np.random.Generator,
    lr: float = 1e-4,
    clip: float = 0.01,
    balance: bool = False,
    disc_steps: int = 1,
) -> dict:
    """One reconstruction, ``disc_steps`` discriminator and one adversarial encoder update.

    Returns the three losses measured before their respective updates (the
    discriminator loss is averaged over its steps). With
    ``balance`` the discriminator's gradient at the codes is rescaled to the
    norm of the reconstruction gradient at the codes; a weight-clipped
    discriminator otherwise yields gradients far below Adam's epsilon.
    """
    x = np.asarray(normal_batch, dtype=np.float64)
    n = x.shape[0]

    # (1) reconstruction: encoder + decoder on MSE
    enc_trace = forward(aae.encoder, x, "train", rng)
    dec_trace = forward(aae.decoder, enc_trace.output, "train", rng)
    diff = dec_trace.output - x
    recon = _finite(float(np.mean(diff**2)), "reconstruction")
    dec_grads = backward(aae.decoder, dec_trace, 2.0 * diff / diff.size)
    enc_grads = backward(aae.encoder, enc_trace, dec_grads.inputs)
    adam_step(aae.decoder, dec_grads, lr)
    adam_step(aae.encoder, enc_grads, lr)

    # (2) discriminator: min E[D(enc(x))] - E[D(prior)]
    codes = forward(aae.encoder, x, "infer").output
    coef = np.r_[np.full(n, 1.0 / n), np.full(n, -1.0 / n)][:, None]
    disc = 0.0
    for _ in range(disc_steps):
        prior = rng.standard_normal((n, aae.code_dim))
        trace = forward(aae.code_disc, np.vstack([codes, prior]), "train", rng)
        disc += _finite(float(np.sum(coef * trace.output)), "discriminator") / disc_steps
        adam_step(aae.code_disc, backward(aae.code_disc, trace, coef), lr)
        clip_weights(aae.code_disc, clip)

    # (3) adversarial: encoder minimizes -E[D(enc(x))]
    enc_trace = forward(aae.encoder, x, "train", rng)
    d_trace = forward(aae.code_disc, enc_trace.output, "infer")
    enc_adv = _finite(float(-d_trace.output.mean()), "encoder adversarial")
    d_grads = backward(aae.code_disc, d_trace, np.full((n, 1), -1.0 / n))
    weight = balance_weight(dec_grads.inputs, d_grads.inputs, balance)
    enc_grads = backward(aae.encoder, enc_trace, weight * d_grads.inputs)
    adam_step(aae.encoder, enc_grads, lr, state=aae.enc_adv_adam)

    return {"recon": recon, "disc": disc, "enc_adv": enc_adv}
