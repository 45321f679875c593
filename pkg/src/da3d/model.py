"""Composite DA3D model, architecture presets and checkpoint I/O."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .aae import DISC_DIMS, AaeModel, make_aae
from .checkpoint import decode_networks, encode_networks
from .errors import CheckpointError, ShapeError
from .nn import Mlp, make_mlp


@dataclass(frozen=True)
class Architecture:
    aae: tuple  # encoder hidden widths, last entry is the code width
    generator: tuple  # generator hidden widths
    disc: tuple = DISC_DIMS


PRESETS = {
    "covtype": Architecture(aae=(90, 75, 60, 45, 25, 15), generator=(30, 25, 20)),
    "creditcard": Architecture(aae=(50, 40, 30, 20, 10, 5), generator=(20, 15, 10)),
    "doh": Architecture(aae=(50, 40, 30, 20, 10, 5), generator=(20, 15, 10)),
    "kdd": Architecture(aae=(150, 100, 70, 40, 25, 10), generator=(25, 20, 15)),
    "url": Architecture(aae=(100, 80, 60, 40, 20, 10), generator=(25, 20, 15)),
    # desk-scale preset for the bundled low-dimensional synthetic tasks
    "synth": Architecture(aae=(40, 30, 20, 10, 2), generator=(20, 15, 10)),
}

ALARM_DIMS = (100, 50, 25, 10)
ALARM_DIMS_WIDE = (1000, 500, 200, 75)
WIDE_INPUT_THRESHOLD = 100


def alarm_dims_for(input_dim: int) -> tuple:
    return ALARM_DIMS_WIDE if input_dim >= WIDE_INPUT_THRESHOLD else ALARM_DIMS


@dataclass
class Da3dModel:
    aae: AaeModel
    alarm: Mlp
    generator: Mlp
    critic: Mlp
    preset: str = "custom"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.alarm.in_dim != self.decoder.hidden_width or self.alarm.out_dim != 1:
            raise ShapeError(
                f"alarm must map {self.decoder.hidden_width} hidden activations to one score"
            )
        if self.alarm.layers[-1].activation != "sigmoid":
            raise ShapeError("alarm output layer must be sigmoid")
        if self.generator.out_dim != self.code_dim:
            raise ShapeError("generator must emit code vectors")
        if self.critic.in_dim != self.code_dim or self.critic.out_dim != 1:
            raise ShapeError("critic must map code vectors to a scalar")
        self.meta.setdefault("pretrained", False)
        self.meta.setdefault("generator_trained", False)

    @property
    def encoder(self) -> Mlp:
        return self.aae.encoder

    @property
    def decoder(self) -> Mlp:
        return self.aae.decoder

    @property
    def code_disc(self) -> Mlp:
        return self.aae.code_disc

    @property
    def code_dim(self) -> int:
        return self.aae.code_dim

    @property
    def input_dim(self) -> int:
        return self.aae.input_dim

    def networks(self) -> dict:
        return {
            "encoder": self.encoder,
            "decoder": self.decoder,
            "code_disc": self.code_disc,
            "alarm": self.alarm,
            "generator": self.generator,
            "critic": self.critic,
        }

    def digests(self) -> dict:
        return {name: net.digest() for name, net in self.networks().items()}


def build_model(
    input_dim: int,
    preset: str | Architecture = "synth",
    rng: np.random.Generator | None = None,
    dropout: float = 0.1,
    alarm_dims: Sequence[int] | None = None,
) -> Da3dModel:
    """Initialise every network of a DA3D model for ``input_dim`` features."""
    rng = np.random.default_rng(0) if rng is None else rng
    if isinstance(preset, str):
        try:
            arch = PRESETS[preset]
        except KeyError:
            raise ValueError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}") from None
        name = preset
    else:
        arch, name = preset, "custom"
    aae = make_aae(input_dim, arch.aae, rng, dropout=dropout, disc_dims=arch.disc)
    code_dim = aae.code_dim
    alarm_dims = tuple(alarm_dims) if alarm_dims is not None else alarm_dims_for(input_dim)
    alarm = make_mlp(
        [aae.decoder.hidden_width, *alarm_dims, 1], rng, output_activation="sigmoid", dropout=dropout
    )
    generator = make_mlp([code_dim, *arch.generator, code_dim], rng, dropout=dropout)
    critic = make_mlp([code_dim, *arch.disc, 1], rng, dropout=dropout)
    return Da3dModel(aae=aae, alarm=alarm, generator=generator, critic=critic, preset=name)


def checkpoint_bytes(model: Da3dModel) -> bytes:
    meta = dict(model.meta)
    meta["preset"] = model.preset
    return encode_networks(model.networks(), meta)


def save_checkpoint(model: Da3dModel, path) -> Path:
    path = Path(path)
    path.write_bytes(checkpoint_bytes(model))
    return path


def model_from_bytes(data: bytes) -> Da3dModel:
    networks, meta = decode_networks(data)
    missing = {"encoder", "decoder", "code_disc", "alarm", "generator", "critic"} - set(networks)
    if missing:
        raise CheckpointError(f"checkpoint lacks networks: {sorted(missing)}")
    preset = meta.pop("preset", "custom")
    aae = AaeModel(networks["encoder"], networks["decoder"], networks["code_disc"])
    return Da3dModel(
        aae=aae,
        alarm=networks["alarm"],
        generator=networks["generator"],
        critic=networks["critic"],
        preset=preset,
        meta=meta,
    )


def load_checkpoint(path) -> Da3dModel:
    return model_from_bytes(Path(path).read_bytes())
