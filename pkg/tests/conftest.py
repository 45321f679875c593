import dataclasses

import numpy as np
import pytest

from da3d.data import synth_task
from da3d.model import build_model
from da3d.trainer import TrainConfig, fit, pretrain

SMALL = TrainConfig(seed=42, batch_size=128, epochs_pretrain=20, epochs_main=30)


@pytest.fixture(scope="session")
def blobs():
    return synth_task("blobs2d", seed=0)


@pytest.fixture(scope="session")
def trained(blobs):
    """A da3d model trained at reduced budget, plus its logs."""
    model, pre_log, main_log = fit(blobs.rows("train"), SMALL, "da3d")
    return model, pre_log, main_log


@pytest.fixture(scope="session")
def pretrained_50(blobs):
    """Model after the full 50-epoch pretraining phase, plus the MSE before it."""
    cfg = dataclasses.replace(SMALL, epochs_pretrain=50)
    rng = np.random.default_rng(cfg.seed)
    model = build_model(2, "synth", rng)
    log = pretrain(model, blobs.rows("train"), cfg, rng)
    return model, log


@pytest.fixture
def fresh_model():
    return build_model(2, "synth", np.random.default_rng(0))
