import numpy as np
import pytest

from da3d.aae import aae_pretrain_step, decode, encode, make_aae, reconstruction_mse, standardize_encoder
from da3d.errors import ShapeError
from da3d.model import PRESETS
from da3d.nn import make_mlp


def test_symmetric_construction():
    aae = make_aae(7, (6, 4, 3), np.random.default_rng(0))
    assert aae.encoder.dims == [7, 6, 4, 3]
    assert aae.decoder.dims == [3, 4, 6, 7]
    assert aae.code_dim == 3 and aae.code_disc.in_dim == 3 and aae.code_disc.out_dim == 1


def test_asymmetric_construction_rejected():
    from da3d.aae import AaeModel

    rng = np.random.default_rng(0)
    enc, dec = make_mlp([5, 4, 2], rng), make_mlp([2, 3, 5], rng)
    with pytest.raises(ShapeError):
        AaeModel(enc, dec, make_mlp([2, 4, 1], rng))


@pytest.mark.parametrize("preset, code", [("kdd", 10), ("creditcard", 5), ("covtype", 15)])
def test_preset_code_width(preset, code):
    aae = make_aae(120, PRESETS[preset].aae, np.random.default_rng(0))
    assert encode(aae, np.zeros((3, 120))).shape == (3, code)


def test_kdd_decoder_hidden_width():
    aae = make_aae(120, PRESETS["kdd"].aae, np.random.default_rng(0))
    # decoder 10 -> 25 -> 40 -> 70 -> 100 -> 150 -> 120: five hidden layers
    assert aae.decoder.hidden_width == 385


def test_empty_batch():
    aae = make_aae(4, (3, 2), np.random.default_rng(0))
    assert encode(aae, np.zeros((0, 4))).shape == (0, 2)


def test_shape_mismatch():
    aae = make_aae(4, (3, 2), np.random.default_rng(0))
    with pytest.raises(ShapeError):
        encode(aae, np.zeros((2, 5)))
    with pytest.raises(ShapeError):
        decode(aae, np.zeros((2, 3)))


def test_decode_zero_code_in_unit_interval():
    aae = make_aae(4, (3, 2), np.random.default_rng(0))
    a, b = decode(aae, np.zeros((2, 2))).output, decode(aae, np.zeros((2, 2))).output
    np.testing.assert_array_equal(a, b)
    assert np.all((a > 0) & (a < 1))


def test_standardize_encoder_gives_unit_codes():
    rng = np.random.default_rng(1)
    aae = make_aae(2, (40, 30, 20, 10, 2), rng)
    x = rng.random((1000, 2)) * 0.1
    standardize_encoder(aae, x)
    codes = encode(aae, x)
    np.testing.assert_allclose(codes.mean(axis=0), 0.0, atol=1e-9)
    np.testing.assert_allclose(codes.std(axis=0), 1.0, atol=1e-9)


def test_pretrain_step_losses_and_clip():
    rng = np.random.default_rng(2)
    aae = make_aae(3, (8, 4, 2), rng)
    x = rng.random((32, 3))
    losses = aae_pretrain_step(aae, x, rng)
    assert set(losses) == {"recon", "disc", "enc_adv"}
    assert losses["recon"] > 0
    assert all(np.isfinite(v) for v in losses.values())
    assert aae.code_disc.max_abs_parameter() <= 0.01


def test_pretrain_step_updates_in_order():
    rng = np.random.default_rng(3)
    aae = make_aae(3, (8, 4, 2), rng)
    before = (aae.encoder.digest(), aae.decoder.digest(), aae.code_disc.digest())
    aae_pretrain_step(aae, rng.random((16, 3)), rng)
    after = (aae.encoder.digest(), aae.decoder.digest(), aae.code_disc.digest())
    assert all(a != b for a, b in zip(before, after))
    # reconstruction update on the shared Adam state; adversarial update on its own
    assert aae.encoder.adam.step == 1 and aae.enc_adv_adam.step == 1
    assert aae.decoder.adam.step == 1 and aae.code_disc.adam.step == 1


def test_pretraining_reduces_heldout_mse(pretrained_50, blobs):
    model, log = pretrained_50
    assert reconstruction_mse(model.aae, blobs.rows("val")) < 0.05
    recon = log.losses("recon")
    assert recon[-1] < recon[0]


def test_pretraining_reduces_heldout_mse_vs_init(pretrained_50, blobs):
    from da3d.model import build_model

    init = build_model(2, "synth", np.random.default_rng(42))
    model, _ = pretrained_50
    assert reconstruction_mse(model.aae, blobs.rows("val")) < reconstruction_mse(init.aae, blobs.rows("val"))


def test_codes_mostly_within_three(pretrained_50, blobs):
    model, _ = pretrained_50
    codes = encode(model.aae, blobs.rows("train"))
    assert np.mean(np.all(np.abs(codes) <= 3, axis=1)) >= 0.8


def test_codes_loosely_gaussian(pretrained_50, blobs):
    model, _ = pretrained_50
    codes = encode(model.aae, blobs.rows("train"))
    assert np.all(np.abs(codes.mean(axis=0)) <= 0.5)
    assert np.all((codes.std(axis=0) >= 0.4) & (codes.std(axis=0) <= 2.5))
