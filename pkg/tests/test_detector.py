import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from da3d.aae import encode
from da3d.detector import (
    TrainingTriple,
    activations_of_inputs,
    detector_step,
    read_scores_csv,
    score,
    score_code,
    stream_bce,
    write_scores_csv,
)
from da3d.errors import ShapeError
from da3d.evaluation import roc_auc
from da3d.generator import generate_codes, trivial_anomalies
from da3d.model import build_model
from da3d.nn import Layer, Mlp


def test_untrained_scores_in_open_interval(fresh_model):
    s = score(fresh_model, np.random.default_rng(0).random((50, 2)))
    assert s.shape == (50,)
    assert np.all((s > 0) & (s < 1))


def test_scoring_is_deterministic(fresh_model):
    x = np.random.default_rng(1).random((10, 2))
    np.testing.assert_array_equal(score(fresh_model, x), score(fresh_model, x))


def test_score_code_of_encoding_equals_score(fresh_model):
    x = np.random.default_rng(2).random((10, 2))
    np.testing.assert_array_equal(score_code(fresh_model, encode(fresh_model.aae, x)), score(fresh_model, x))


def test_zero_codes_score_in_open_interval(fresh_model):
    s = score_code(fresh_model, np.zeros((4, 2)))
    assert np.all((s > 0) & (s < 1))


def test_shape_mismatch(fresh_model):
    with pytest.raises(ShapeError):
        score(fresh_model, np.zeros((3, 5)))
    with pytest.raises(ShapeError):
        score_code(fresh_model, np.zeros((3, 5)))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-50, 50))
def test_score_range_property(seed, shift):
    model = build_model(2, "synth", np.random.default_rng(seed))
    x = shift + np.random.default_rng(seed).standard_normal((8, 2))
    s = score(model, x)
    assert np.all((s >= 0) & (s <= 1))


def test_bce_perfect_detector():
    assert stream_bce([0.0, 0.0], [1.0], [1.0, 1.0]) == pytest.approx(0.0, abs=1e-10)


def test_bce_uniform_detector():
    assert stream_bce([0.5] * 3, [0.5] * 4, [0.5] * 5) == pytest.approx(math.log(2))


def _constant_alarm(model, logit):
    w = model.alarm.in_dim
    model.alarm = Mlp([Layer(np.zeros((w, 1)), np.array([logit]), "sigmoid", 0.0)])
    return model


def test_detector_step_loss_at_half_is_ln2(fresh_model):
    model = _constant_alarm(fresh_model, 0.0)
    rng = np.random.default_rng(3)
    triple = TrainingTriple(rng.random((8, 2)), trivial_anomalies(8, 2, rng), rng.standard_normal((8, 2)))
    assert detector_step(model, triple, rng) == pytest.approx(math.log(2))


def test_detector_step_only_touches_alarm(fresh_model):
    rng = np.random.default_rng(4)
    before = fresh_model.digests()
    for _ in range(100):
        triple = TrainingTriple(rng.random((16, 2)), trivial_anomalies(16, 2, rng), rng.standard_normal((16, 2)))
        detector_step(fresh_model, triple, rng)
    after = fresh_model.digests()
    assert after["alarm"] != before["alarm"]
    for name in ("encoder", "decoder", "code_disc", "generator", "critic"):
        assert after[name] == before[name]


def test_detector_learns_separable_activations(fresh_model):
    rng = np.random.default_rng(5)
    normal = activations_of_inputs(fresh_model, np.full((32, 2), 0.3))
    anomal = activations_of_inputs(fresh_model, np.full((32, 2), 0.9))
    acts = {"normal": normal, "trivial": anomal, "generated": anomal}
    triple = TrainingTriple(np.zeros((32, 2)), np.zeros((32, 2)))
    for _ in range(200):
        loss = detector_step(fresh_model, triple, rng, lr=1e-3, activations=acts)
    assert loss < 0.1


def test_trained_orientation(trained, blobs):
    model, _, _ = trained
    s, y = score(model, blobs.rows("test")), blobs.part_labels("test")
    assert s[y == 0].mean() < s[y == 1].mean()
    assert roc_auc(s, y) > 0.5


def test_generated_codes_scored_anomalous(trained):
    model, _, _ = trained
    assert score_code(model, generate_codes(model, 500, np.random.default_rng(6))).mean() > 0.5


def test_scores_csv_round_trip(tmp_path):
    s = np.array([0.1, 0.25, 0.9])
    path = write_scores_csv(tmp_path / "s.csv", s)
    assert path.read_text().splitlines()[0] == "index,score,label"
    got, labels = read_scores_csv(path)
    np.testing.assert_array_equal(got, s)
    np.testing.assert_array_equal(labels, [-1, -1, -1])
