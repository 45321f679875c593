import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from da3d.data import synth_task
from da3d.evaluation import EvalReport, read_report, roc_auc, run_experiment, write_report
from da3d.trainer import TrainConfig

from helpers import brute_force_auc


def test_perfect_ranking():
    assert roc_auc([0.9, 0.1], [1, 0]) == 1.0


def test_all_ties():
    assert roc_auc([0.3] * 6, [0, 1, 0, 1, 1, 0]) == 0.5


def test_one_right_one_wrong():
    assert roc_auc([0.8, 0.7, 0.3], [1, 0, 1]) == 0.5


def test_single_class_rejected():
    with pytest.raises(ValueError):
        roc_auc([0.1, 0.2], [1, 1])


def test_brute_force_equivalence_500_instances():
    rng = np.random.default_rng(0)
    for _ in range(500):
        n = int(rng.integers(2, 201))
        labels = rng.integers(0, 2, n)
        labels[:2] = [0, 1]
        scores = np.round(rng.random(n), int(rng.integers(1, 4)))  # rounding forces ties
        assert abs(roc_auc(scores, labels) - brute_force_auc(scores, labels)) <= 1e-12


labelled = st.integers(2, 60).flatmap(lambda n: st.tuples(
    st.lists(st.integers(0, 20), min_size=n, max_size=n),
    st.lists(st.integers(0, 1), min_size=n, max_size=n),
)).filter(lambda t: 0 < sum(t[1]) < len(t[1]))


@settings(max_examples=200, deadline=None)
@given(labelled)
def test_complement(data):
    scores, labels = np.array(data[0], float), np.array(data[1])
    assert roc_auc(scores, labels) + roc_auc(scores, 1 - labels) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(labelled, st.floats(0.1, 10), st.floats(-5, 5))
def test_monotone_invariance(data, a, b):
    scores, labels = np.array(data[0], float) / 20, np.array(data[1])
    base = roc_auc(scores, labels)
    assert roc_auc(a * scores + b, labels) == pytest.approx(base, abs=1e-12)
    assert roc_auc(scores**3 + scores, labels) == pytest.approx(base, abs=1e-12)


def _reports(aucs):
    return [EvalReport(run=i, seed=42 + i, mode="da3d", dataset="blobs2d", pollution=0.0, auc=a,
                       runtime_s=1.5, config_hash="abc", experiment="x") for i, a in enumerate(aucs)]


def test_report_rows(tmp_path):
    csv_path, json_path = write_report(_reports([0.9] * 7), tmp_path / "r.csv")
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "run,seed,mode,dataset,pollution,auc,runtime_s"
    assert len(lines) - 1 == 8
    assert lines[-1].split(",")[5] == "0.9+-0.0"
    assert json_path.exists()


def test_report_round_trip(tmp_path):
    reports = _reports([0.81, 0.92, 0.77])
    write_report(reports, tmp_path / "r.csv")
    assert read_report(tmp_path / "r.csv") == reports


def test_empty_report_rejected(tmp_path):
    with pytest.raises(ValueError):
        write_report([], tmp_path / "r.csv")


def test_auc_bounds_enforced():
    with pytest.raises(ValueError):
        _reports([1.5])


def test_run_experiment_deterministic():
    ds = synth_task("blobs2d", n_train=200, n_val=10, n_test_normal=40, n_test_anom=40, seed=1)
    cfg = TrainConfig(seed=7, batch_size=64, epochs_pretrain=1, epochs_main=1)
    a, mean_a, std_a = run_experiment(ds, cfg, "da3d", n_runs=2)
    b, mean_b, _ = run_experiment(ds, cfg, "da3d", n_runs=2)
    assert [r.seed for r in a] == [7, 8]
    assert [r.auc for r in a] == [r.auc for r in b] and mean_a == mean_b
    assert std_a >= 0
    assert a[0].config_hash != a[1].config_hash  # the seed is part of the config


def test_run_experiment_rejects_unknown_mode():
    with pytest.raises(ValueError):
        run_experiment(synth_task(), TrainConfig(), "nope", n_runs=1)
