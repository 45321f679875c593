"""Unsupervised anomaly detection with a double-adversarial anomaly generator.

An adversarial autoencoder is trained on normal data; an alarm network
reads its decoder's hidden activations and learns to separate normal
inputs from trivial noise and from anomalies proposed by a generator that
is pushed away from normal codes by a Wasserstein critic.
"""
from .aae import AaeModel, decode, encode, make_aae
from .data import Dataset, PollutionSpec, load_csv, pollute, preprocess, split, synth_dataset, synth_task
from .detector import TrainingTriple, detector_step, score, score_code
from .evaluation import EvalReport, read_report, roc_auc, run_experiment, write_report
from .generator import (
    critic_step,
    generate_anomalies,
    generate_codes,
    generator_step,
    simple_generate,
    trivial_anomalies,
)
from .model import PRESETS, Da3dModel, build_model, load_checkpoint, save_checkpoint
from .trainer import TrainConfig, TrainLog, fit, pretrain, train

__version__ = "0.1.0"
