"""Double-adversarial anomaly generator, its critic, and the baseline samplers."""
from __future__ import annotations

import math

import numpy as np

from .aae import AaeModel, balance_weight, decode
from .errors import NonFiniteError
from .model import Da3dModel
from .nn import adam_step, backward, clip_weights, forward, gaussian_matrix, hidden_activations

CRITIC_PRIOR_STD = math.sqrt(2.0)
TRIVIAL_MEAN = 0.5
TRIVIAL_STD = 1.0
SIMPLE_POOL_SIZE = 500


def _noise(model: Da3dModel, n: int, rng) -> np.ndarray:
    return gaussian_matrix(n, model.code_dim, 0.0, 1.0, rng)


def generate_codes(model: Da3dModel, n: int, rng: np.random.Generator, train: bool = False) -> np.ndarray:
    """Map n_gen ~ N(0, I) through the generator to code-space anomalies."""
    if n < 1:
        raise ValueError("need at least one sample")
    noise = _noise(model, n, rng)
    return forward(model.generator, noise, "train" if train else "infer", rng).output


def generate_anomalies(model: Da3dModel, n: int, rng: np.random.Generator) -> np.ndarray:
    return decode(model.aae, generate_codes(model, n, rng)).output


def critic_loss(model: Da3dModel, normal_codes, generated_codes, prior) -> float:
    c = lambda h: forward(model.critic, h, "infer").output.mean()
    return float(c(normal_codes) + c(generated_codes) - 2.0 * c(prior))


def critic_step(
    model: Da3dModel,
    normal_batch,
    rng: np.random.Generator,
    lr: float = 1e-4,
    clip: float = 0.01,
    prior_std: float = CRITIC_PRIOR_STD,
    normal_codes=None,
) -> float:
    """Minimise E[C(enc(x))] + E[C(gen(n))] - 2 E[C(n_critic)], then clip.

    Returns the loss evaluated on this step's batches before the update.
    ``normal_codes`` may hold enc(normal_batch) precomputed.
    """
    if normal_codes is None:
        normal_codes = forward(model.encoder, np.asarray(normal_batch, dtype=np.float64), "infer").output
    n = normal_codes.shape[0]
    gen_codes = forward(model.generator, _noise(model, n, rng), "infer").output
    prior = gaussian_matrix(n, model.code_dim, 0.0, prior_std, rng)

    # one pass over all three streams; each row carries its term's coefficient / n
    coef = np.repeat([1.0, 1.0, -2.0], n)[:, None] / n
    trace = forward(model.critic, np.vstack([normal_codes, gen_codes, prior]), "train", rng)
    loss = float(np.sum(coef * trace.output))
    if not np.isfinite(loss):
        raise NonFiniteError(f"critic loss is not finite ({loss})")
    adam_step(model.critic, backward(model.critic, trace, coef), lr)
    clip_weights(model.critic, clip)
    return loss


def generator_step(
    model: Da3dModel,
    rng: np.random.Generator,
    batch_size: int = 256,
    lr: float = 1e-4,
    balance: bool = True,
) -> float:
    """Update the generator to fool both the alarm and the critic.

    Minimises E[alarm(a(dec(gen(n))))] - E[critic(gen(n))]; gradients pass
    through the frozen decoder, alarm and critic, whose parameters stay put.

    A weight-clipped critic is orders of magnitude smaller in output scale
    than the sigmoid alarm, so with ``balance`` the critic's gradient at the
    generated codes is rescaled to the norm of the alarm's gradient before
    the two are summed. Either term alone passes through unscaled.
    """
    n = int(batch_size)
    gen_trace = forward(model.generator, _noise(model, n, rng), "train", rng)
    codes = gen_trace.output

    dec_trace = forward(model.decoder, codes, "infer")
    alarm_trace = forward(model.alarm, hidden_activations(dec_trace), "infer")
    critic_trace = forward(model.critic, codes, "infer")
    loss = float(alarm_trace.output.mean() - critic_trace.output.mean())
    if not np.isfinite(loss):
        raise NonFiniteError(f"generator loss is not finite ({loss})")

    g_alarm = backward(model.alarm, alarm_trace, np.full((n, 1), 1.0 / n))
    g_dec = backward(model.decoder, dec_trace, hidden_grad=g_alarm.inputs)
    g_critic = backward(model.critic, critic_trace, np.full((n, 1), -1.0 / n))
    g_gen = backward(model.generator, gen_trace,
                     g_dec.inputs + balance_weight(g_dec.inputs, g_critic.inputs, balance) * g_critic.inputs)
    adam_step(model.generator, g_gen, lr)
    return loss


def simple_codes(code_dim: int, n: int, rng: np.random.Generator, std: float = CRITIC_PRIOR_STD) -> np.ndarray:
    return gaussian_matrix(n, code_dim, 0.0, std, rng)


def simple_generate(aae: AaeModel, n: int, rng: np.random.Generator, std: float = CRITIC_PRIOR_STD) -> np.ndarray:
    """Decode raw Gaussian codes: the random-code baseline generator."""
    return decode(aae, simple_codes(aae.code_dim, n, rng, std)).output


def trivial_anomalies(n: int, input_dim: int, rng: np.random.Generator) -> np.ndarray:
    """Input-space noise N(0.5, 1); deliberately not clipped to [0, 1]."""
    return gaussian_matrix(n, input_dim, TRIVIAL_MEAN, TRIVIAL_STD, rng)
