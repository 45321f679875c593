"""Small dense-network engine in float64 numpy.

Sequential MLPs only: forward pass with full activation capture, reverse-mode
gradients (including gradients injected at hidden layers), Adam, inverted
dropout and weight clipping.
"""
from __future__ import annotations

import copy
import hashlib
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import NonFiniteError, ShapeError

SELU_ALPHA = 1.6732632423543772848170429916717
SELU_SCALE = 1.0507009873554804934193349852946

ACTIVATIONS = ("linear", "selu", "sigmoid")

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def selu(z: np.ndarray) -> np.ndarray:
    return SELU_SCALE * (np.maximum(z, 0.0) + SELU_ALPHA * np.expm1(np.minimum(z, 0.0)))


def selu_grad(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0.0, SELU_SCALE, SELU_SCALE * SELU_ALPHA * np.exp(np.minimum(z, 0.0)))


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _activate(kind: str, z: np.ndarray) -> np.ndarray:
    if kind == "selu":
        return selu(z)
    if kind == "sigmoid":
        return sigmoid(z)
    return z


def _activation_grad(kind: str, z: np.ndarray, a: np.ndarray):
    # a is the activation output before dropout
    if kind == "selu":
        return np.where(z > 0.0, SELU_SCALE, a + SELU_SCALE * SELU_ALPHA)
    if kind == "sigmoid":
        return a * (1.0 - a)
    return None


@dataclass
class Layer:
    weights: np.ndarray  # (in, out)
    bias: np.ndarray  # (out,)
    activation: str = "selu"
    dropout: float = 0.0

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64).reshape(-1)
        if self.weights.ndim != 2 or self.bias.shape[0] != self.weights.shape[1]:
            raise ShapeError(
                f"weights {self.weights.shape} and bias {self.bias.shape} do not agree"
            )
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout rate must lie in [0, 1), got {self.dropout}")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[1]


@dataclass
class AdamState:
    m: list
    v: list
    step: int = 0

    @classmethod
    def zeros_like(cls, layers: Sequence[Layer]) -> "AdamState":
        m = [(np.zeros_like(l.weights), np.zeros_like(l.bias)) for l in layers]
        v = [(np.zeros_like(l.weights), np.zeros_like(l.bias)) for l in layers]
        return cls(m=m, v=v, step=0)


@dataclass
class Mlp:
    layers: list
    adam: Optional[AdamState] = None

    def __post_init__(self):
        if not self.layers:
            raise ShapeError("an Mlp needs at least one layer")
        for i in range(1, len(self.layers)):
            if self.layers[i - 1].out_dim != self.layers[i].in_dim:
                raise ShapeError(
                    f"layer {i} expects {self.layers[i].in_dim} inputs but layer {i - 1} "
                    f"produces {self.layers[i - 1].out_dim}"
                )
        if self.adam is None:
            self.adam = AdamState.zeros_like(self.layers)

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def dims(self) -> list:
        return [self.in_dim] + [l.out_dim for l in self.layers]

    @property
    def hidden_width(self) -> int:
        return sum(l.out_dim for l in self.layers[:-1])

    def parameters(self):
        for layer in self.layers:
            yield layer.weights
            yield layer.bias

    def max_abs_parameter(self) -> float:
        return max(float(np.max(np.abs(p))) if p.size else 0.0 for p in self.parameters())

    def digest(self) -> str:
        """SHA-256 over all weights and biases, in layer order."""
        h = hashlib.sha256()
        for p in self.parameters():
            h.update(np.ascontiguousarray(p, dtype="<f8").tobytes())
        return h.hexdigest()

    def copy(self) -> "Mlp":
        return copy.deepcopy(self)

    def __call__(self, batch, rng=None, train=False):
        return forward(self, batch, "train" if train else "infer", rng).output


def make_mlp(
    dims: Sequence[int],
    rng: np.random.Generator,
    hidden_activation: str = "selu",
    output_activation: str = "linear",
    dropout: float = 0.0,
) -> Mlp:
    """Build an MLP with LeCun-normal weights and zero biases.

    ``dims`` lists the input width followed by every layer's output width.
    Dropout is attached to hidden layers only.
    """
    dims = [int(d) for d in dims]
    if len(dims) < 2 or min(dims) < 1:
        raise ShapeError(f"invalid layer dimensions {dims}")
    layers = []
    n = len(dims) - 1
    for i in range(n):
        fan_in, fan_out = dims[i], dims[i + 1]
        w = rng.standard_normal((fan_in, fan_out)) / np.sqrt(fan_in)
        last = i == n - 1
        layers.append(
            Layer(
                weights=w,
                bias=np.zeros(fan_out),
                activation=output_activation if last else hidden_activation,
                dropout=0.0 if last else dropout,
            )
        )
    return Mlp(layers)


@dataclass
class ForwardTrace:
    inputs: np.ndarray
    pre: list = field(default_factory=list)  # pre-activations z_i
    act: list = field(default_factory=list)  # activations before dropout
    post: list = field(default_factory=list)  # layer outputs after activation and dropout
    masks: list = field(default_factory=list)  # scaled keep-masks, None in infer mode
    train: bool = False

    @property
    def output(self) -> np.ndarray:
        return self.post[-1]


def _check_finite(x: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(x)):
        raise NonFiniteError(f"non-finite values in {what}")


def forward(mlp: Mlp, batch, mode: str = "infer", rng: Optional[np.random.Generator] = None) -> ForwardTrace:
    """Run ``batch`` through ``mlp`` and record every layer's activations.

    In ``"train"`` mode hidden-layer dropout is active and uses inverted scaling,
    so ``"infer"`` mode is a plain deterministic pass.
    """
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"expected a 2-D batch, got shape {x.shape}")
    train = mode == "train"
    trace = ForwardTrace(inputs=x, train=train)
    h = x
    for i, layer in enumerate(mlp.layers):
        if h.shape[1] != layer.in_dim:
            raise ShapeError(f"layer {i} expects {layer.in_dim} input columns, got {h.shape[1]}")
        z = h @ layer.weights + layer.bias
        a = _activate(layer.activation, z)
        trace.act.append(a)
        mask = None
        if train and layer.dropout > 0.0:
            if rng is None:
                raise ValueError("train mode with dropout requires an rng")
            keep = 1.0 - layer.dropout
            mask = (rng.random(a.shape) < keep) / keep
            a = a * mask
        trace.pre.append(z)
        trace.post.append(a)
        trace.masks.append(mask)
        h = a
    _check_finite(h, "network output")
    return trace


def hidden_activations(trace: ForwardTrace) -> np.ndarray:
    """Concatenate the outputs of every layer except the last, per sample."""
    if len(trace.post) < 2:
        raise ShapeError("network has no hidden layers; nothing to concatenate")
    return np.concatenate(trace.post[:-1], axis=1)


@dataclass
class Gradients:
    weights: list
    biases: list
    inputs: np.ndarray

    def __iter__(self):
        return iter(zip(self.weights, self.biases))


def backward(
    mlp: Mlp,
    trace: ForwardTrace,
    output_grad=None,
    hidden_grad=None,
    wrt_logits: bool = False,
) -> Gradients:
    """Reverse-mode gradients of a scalar loss with respect to every parameter.

    ``output_grad`` is dL/d(output). ``hidden_grad`` optionally carries
    dL/d(hidden_activations(trace)), i.e. gradients arriving at the hidden
    layers from a downstream consumer such as an alarm network. Either may be
    None (treated as zero). The gradient with respect to the input batch is
    returned as ``inputs``. With ``wrt_logits`` the ``output_grad`` is taken
    to be dL/dz of the final layer's pre-activation, which keeps sigmoid
    cross-entropy gradients exact when the output saturates.
    """
    n_layers = len(mlp.layers)
    if len(trace.pre) != n_layers:
        raise ShapeError(f"trace has {len(trace.pre)} layers, model has {n_layers}")
    rows = trace.inputs.shape[0]
    for i, layer in enumerate(mlp.layers):
        if trace.pre[i].shape != (rows, layer.out_dim):
            raise ShapeError(f"trace does not match model at layer {i}")

    if output_grad is None:
        g = np.zeros((rows, mlp.out_dim))
    else:
        g = np.asarray(output_grad, dtype=np.float64)
        if g.shape != trace.output.shape:
            raise ShapeError(f"output_grad shape {g.shape} != output shape {trace.output.shape}")

    pieces = [None] * n_layers
    if hidden_grad is not None:
        hidden_grad = np.asarray(hidden_grad, dtype=np.float64)
        if hidden_grad.shape != (rows, mlp.hidden_width):
            raise ShapeError(
                f"hidden_grad shape {hidden_grad.shape} != {(rows, mlp.hidden_width)}"
            )
        start = 0
        for i, layer in enumerate(mlp.layers[:-1]):
            pieces[i] = hidden_grad[:, start : start + layer.out_dim]
            start += layer.out_dim

    dws, dbs = [None] * n_layers, [None] * n_layers
    for i in range(n_layers - 1, -1, -1):
        layer = mlp.layers[i]
        if pieces[i] is not None:
            g = g + pieces[i]
        if trace.masks[i] is not None:
            g = g * trace.masks[i]
        if wrt_logits and i == n_layers - 1:
            dz = g
        else:
            d_act = _activation_grad(layer.activation, trace.pre[i], trace.act[i])
            dz = g if d_act is None else g * d_act
        layer_in = trace.post[i - 1] if i > 0 else trace.inputs
        dws[i] = layer_in.T @ dz
        dbs[i] = dz.sum(axis=0)
        g = dz @ layer.weights.T
    return Gradients(weights=dws, biases=dbs, inputs=g)


def adam_step(mlp: Mlp, grads: Gradients, lr: float, state: Optional[AdamState] = None) -> Mlp:
    """Apply one in-place Adam update; ``state`` defaults to the model's own."""
    state = mlp.adam if state is None else state
    for i, (dw, db) in enumerate(grads):
        if not (np.all(np.isfinite(dw)) and np.all(np.isfinite(db))):
            raise NonFiniteError(f"non-finite gradient in layer {i}")
        if dw.shape != mlp.layers[i].weights.shape or db.shape != mlp.layers[i].bias.shape:
            raise ShapeError(f"gradient shape mismatch in layer {i}")
    state.step += 1
    t = state.step
    c1 = 1.0 - ADAM_BETA1**t
    c2 = 1.0 - ADAM_BETA2**t
    for i, (dw, db) in enumerate(grads):
        layer = mlp.layers[i]
        for j, (param, g) in enumerate(((layer.weights, dw), (layer.bias, db))):
            m, v = state.m[i][j], state.v[i][j]
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * g * g
            param -= lr * (m / c1) / (np.sqrt(v / c2) + ADAM_EPS)
    return mlp


def clip_weights(mlp: Mlp, c: float) -> Mlp:
    """Clamp every weight and bias entry to [-c, c] in place."""
    if c <= 0:
        raise ValueError("clip value must be positive")
    for p in mlp.parameters():
        np.clip(p, -c, c, out=p)
    return mlp


def gaussian_matrix(rows: int, cols: int, mean: float, std: float, rng: np.random.Generator) -> np.ndarray:
    if std < 0:
        raise ValueError("std must be non-negative")
    return mean + std * rng.standard_normal((int(rows), int(cols)))
