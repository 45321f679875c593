"""Oracles shared by the unit and acceptance tests."""
import itertools

import numpy as np

from da3d.nn import Layer, Mlp, backward, forward


def random_mlp(rng, max_layers=3, max_units=8, activations=("selu", "sigmoid", "linear")):
    """Small MLP with random widths and a random activation per layer, dropout off."""
    n_layers = int(rng.integers(1, max_layers + 1))
    dims = [int(d) for d in rng.integers(1, max_units + 1, n_layers + 1)]
    layers = []
    for i in range(n_layers):
        w = rng.standard_normal((dims[i], dims[i + 1])) / np.sqrt(dims[i])
        b = 0.1 * rng.standard_normal(dims[i + 1])
        layers.append(Layer(w, b, str(rng.choice(activations)), 0.0))
    return Mlp(layers)


def _loss(mlp, x, weights):
    return float(np.sum(weights * forward(mlp, x, "infer").output))


def finite_difference(mlp, x, weights, h=1e-6):
    """Central differences of sum(weights * mlp(x)) for every weight, bias and input."""
    out = []
    for layer in mlp.layers:
        grads = []
        for param in (layer.weights, layer.bias):
            g = np.zeros_like(param)
            for idx in itertools.product(*map(range, param.shape)):
                keep = param[idx]
                param[idx] = keep + h
                up = _loss(mlp, x, weights)
                param[idx] = keep - h
                down = _loss(mlp, x, weights)
                param[idx] = keep
                g[idx] = (up - down) / (2 * h)
            grads.append(g)
        out.append(grads)
    gx = np.zeros_like(x)
    for idx in itertools.product(*map(range, x.shape)):
        keep = x[idx]
        x[idx] = keep + h
        up = _loss(mlp, x, weights)
        x[idx] = keep - h
        down = _loss(mlp, x, weights)
        x[idx] = keep
        gx[idx] = (up - down) / (2 * h)
    return out, gx


def _rel(a, b):
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)))
    return 0.0 if scale == 0 else float(np.max(np.abs(a - b)) / scale)


def gradient_check(mlp, x, weights, h=1e-6):
    """Largest relative error between backward() and finite differences.

    Errors are measured per tensor and normalised by that tensor's largest
    entry, so entries that are zero up to round-off do not dominate.
    """
    trace = forward(mlp, x, "infer")
    grads = backward(mlp, trace, weights)
    numeric, gx = finite_difference(mlp, x, weights, h)
    errs = [_rel(grads.inputs, gx)]
    for i, (gw, gb) in enumerate(numeric):
        errs += [_rel(grads.weights[i], gw), _rel(grads.biases[i], gb)]
    return max(errs)


def brute_force_auc(scores, labels):
    """O(n^2) pairwise AUC with half credit for ties."""
    scores, labels = np.asarray(scores, float), np.asarray(labels)
    pos, neg = scores[labels == 1], scores[labels == 0]
    diff = pos[:, None] - neg[None, :]
    return float(((diff > 0).sum() + 0.5 * (diff == 0).sum()) / diff.size)
