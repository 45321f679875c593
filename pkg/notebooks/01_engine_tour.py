"""
Engine tour
===========

The dense-network engine under everything else: forward passes that keep
their activations, hand-written backprop, Adam and weight clipping.
"""

# %%
import numpy as np

from da3d.nn import Layer, Mlp, adam_step, backward, clip_weights, forward, hidden_activations, make_mlp

rng = np.random.default_rng(0)

# %%
# a 3 -> 4 -> 2 -> 1 net; the trace keeps every layer's output
mlp = make_mlp([3, 4, 2, 1], rng, dropout=0.1)
trace = forward(mlp, rng.random((5, 3)), "infer")
print("output", trace.output.shape)
print("hidden activations", hidden_activations(trace).shape)  # 4 + 2 columns

# %%
# SELU at 1 is the SELU scale constant
selu_net = Mlp([Layer(np.array([[1.0]]), np.zeros(1), "selu", 0.0)])
print(forward(selu_net, [[1.0]]).output[0, 0])

# %%
# backward against central differences on one weight
x = rng.random((4, 3))
r = rng.standard_normal((4, 1))
grads = backward(mlp, forward(mlp, x), r)

h = 1e-6
w = mlp.layers[0].weights
w[0, 0] += h
up = np.sum(r * forward(mlp, x).output)
w[0, 0] -= 2 * h
down = np.sum(r * forward(mlp, x).output)
w[0, 0] += h
print("analytic", grads.weights[0][0, 0], "numeric", (up - down) / (2 * h))

# %%
# first Adam step moves a parameter by about lr against the gradient sign
scalar = Mlp([Layer(np.zeros((1, 1)), np.zeros(1), "linear", 0.0)])
adam_step(scalar, backward(scalar, forward(scalar, [[1.0]]), [[1.0]]), lr=1e-4)
print("w after one step", scalar.layers[0].weights[0, 0])

# %%
# clipping is what keeps the critics Lipschitz
clip_weights(mlp, 0.01)
print("max |param| after clipping", mlp.max_abs_parameter())
