"""Minimal dense feed-forward network with reverse-mode gradients.

The final layer is always the identity-activated decision layer holding the
weight matrix whose columns are the class kernels; it has no bias. Hidden
layers are relu with bias. Networks are immutable: a training step builds a
new parameter list rather than mutating in place.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericError, ShapeError
from .rng import STREAM_INIT, generator

ACTIVATIONS = ("relu", "identity")

# Final-layer initialization styles. "uniform_scaled" is the default
# [-1/sqrt(in), 1/sqrt(in)] used by all hidden layers; "semi_orthogonal"
# QR-orthonormalizes a uniform [-1, 1] draw; "uniform_unit" keeps the raw
# uniform [-1, 1] draw (the deliberately non-orthogonal control).
FINAL_INITS = ("uniform_scaled", "semi_orthogonal", "uniform_unit")


@dataclass(frozen=True)
class LayerSpec:
    in_dim: int
    out_dim: int
    activation: str

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise ConfigError(f"layer dims must be positive, got {self}")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")


@dataclass(frozen=True)
class NetworkSpec:
    layers: tuple

    def __post_init__(self):
        if not self.layers:
            raise ConfigError("network needs at least one layer")
        for a, b in zip(self.layers, self.layers[1:]):
            if a.out_dim != b.in_dim:
                raise ConfigError(
                    f"layer dims do not chain: {a.out_dim} -> {b.in_dim}"
                )
        if self.layers[-1].activation != "identity":
            raise ConfigError("final (decision) layer must be identity-activated")

    @property
    def input_dim(self):
        return self.layers[0].in_dim

    @property
    def latent_dim(self):
        return self.layers[-1].in_dim

    @property
    def n_classes(self):
        return self.layers[-1].out_dim


def mlp_spec(dims):
    """Spec for a relu MLP: ``dims`` lists layer widths input-first.

    All layers but the last are relu; the last is the identity decision layer.
    """
    dims = [int(d) for d in dims]
    if len(dims) < 2:
        raise ConfigError(f"need at least input and output widths, got {dims}")
    layers = [
        LayerSpec(a, b, "relu") for a, b in zip(dims[:-2], dims[1:-1])
    ]
    layers.append(LayerSpec(dims[-2], dims[-1], "identity"))
    return NetworkSpec(layers=tuple(layers))


class Network:
    """Parameter set for a :class:`NetworkSpec`.

    ``weights[k]`` is (in_dim x out_dim) for layer k; ``biases[k]`` is a
    vector for hidden layers and ``None`` for the final layer.
    """

    def __init__(self, spec, weights, biases):
        if len(weights) != len(spec.layers) or len(biases) != len(spec.layers):
            raise ShapeError("parameter count does not match layer count")
        for k, (layer, w) in enumerate(zip(spec.layers, weights)):
            if w.shape != (layer.in_dim, layer.out_dim):
                raise ShapeError(
                    f"layer {k}: weight shape {w.shape} != "
                    f"({layer.in_dim}, {layer.out_dim})"
                )
        if biases[-1] is not None:
            raise ShapeError("final layer carries no bias")
        for k, (layer, b) in enumerate(zip(spec.layers[:-1], biases[:-1])):
            if b is None or b.shape != (layer.out_dim,):
                raise ShapeError(f"layer {k}: bad bias for width {layer.out_dim}")
        self.spec = spec
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [
            None if b is None else np.asarray(b, dtype=np.float64) for b in biases
        ]

    @property
    def final_weight(self):
        return self.weights[-1]

    def parameters(self):
        """Flat parameter list: [W0, b0, W1, b1, ..., W_last]."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            if b is not None:
                out.append(b)
        return out

    def parameter_names(self):
        out = []
        for k, b in enumerate(self.biases):
            out.append(f"layer{k}.weight")
            if b is not None:
                out.append(f"layer{k}.bias")
        return out

    def parameter_kinds(self):
        """"weight" or "bias" per entry of :meth:`parameters`."""
        out = []
        for b in self.biases:
            out.append("weight")
            if b is not None:
                out.append("bias")
        return out

    def replace_parameters(self, params):
        """New Network with the same spec and the given flat parameter list."""
        weights, biases = [], []
        it = iter(params)
        for b in self.biases:
            weights.append(next(it))
            biases.append(None if b is None else next(it))
        return Network(self.spec, weights, biases)


def init_network(spec, seed, final_init="uniform_scaled"):
    """Seeded parameter initialization.

    Hidden weights and the default final weight are uniform in
    [-1/sqrt(in_dim), +1/sqrt(in_dim)]; hidden biases start at zero. See
    ``FINAL_INITS`` for the final-layer options.
    """
    if final_init not in FINAL_INITS:
        raise ConfigError(f"unknown final_init {final_init!r}")
    weights, biases = [], []
    n_layers = len(spec.layers)
    for k, layer in enumerate(spec.layers):
        rand = generator(seed, STREAM_INIT, k)
        is_final = k == n_layers - 1
        if is_final and final_init == "semi_orthogonal":
            from .linalg import qr_decompose

            w = qr_decompose(
                rand.uniform(-1.0, 1.0, size=(layer.in_dim, layer.out_dim))
            ).q
        elif is_final and final_init == "uniform_unit":
            w = rand.uniform(-1.0, 1.0, size=(layer.in_dim, layer.out_dim))
        else:
            bound = 1.0 / np.sqrt(layer.in_dim)
            w = rand.uniform(-bound, bound, size=(layer.in_dim, layer.out_dim))
        weights.append(w)
        biases.append(None if is_final else np.zeros(layer.out_dim))
    return Network(spec, weights, biases)


@dataclass(frozen=True)
class ForwardTrace:
    """Everything the backward pass needs: the input batch, per-layer
    pre-activations, and per-layer activations (post-nonlinearity)."""

    inputs: np.ndarray
    pre_activations: tuple
    activations: tuple

    @property
    def latent(self):
        """Activation feeding the decision layer (batch x latent_dim)."""
        if len(self.activations) == 1:
            return self.inputs
        return self.activations[-2]

    @property
    def logits(self):
        return self.activations[-1]


def forward(net, batch):
    """Run the network on a batch (rows are samples)."""
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2:
        raise ShapeError(f"forward: batch must be 2-D, got ndim={batch.ndim}")
    if batch.shape[1] != net.spec.input_dim:
        raise ShapeError(
            f"forward: batch width {batch.shape[1]} != "
            f"input dim {net.spec.input_dim}"
        )
    a = batch
    pres, acts = [], []
    for layer, w, b in zip(net.spec.layers, net.weights, net.biases):
        z = a @ w
        if b is not None:
            z = z + b
        a = np.maximum(z, 0.0) if layer.activation == "relu" else z
        pres.append(z)
        acts.append(a)
    return ForwardTrace(
        inputs=batch, pre_activations=tuple(pres), activations=tuple(acts)
    )


def decide_class(latent, w):
    """Index of the decision column with the largest inner product against
    ``latent``; ties resolve to the lowest index."""
    latent = np.asarray(latent, dtype=np.float64).reshape(-1)
    if latent.shape[0] != w.shape[0]:
        raise ShapeError(
            f"decide_class: latent length {latent.shape[0]} != rows {w.shape[0]}"
        )
    return int(np.argmax(latent @ w))


def decide_classes(logits):
    """Row-wise argmax over logits, ties to the lowest index."""
    return np.argmax(logits, axis=1)


@dataclass(frozen=True)
class GradientSet:
    """Per-parameter gradients, aligned with :meth:`Network.parameters`."""

    arrays: tuple

    def __post_init__(self):
        for a in self.arrays:
            if not np.all(np.isfinite(a)):
                raise NumericError("gradient contains non-finite entries")

    def scaled(self, factor):
        return GradientSet(arrays=tuple(a * factor for a in self.arrays))

    def add(self, other):
        return GradientSet(
            arrays=tuple(a + b for a, b in zip(self.arrays, other.arrays))
        )


def backward(net, trace, logit_grad, latent_grad_extra):
    """Reverse-mode gradients for a scalar loss with the given seeds.

    ``logit_grad`` is dLoss/dlogits (batch x n); ``latent_grad_extra`` is an
    additional dLoss/dlatent term (batch x m) injected at the decision-layer
    input, zero when unused. Any loss term that differentiates directly with
    respect to the final weight (rather than through the logits) is not
    included here and must be summed into the result by the caller.
    """
    logit_grad = np.asarray(logit_grad, dtype=np.float64)
    latent_grad_extra = np.asarray(latent_grad_extra, dtype=np.float64)
    batch = trace.inputs
    n_layers = len(net.spec.layers)
    if logit_grad.shape != trace.logits.shape:
        raise ShapeError(
            f"backward: logit_grad shape {logit_grad.shape} != "
            f"logits shape {trace.logits.shape}"
        )
    if latent_grad_extra.shape != (batch.shape[0], net.spec.latent_dim):
        raise ShapeError(
            f"backward: latent_grad_extra shape {latent_grad_extra.shape} != "
            f"({batch.shape[0]}, {net.spec.latent_dim})"
        )

    grad_w = [None] * n_layers
    grad_b = [None] * n_layers

    # Decision layer: identity activation, no bias.
    latent = trace.latent
    grad_w[-1] = latent.T @ logit_grad
    delta = logit_grad @ net.weights[-1].T + latent_grad_extra

    for k in range(n_layers - 2, -1, -1):
        layer = net.spec.layers[k]
        if layer.activation == "relu":
            delta = delta * (trace.pre_activations[k] > 0.0)
        below = batch if k == 0 else trace.activations[k - 1]
        grad_w[k] = below.T @ delta
        grad_b[k] = delta.sum(axis=0)
        delta = delta @ net.weights[k].T

    arrays = []
    for k in range(n_layers):
        arrays.append(grad_w[k])
        if grad_b[k] is not None:
            arrays.append(grad_b[k])
    return GradientSet(arrays=tuple(arrays))
