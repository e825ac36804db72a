"""Fully connected inverse model: ReLU hidden layers, sigmoid output, Adam.

Two forward paths exist on purpose. ``forward`` goes through the row kernels in
``_kernels`` and is bitwise batch-independent, which the sampling pipeline
relies on. Training uses BLAS (``_trace``), which is much faster but whose
per-row rounding depends on the batch shape.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .rng import make_rng

CHECKPOINT_FORMAT = "emssl-mlp/1"

# keeps sigmoid outputs strictly inside (0, 1)
_SIG_LO = 2.0**-53
_SIG_HI = 1.0 - 2.0**-53


class ShapeError(ValueError):
    pass


@dataclass
class Mlp:
    layer_dims: list
    weights: list
    biases: list
    seed: int = None

    @property
    def n_params(self):
        return sum(W.size + b.size for W, b in zip(self.weights, self.biases))

    def copy(self):
        return Mlp(list(self.layer_dims), [W.copy() for W in self.weights],
                   [b.copy() for b in self.biases], self.seed)


@dataclass
class Gradients:
    weights: list
    biases: list


@dataclass
class AdamState:
    lr: float
    m_w: list
    m_b: list
    v_w: list
    v_b: list
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def copy(self):
        return AdamState(self.lr, [a.copy() for a in self.m_w], [a.copy() for a in self.m_b],
                         [a.copy() for a in self.v_w], [a.copy() for a in self.v_b],
                         self.t, self.beta1, self.beta2, self.eps)


def init_mlp(layer_dims, seed):
    """He-uniform weights on ReLU layers, Xavier-uniform on the sigmoid layer, zero biases."""
    dims = [int(d) for d in layer_dims]
    if len(dims) < 2 or min(dims) < 1:
        raise ShapeError(f"need at least an input and an output layer, got {layer_dims}")
    rng = make_rng(seed, "init")
    weights, biases = [], []
    for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        if i < len(dims) - 2:
            bound = np.sqrt(6.0 / fan_in)
        else:
            bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return Mlp(dims, weights, biases, seed)


def adam_init(mlp, lr=0.0015):
    return AdamState(
        lr=lr,
        m_w=[np.zeros_like(W) for W in mlp.weights],
        m_b=[np.zeros_like(b) for b in mlp.biases],
        v_w=[np.zeros_like(W) for W in mlp.weights],
        v_b=[np.zeros_like(b) for b in mlp.biases],
    )


def sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return np.clip(out, _SIG_LO, _SIG_HI)


def _check_input(mlp, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != mlp.layer_dims[0] or X.shape[0] < 1:
        raise ShapeError(f"expected (batch, {mlp.layer_dims[0]}) input, got {X.shape}")
    return X


def forward(mlp, X):
    """Network output in (0, 1); row i depends on row i of ``X`` only, bitwise."""
    h = _check_input(mlp, X)
    last = len(mlp.weights) - 1
    for i, (W, b) in enumerate(zip(mlp.weights, mlp.biases)):
        h = _kernels.dense(h, W, b, i < last)
    return sigmoid(h)


def _trace(mlp, X):
    """BLAS forward pass keeping every layer's activation for backprop."""
    acts = [X]
    h = X
    last = len(mlp.weights) - 1
    for i, (W, b) in enumerate(zip(mlp.weights, mlp.biases)):
        z = h @ W + b
        h = np.maximum(z, 0.0) if i < last else sigmoid(z)
        acts.append(h)
    return acts


def _backprop(mlp, acts, dL_dY):
    out = acts[-1]
    delta = dL_dY * out * (1.0 - out)
    gw = [None] * len(mlp.weights)
    gb = [None] * len(mlp.weights)
    for i in range(len(mlp.weights) - 1, -1, -1):
        gw[i] = acts[i].T @ delta
        gb[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ mlp.weights[i].T) * (acts[i] > 0.0)
    return Gradients(gw, gb)


def backward(mlp, X, dL_dY):
    """Parameter gradients for an upstream gradient on the network output."""
    X = _check_input(mlp, X)
    dL_dY = np.asarray(dL_dY, dtype=np.float64)
    if dL_dY.shape != (X.shape[0], mlp.layer_dims[-1]):
        raise ShapeError(f"upstream gradient shape {dL_dY.shape} does not match output")
    return _backprop(mlp, _trace(mlp, X), dL_dY)


def mse_loss_and_grad(Y_pred, Y_target):
    Y_pred = np.asarray(Y_pred, dtype=np.float64)
    Y_target = np.asarray(Y_target, dtype=np.float64)
    if Y_pred.shape != Y_target.shape:
        raise ShapeError(f"prediction {Y_pred.shape} vs target {Y_target.shape}")
    diff = Y_pred - Y_target
    return float(np.mean(diff * diff)), 2.0 * diff / diff.size


def adam_step(mlp, state, grads):
    """Bias-corrected Adam update, in place. Returns ``(mlp, state)``."""
    for params, gs in ((mlp.weights, grads.weights), (mlp.biases, grads.biases)):
        for p, g in zip(params, gs):
            if p.shape != np.shape(g):
                raise ShapeError(f"gradient shape {np.shape(g)} vs parameter {p.shape}")
    state.t += 1
    for params, gs, ms, vs in ((mlp.weights, grads.weights, state.m_w, state.v_w),
                               (mlp.biases, grads.biases, state.m_b, state.v_b)):
        for p, g, m, v in zip(params, gs, ms, vs):
            _kernels.adam_update(p, np.ascontiguousarray(g, dtype=np.float64), m, v,
                                 state.lr, state.beta1, state.beta2, state.eps, state.t)
    return mlp, state


def train_step(mlp, state, X, Y):
    """One MSE + Adam step on a minibatch; returns the pre-update loss."""
    acts = _trace(mlp, X)
    loss, dY = mse_loss_and_grad(acts[-1], Y)
    adam_step(mlp, state, _backprop(mlp, acts, dY))
    return loss


def n_batches(n, batch_size):
    return -(-n // batch_size)


def fit_pairs(mlp, state, X, Y, epochs, batch_size, rng):
    """Shuffled minibatch regression of ``Y`` on ``X``; returns mean loss per epoch."""
    n = len(X)
    losses = []
    for _ in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            total += train_step(mlp, state, X[idx], Y[idx])
        losses.append(total / n_batches(n, batch_size))
    return losses


# ---------------------------------------------------------------- checkpoints


def save_checkpoint(path, mlp, normalizers=None, meta=None):
    doc = {
        "format": CHECKPOINT_FORMAT,
        "layer_dims": mlp.layer_dims,
        "seed": mlp.seed,
        "weights": [W.tolist() for W in mlp.weights],
        "biases": [b.tolist() for b in mlp.biases],
        "normalizers": normalizers.to_dict() if normalizers is not None else None,
        "meta": meta or {},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_checkpoint(path):
    """Returns ``(mlp, normalizers, meta)``; normalizers may be None."""
    from .datagen import NormalizerPair

    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"corrupt checkpoint {path}: {exc}") from None
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"unsupported checkpoint format {doc.get('format')!r}")
    dims = doc["layer_dims"]
    weights = [np.array(W, dtype=np.float64).reshape(a, b)
               for W, a, b in zip(doc["weights"], dims[:-1], dims[1:])]
    biases = [np.array(b, dtype=np.float64).reshape(-1) for b in doc["biases"]]
    if len(weights) != len(dims) - 1 or any(b.size != d for b, d in zip(biases, dims[1:])):
        raise ValueError(f"checkpoint {path} arrays do not match layer_dims {dims}")
    norms = doc.get("normalizers")
    return (Mlp(dims, weights, biases, doc.get("seed")),
            NormalizerPair.from_dict(norms) if norms else None,
            doc.get("meta", {}))
