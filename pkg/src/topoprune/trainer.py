"""A small dense network trained with plain SGD, with weight masks.

Weights are float64 and stored as ``(fan_in, fan_out)`` matrices, so each
one is directly a layer graph with inputs on the rows.
"""

import json
import os
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.datasets import make_moons
from sklearn.utils.multiclass import unique_labels
from sklearn.utils.validation import check_is_fitted, check_X_y, validate_data

from .npyio import read_npy_array, write_npy

__all__ = [
    "DenseNet",
    "TrainConfig",
    "TrainingDivergedError",
    "init_dense_net",
    "forward",
    "backward",
    "cross_entropy",
    "train",
    "make_desk_dataset",
    "save_checkpoint",
    "load_checkpoint",
    "DeskMLPClassifier",
]

_ACTIVATIONS = ("relu", "tanh")


class TrainingDivergedError(FloatingPointError):
    def __init__(self, iteration, loss):
        self.iteration = iteration
        self.loss = loss
        super().__init__(f"non-finite loss {loss} at iteration {iteration}")


@dataclass
class DenseNet:
    """Fully connected network: hidden activation, softmax output.

    ``masks[k]`` is None or a 0/1 array shaped like ``weights[k]``; masked
    entries are kept at exactly zero.
    """

    weights: list
    biases: list
    activation: str = "relu"
    masks: list = None

    def __post_init__(self):
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"activation must be one of {_ACTIVATIONS}, got {self.activation!r}")
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("need one bias vector per weight matrix and at least one layer")
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.ndim != 2 or b.shape != (W.shape[1],):
                raise ValueError(f"layer {k}: weight {W.shape} and bias {b.shape} disagree")
            if k and self.weights[k - 1].shape[1] != W.shape[0]:
                raise ValueError(
                    f"layer {k} expects {W.shape[0]} inputs, previous layer gives "
                    f"{self.weights[k - 1].shape[1]}"
                )
        if self.masks is None:
            self.masks = [None] * len(self.weights)

    @property
    def sizes(self):
        return [self.weights[0].shape[0]] + [W.shape[1] for W in self.weights]

    def set_masks(self, masks):
        if masks is None:
            masks = [None] * len(self.weights)
        if len(masks) != len(self.weights):
            raise ValueError("one mask (or None) per layer required")
        self.masks = [None if M is None else np.asarray(M, dtype=np.float64) for M in masks]
        self.apply_masks()

    def apply_masks(self):
        for W, M in zip(self.weights, self.masks):
            if M is not None:
                W *= M

    def copy(self):
        return DenseNet(
            [W.copy() for W in self.weights],
            [b.copy() for b in self.biases],
            self.activation,
            [None if M is None else M.copy() for M in self.masks],
        )


def init_dense_net(sizes, activation="relu", seed=0):
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return DenseNet(weights, biases, activation)


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def forward(net, X):
    """Class probabilities and the per-layer cache needed by :func:`backward`."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != net.weights[0].shape[0]:
        raise ValueError(f"expected input of width {net.weights[0].shape[0]}, got shape {X.shape}")
    activations = [X]
    pre = []
    h = X
    last = len(net.weights) - 1
    for k, (W, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ W + b
        pre.append(z)
        if k == last:
            h = _softmax(z)
        elif net.activation == "relu":
            h = np.maximum(z, 0.0)
        else:
            h = np.tanh(z)
        activations.append(h)
    return h, {"activations": activations, "pre": pre}


def cross_entropy(probs, y):
    picked = probs[np.arange(len(y)), y]
    return float(-np.mean(np.log(np.clip(picked, 1e-300, None))))


def backward(net, cache, y):
    """Gradients of the mean cross-entropy w.r.t. weights and biases.

    Gradients of masked entries are zeroed.
    """
    acts, pre = cache["activations"], cache["pre"]
    y = np.asarray(y)
    batch = len(y)
    delta = acts[-1].copy()
    delta[np.arange(batch), y] -= 1.0
    delta /= batch
    grads_W = [None] * len(net.weights)
    grads_b = [None] * len(net.weights)
    for k in range(len(net.weights) - 1, -1, -1):
        grads_W[k] = acts[k].T @ delta
        grads_b[k] = delta.sum(axis=0)
        if net.masks[k] is not None:
            grads_W[k] *= net.masks[k]
        if k:
            delta = delta @ net.weights[k].T
            if net.activation == "relu":
                delta *= pre[k - 1] > 0
            else:
                delta *= 1.0 - acts[k] ** 2
    return grads_W, grads_b


@dataclass
class TrainConfig:
    seed: int = 0
    learning_rate: float = 0.1
    batch_size: int = 32
    iterations: int = 500

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.learning_rate < 0:
            raise ValueError("learning rate must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")


def train(net, X, y, config, masks=None, callback=None):
    """Minibatch SGD on the mean cross-entropy, in place.

    Masks (if given) replace the network's current masks and are
    re-applied after every update.

    Returns
    -------
    net : DenseNet
    losses : ndarray of shape (iterations,)
        Minibatch loss at every iteration, before that iteration's update.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if masks is not None:
        net.set_masks(masks)
    else:
        net.apply_masks()
    rng = np.random.default_rng(config.seed)
    n = len(X)
    batch = min(config.batch_size, n)
    lr = config.learning_rate
    losses = np.empty(config.iterations)
    for it in range(config.iterations):
        idx = rng.choice(n, size=batch, replace=False)
        probs, cache = forward(net, X[idx])
        loss = cross_entropy(probs, y[idx])
        if not np.isfinite(loss):
            raise TrainingDivergedError(it, loss)
        losses[it] = loss
        gW, gb = backward(net, cache, y[idx])
        for W, b, dW, db in zip(net.weights, net.biases, gW, gb):
            W -= lr * dW
            b -= lr * db
        net.apply_masks()
        if callback is not None:
            callback(it, net)
    return net, losses


def make_desk_dataset(n_samples=600, n_features=20, noise=0.1, kind="moons", random_state=0):
    """Two-class 2-D data linearly lifted into ``n_features`` dimensions.

    ``kind="moons"`` gives two interleaved half-circles; ``kind="linear"``
    two Gaussian blobs separated along one direction. Features are
    standardized.
    """
    rng = np.random.default_rng(random_state)
    if kind == "moons":
        X2, y = make_moons(n_samples=n_samples, noise=noise, random_state=random_state)
    elif kind == "linear":
        y = rng.integers(0, 2, size=n_samples)
        X2 = rng.normal(scale=0.5, size=(n_samples, 2))
        X2[:, 0] += np.where(y == 1, 1.5, -1.5)
    else:
        raise ValueError(f"unknown dataset kind {kind!r}")
    lift = rng.normal(size=(2, n_features))
    X = X2 @ lift + noise * rng.normal(size=(n_samples, n_features))
    X = (X - X.mean(axis=0)) / X.std(axis=0)
    return X, np.asarray(y, dtype=np.int64)


def save_checkpoint(net, directory, seed=None):
    """Write one NPY file per weight/bias plus a JSON manifest."""
    os.makedirs(directory, exist_ok=True)
    layers = []
    for k, (W, b) in enumerate(zip(net.weights, net.biases)):
        entry = {"weight": f"layer{k}_weight.npy", "bias": f"layer{k}_bias.npy",
                 "shape": list(W.shape)}
        write_npy(os.path.join(directory, entry["weight"]), W)
        write_npy(os.path.join(directory, entry["bias"]), b.reshape(1, -1))
        if net.masks[k] is not None:
            entry["mask"] = f"layer{k}_mask.npy"
            write_npy(os.path.join(directory, entry["mask"]), net.masks[k].astype(np.uint8))
        layers.append(entry)
    manifest = {"layers": layers, "activation": net.activation, "seed": seed}
    with open(os.path.join(directory, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)


def load_checkpoint(directory):
    with open(os.path.join(directory, "manifest.json")) as fh:
        manifest = json.load(fh)
    weights, biases, masks = [], [], []
    for entry in manifest["layers"]:
        weights.append(read_npy_array(os.path.join(directory, entry["weight"])).astype(np.float64))
        biases.append(read_npy_array(os.path.join(directory, entry["bias"])).astype(np.float64).ravel())
        mask = entry.get("mask")
        masks.append(None if mask is None else
                     read_npy_array(os.path.join(directory, mask)).astype(np.float64))
    return DenseNet(weights, biases, manifest["activation"], masks)


class DeskMLPClassifier(ClassifierMixin, BaseEstimator):
    """Dense softmax classifier trained with minibatch SGD.

    Parameters
    ----------
    hidden_layer_sizes : tuple of int, default=(64, 32, 16)
    activation : {"relu", "tanh"}, default="relu"
    learning_rate : float, default=0.1
    batch_size : int, default=32
    max_iter : int, default=500
        SGD iterations (minibatches), not epochs.
    random_state : int, default=0
        Seeds both initialization and minibatch sampling.

    Attributes
    ----------
    net_ : DenseNet
    coefs_ : list of ndarray
        Weight matrices, shape ``(fan_in, fan_out)``.
    intercepts_ : list of ndarray
    loss_curve_ : ndarray
    classes_ : ndarray
    """

    def __init__(self, hidden_layer_sizes=(64, 32, 16), activation="relu",
                 learning_rate=0.1, batch_size=32, max_iter=500, random_state=0):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.activation = activation
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y, masks=None):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.n_features_in_ = X.shape[1]
        self.classes_ = unique_labels(y)
        encoded = np.searchsorted(self.classes_, y)
        sizes = [X.shape[1], *self.hidden_layer_sizes, len(self.classes_)]
        self.net_ = init_dense_net(sizes, self.activation, seed=self.random_state)
        config = TrainConfig(self.random_state, self.learning_rate, self.batch_size, self.max_iter)
        _, self.loss_curve_ = train(self.net_, X, encoded, config, masks=masks)
        return self

    @property
    def coefs_(self):
        return self.net_.weights

    @property
    def intercepts_(self):
        return self.net_.biases

    def predict_proba(self, X):
        check_is_fitted(self, "net_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return forward(self.net_, X)[0]

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]
