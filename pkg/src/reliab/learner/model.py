"""Small ReLU MLP with softmax cross-entropy and hand-written backprop."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, TrainingFault


@dataclass
class ModelState:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = "relu/softmax"
    optimizer_slots: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise DomainError("need one bias per weight matrix and at least one layer")
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.ndim != 2 or b.shape != (W.shape[1],):
                raise DomainError(f"layer {k}: bias shape {b.shape} does not match {W.shape}")
            if k and self.weights[k - 1].shape[1] != W.shape[0]:
                raise DomainError(f"layer {k}: input width {W.shape[0]} does not chain")

    @property
    def n_inputs(self) -> int:
        return self.weights[0].shape[0]

    @property
    def n_classes(self) -> int:
        return self.weights[-1].shape[1]

    def params(self) -> list[np.ndarray]:
        """Flat parameter list [W0, b0, W1, b1, ...] (views, not copies)."""
        out = []
        for W, b in zip(self.weights, self.biases):
            out += [W, b]
        return out

    def flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params()])

    def n_params(self) -> int:
        return sum(p.size for p in self.params())

    def check_finite(self, step: int | None = None) -> None:
        for p in self.params():
            if not np.all(np.isfinite(p)):
                raise TrainingFault("non-finite parameter", step)


def init_mlp(layer_sizes: list[int], seed: int = 0) -> ModelState:
    """He-normal weights, zero biases."""
    if len(layer_sizes) < 2:
        raise DomainError("need at least input and output sizes")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return ModelState(weights, biases)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def forward(model: ModelState, x: np.ndarray):
    """Returns (logits, probabilities, cache)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != model.n_inputs:
        raise DomainError(f"input width {x.shape[1]} != model width {model.n_inputs}")
    acts = [x]
    pre = []
    h = x
    last = len(model.weights) - 1
    for k, (W, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ W + b
        pre.append(z)
        h = z if k == last else np.maximum(z, 0.0)
        if k != last:
            acts.append(h)
    logits = h
    probs = softmax(logits)
    return logits, probs, {"acts": acts, "pre": pre, "probs": probs}


def _check_labels(labels, n: int, k: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise DomainError(f"expected {n} labels, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise DomainError(f"label out of range [0, {k})")
    return labels.astype(np.int64)


def cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    n, k = probs.shape
    labels = _check_labels(labels, n, k)
    p = probs[np.arange(n), labels]
    return float(-np.mean(np.log(np.maximum(p, np.finfo(np.float64).tiny))))


def backward(model: ModelState, cache: dict, labels) -> tuple[float, list[np.ndarray]]:
    """Mean softmax cross-entropy and its gradient in ``model.params()`` order."""
    probs = cache["probs"]
    n, k = probs.shape
    labels = _check_labels(labels, n, k)
    loss = cross_entropy(probs, labels)
    dz = probs.copy()
    dz[np.arange(n), labels] -= 1.0
    dz /= n
    grads_w, grads_b = [], []
    for layer in range(len(model.weights) - 1, -1, -1):
        a_in = cache["acts"][layer]
        grads_w.append(a_in.T @ dz)
        grads_b.append(dz.sum(axis=0))
        if layer:
            da = dz @ model.weights[layer].T
            dz = da * (cache["pre"][layer - 1] > 0)
    grads_w.reverse()
    grads_b.reverse()
    out = []
    for gw, gb in zip(grads_w, grads_b):
        out += [gw, gb]
    return loss, out


def predict(model: ModelState, x: np.ndarray) -> np.ndarray:
    return forward(model, x)[1]
