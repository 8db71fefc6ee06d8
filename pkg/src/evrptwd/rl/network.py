"""Small fully connected value network with a hand-rolled Adam optimizer."""
from __future__ import annotations

import json

import numpy as np

LAYER_SIZES = (5, 12, 6, 3, 1)
CHECKPOINT_VERSION = 1


class ValueNetwork:
    """Maps a 5-feature pair state to a scalar value.

    Hidden layers use ReLU, the output is linear.  ``weights[k]`` has shape
    ``(sizes[k+1], sizes[k])`` so a layer computes ``W @ x + b``.
    """

    def __init__(self, sizes=LAYER_SIZES, learning_rate: float = 1e-3, seed=0,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        sizes = tuple(int(s) for s in sizes)
        if len(sizes) < 2 or sizes[-1] != 1 or min(sizes) < 1:
            raise ValueError(f"bad layer sizes {sizes}")
        self.sizes = sizes
        self.learning_rate = learning_rate
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.seed = seed
        # uniform in +-1/sqrt(fan_in) for weights and biases, as torch.nn.Linear does
        rng = np.random.default_rng(seed)
        self.weights, self.biases = [], []
        for n_in, n_out in zip(sizes, sizes[1:]):
            bound = 1.0 / np.sqrt(n_in)
            self.weights.append(rng.uniform(-bound, bound, size=(n_out, n_in)))
            self.biases.append(rng.uniform(-bound, bound, size=n_out))
        self._reset_moments()

    def _reset_moments(self):
        self.m = [np.zeros_like(p) for p in self.params()]
        self.v = [np.zeros_like(p) for p in self.params()]
        self.step = 0

    def params(self) -> list:
        """Parameters in a fixed order: W0, b0, W1, b1, ..."""
        out = []
        for W, b in zip(self.weights, self.biases):
            out += [W, b]
        return out

    def forward(self, x) -> np.ndarray:
        """Values for a batch ``(n, 5)``; a single state gives shape ``(1,)``."""
        h = np.atleast_2d(np.asarray(x, dtype=float))
        last = len(self.weights) - 1
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ W.T + b
            if k < last:
                h = np.maximum(h, 0.0)
        return h[:, 0]

    def loss_and_grads(self, x, target):
        """Mean squared error and its gradient for every parameter."""
        h = np.atleast_2d(np.asarray(x, dtype=float))
        target = np.asarray(target, dtype=float).reshape(-1)
        n = h.shape[0]
        acts = [h]
        pre = []
        last = len(self.weights) - 1
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = acts[-1] @ W.T + b
            pre.append(z)
            acts.append(np.maximum(z, 0.0) if k < last else z)
        err = acts[-1][:, 0] - target
        loss = float(np.mean(err ** 2))
        delta = (2.0 / n) * err[:, None]
        grads = [None] * (2 * len(self.weights))
        for k in range(last, -1, -1):
            grads[2 * k] = delta.T @ acts[k]
            grads[2 * k + 1] = delta.sum(axis=0)
            if k:
                delta = (delta @ self.weights[k]) * (pre[k - 1] > 0)
        return loss, grads

    def train_step(self, x, target) -> float:
        """One Adam update on the batch; returns the loss before the update."""
        if len(np.atleast_2d(x)) == 0:
            raise ValueError("empty batch")
        loss, grads = self.loss_and_grads(x, target)
        self.step += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.step
        c2 = 1.0 - b2 ** self.step
        for p, g, m, v in zip(self.params(), grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            p -= self.learning_rate * (m / c1) / (np.sqrt(v / c2) + self.eps)
        return loss

    def copy(self) -> "ValueNetwork":
        return ValueNetwork.from_dict(self.to_dict())

    def to_dict(self) -> dict:
        return {
            "format_version": CHECKPOINT_VERSION,
            "layer_sizes": list(self.sizes),
            "learning_rate": self.learning_rate,
            "adam": {"beta1": self.beta1, "beta2": self.beta2, "eps": self.eps, "step": self.step,
                     "m": [a.tolist() for a in self.m], "v": [a.tolist() for a in self.v]},
            "weights": [W.tolist() for W in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict, expected_sizes=None) -> "ValueNetwork":
        if data.get("format_version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {data.get('format_version')!r}")
        sizes = tuple(data["layer_sizes"])
        if expected_sizes is not None and sizes != tuple(expected_sizes):
            raise ValueError(f"checkpoint layer sizes {sizes} do not match {tuple(expected_sizes)}")
        adam = data["adam"]
        net = cls(sizes, data["learning_rate"], data.get("seed", 0), adam["beta1"], adam["beta2"], adam["eps"])
        weights = [np.array(W, dtype=float) for W in data["weights"]]
        biases = [np.array(b, dtype=float) for b in data["biases"]]
        for k, (W, b) in enumerate(zip(weights, biases)):
            if W.shape != net.weights[k].shape or b.shape != net.biases[k].shape:
                raise ValueError(f"layer {k} parameter shape does not match layer sizes {sizes}")
        net.weights, net.biases = weights, biases
        net.m = [np.array(a, dtype=float).reshape(p.shape) for a, p in zip(adam["m"], net.params())]
        net.v = [np.array(a, dtype=float).reshape(p.shape) for a, p in zip(adam["v"], net.params())]
        net.step = int(adam["step"])
        return net


def save_checkpoint(path, network: ValueNetwork, extra: dict | None = None) -> None:
    """Write the network (and optional training metadata) as JSON."""
    data = network.to_dict()
    data["training"] = extra or {}
    with open(path, "w") as fh:
        json.dump(data, fh, indent=1)


def load_checkpoint(path, expected_sizes=LAYER_SIZES):
    """Returns ``(network, training_metadata)``; rejects mismatched layer sizes."""
    with open(path) as fh:
        data = json.load(fh)
    return ValueNetwork.from_dict(data, expected_sizes), data.get("training", {})
