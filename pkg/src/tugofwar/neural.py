"""Minimal dense-MLP substrate: forward, backprop, Adam, checkpoint format.

Plain numpy, float64 throughout.  Hidden layers are rectified; the output
layer is identity or softmax ("simplex" option).  Checkpoints are a
versioned binary stream: magic, version, layer sizes, activation codes,
then row-major float64 weights and biases per layer (docs/formats.md).
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"TWNN"
FORMAT_VERSION = 1

_ACTIVATIONS = ("identity", "softmax")


class CheckpointError(ValueError):
    """Corrupt or incompatible checkpoint stream."""


class TrainingDiverged(RuntimeError):
    """Loss became non-finite."""


@dataclass(frozen=True)
class MLPSpec:
    layer_sizes: tuple[int, ...]
    output_activation: str = "identity"

    def __post_init__(self):
        if len(self.layer_sizes) < 2:
            raise ValueError("need at least input and output layers")
        if any(n <= 0 for n in self.layer_sizes):
            raise ValueError("layer sizes must be positive")
        if self.output_activation not in _ACTIVATIONS:
            raise ValueError(f"unknown output activation {self.output_activation!r}")

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_sizes[-1]


@dataclass
class NetworkParameters:
    spec: MLPSpec
    weights: list[np.ndarray]   # weights[l] has shape (out, in)
    biases: list[np.ndarray]

    def copy(self) -> "NetworkParameters":
        return NetworkParameters(
            self.spec, [w.copy() for w in self.weights], [b.copy() for b in self.biases]
        )

    def allclose(self, other: "NetworkParameters") -> bool:
        return self.spec == other.spec and all(
            np.array_equal(a, b)
            for a, b in zip(self.weights + self.biases, other.weights + other.biases)
        )


def mlp_init(spec: MLPSpec, seed: int) -> NetworkParameters:
    """Scaled uniform fan-in init for weights, zero biases."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(spec.layer_sizes, spec.layer_sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return NetworkParameters(spec, weights, biases)


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def forward(params: NetworkParameters, x: np.ndarray) -> np.ndarray:
    """Evaluate the network; accepts a single vector or a (batch, in) matrix."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    a = x[None, :] if single else x
    if a.shape[1] != params.spec.n_inputs:
        raise ValueError(f"expected input size {params.spec.n_inputs}, got {a.shape[1]}")
    last = len(params.weights) - 1
    for layer, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w.T + b
        if layer < last:
            a = np.maximum(z, 0.0)
        elif params.spec.output_activation == "softmax":
            a = _softmax(z)
        else:
            a = z
    return a[0] if single else a


def _forward_cached(params: NetworkParameters, x: np.ndarray):
    activations = [x]
    pre = []
    last = len(params.weights) - 1
    a = x
    for layer, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w.T + b
        pre.append(z)
        if layer < last:
            a = np.maximum(z, 0.0)
        elif params.spec.output_activation == "softmax":
            a = _softmax(z)
        else:
            a = z
        activations.append(a)
    return activations, pre


def loss_and_gradients(
    params: NetworkParameters, inputs: np.ndarray, targets: np.ndarray
) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Mean squared error over all batch elements and output components."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    activations, _ = _forward_cached(params, inputs)
    pred = activations[-1]
    diff = pred - targets
    loss = float(np.mean(diff * diff))

    n_elems = diff.size
    delta = 2.0 * diff / n_elems          # dL/d(output activation)
    if params.spec.output_activation == "softmax":
        s = pred
        delta = s * (delta - (delta * s).sum(axis=1, keepdims=True))
    grad_w: list[np.ndarray] = [None] * len(params.weights)
    grad_b: list[np.ndarray] = [None] * len(params.biases)
    for layer in reversed(range(len(params.weights))):
        a_prev = activations[layer]
        grad_w[layer] = delta.T @ a_prev
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ params.weights[layer]) * (activations[layer] > 0)
    return loss, grad_w, grad_b


@dataclass
class AdamOptimizer:
    """Adam with the usual bias correction; state lives on the optimizer."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    _m: list[np.ndarray] = field(default_factory=list)
    _v: list[np.ndarray] = field(default_factory=list)
    _t: int = 0

    def step(self, params: NetworkParameters, grad_w, grad_b) -> NetworkParameters:
        grads = list(grad_w) + list(grad_b)
        tensors = list(params.weights) + list(params.biases)
        if not self._m:
            self._m = [np.zeros_like(t) for t in tensors]
            self._v = [np.zeros_like(t) for t in tensors]
        self._t += 1
        correct1 = 1.0 - self.beta1 ** self._t
        correct2 = 1.0 - self.beta2 ** self._t
        updated = []
        for i, (tensor, grad) in enumerate(zip(tensors, grads)):
            self._m[i] = self.beta1 * self._m[i] + (1 - self.beta1) * grad
            self._v[i] = self.beta2 * self._v[i] + (1 - self.beta2) * grad * grad
            m_hat = self._m[i] / correct1
            v_hat = self._v[i] / correct2
            updated.append(tensor - self.lr * m_hat / (np.sqrt(v_hat) + self.eps))
        n = len(params.weights)
        return NetworkParameters(params.spec, updated[:n], updated[n:])


def train_step(
    params: NetworkParameters,
    batch: tuple[np.ndarray, np.ndarray],
    optimizer: AdamOptimizer,
) -> tuple[NetworkParameters, float]:
    """One squared-error gradient step; aborts on non-finite loss."""
    inputs, targets = batch
    loss, grad_w, grad_b = loss_and_gradients(params, inputs, targets)
    if not np.isfinite(loss):
        raise TrainingDiverged(f"loss is {loss}")
    if optimizer.lr == 0.0:
        return params, loss
    return optimizer.step(params, grad_w, grad_b), loss


# ------------------------------------------------------------- serialization

def save_params(params: NetworkParameters) -> bytes:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<H", FORMAT_VERSION))
    sizes = params.spec.layer_sizes
    buf.write(struct.pack("<I", len(sizes)))
    buf.write(struct.pack(f"<{len(sizes)}I", *sizes))
    buf.write(struct.pack("<B", _ACTIVATIONS.index(params.spec.output_activation)))
    for w, b in zip(params.weights, params.biases):
        buf.write(np.ascontiguousarray(w, dtype=np.float64).tobytes())
        buf.write(np.ascontiguousarray(b, dtype=np.float64).tobytes())
    return buf.getvalue()


def load_params(data: bytes) -> NetworkParameters:
    buf = io.BytesIO(data)

    def read(n: int) -> bytes:
        chunk = buf.read(n)
        if len(chunk) != n:
            raise CheckpointError("truncated checkpoint stream")
        return chunk

    if read(4) != MAGIC:
        raise CheckpointError("bad magic; not a network checkpoint")
    (version,) = struct.unpack("<H", read(2))
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    (n_sizes,) = struct.unpack("<I", read(4))
    if not 2 <= n_sizes <= 64:
        raise CheckpointError("implausible layer count")
    sizes = struct.unpack(f"<{n_sizes}I", read(4 * n_sizes))
    (act_code,) = struct.unpack("<B", read(1))
    if act_code >= len(_ACTIVATIONS):
        raise CheckpointError("unknown activation code")
    spec = MLPSpec(tuple(sizes), output_activation=_ACTIVATIONS[act_code])
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        w = np.frombuffer(read(8 * fan_in * fan_out), dtype=np.float64).reshape(fan_out, fan_in)
        b = np.frombuffer(read(8 * fan_out), dtype=np.float64)
        weights.append(w.copy())
        biases.append(b.copy())
    if buf.read(1):
        raise CheckpointError("trailing bytes after checkpoint payload")
    return NetworkParameters(spec, weights, biases)


def save_params_file(params: NetworkParameters, path) -> None:
    with open(path, "wb") as fh:
        fh.write(save_params(params))


def load_params_file(path) -> NetworkParameters:
    with open(path, "rb") as fh:
        return load_params(fh.read())
