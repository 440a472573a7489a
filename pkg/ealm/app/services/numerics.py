"""Small dense-network toolkit: forward, reverse-mode gradients, clipping and Adam."""

import logging
from dataclasses import dataclass, field
from typing import List, Literal, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

Activation = Literal["relu", "identity"]


@dataclass
class Layer:
    """Affine map ``x @ weight + bias`` followed by an activation."""

    weight: np.ndarray
    bias: np.ndarray
    activation: Activation = "relu"

    @property
    def fan_in(self) -> int:
        return int(self.weight.shape[0])

    @property
    def fan_out(self) -> int:
        return int(self.weight.shape[1])


@dataclass
class DenseNet:
    """A stack of dense layers; the last layer is usually linear."""

    layers: List[Layer]

    def __post_init__(self):
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.fan_out != nxt.fan_in:
                raise ValueError(
                    f"Layer dimensions do not chain: {prev.fan_out} -> {nxt.fan_in}"
                )

    @classmethod
    def zeros(cls, sizes: Sequence[int]) -> "DenseNet":
        layers = []
        for idx, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:])):
            last = idx == len(sizes) - 2
            layers.append(
                Layer(
                    weight=np.zeros((fan_in, fan_out)),
                    bias=np.zeros(fan_out),
                    activation="identity" if last else "relu",
                )
            )
        return cls(layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].fan_in

    @property
    def output_dim(self) -> int:
        return self.layers[-1].fan_out

    @property
    def parameter_count(self) -> int:
        return sum(layer.weight.size + layer.bias.size for layer in self.layers)

    def parameters(self) -> List[np.ndarray]:
        params: List[np.ndarray] = []
        for layer in self.layers:
            params.extend([layer.weight, layer.bias])
        return params

    def copy(self) -> "DenseNet":
        return DenseNet(
            [
                Layer(layer.weight.copy(), layer.bias.copy(), layer.activation)
                for layer in self.layers
            ]
        )


def init_dense_net(sizes: Sequence[int], rng: np.random.Generator) -> DenseNet:
    """Glorot-uniform weights and zero biases; hidden layers use ReLU."""
    net = DenseNet.zeros(sizes)
    for layer in net.layers:
        limit = np.sqrt(6.0 / (layer.fan_in + layer.fan_out))
        layer.weight[...] = rng.uniform(-limit, limit, size=layer.weight.shape)
    return net


def _activate(z: np.ndarray, activation: Activation) -> np.ndarray:
    if activation == "relu":
        return np.maximum(z, 0.0)
    return z


def _forward_cache(net: DenseNet, x: np.ndarray) -> Tuple[np.ndarray, list]:
    if x.shape[-1] != net.input_dim:
        raise ValueError(
            f"Input dimension {x.shape[-1]} does not match network input {net.input_dim}"
        )
    cache = []
    h = x
    for layer in net.layers:
        z = h @ layer.weight + layer.bias
        cache.append((h, z))
        h = _activate(z, layer.activation)
    return h, cache


def forward(net: DenseNet, x: np.ndarray) -> np.ndarray:
    """Evaluate the network on one input vector or a batch of row vectors."""
    out, _ = _forward_cache(net, np.asarray(x, dtype=np.float64))
    return out


def backward(
    net: DenseNet, x: np.ndarray, output_grad: np.ndarray
) -> Tuple[List[np.ndarray], np.ndarray]:
    """
    Reverse-mode gradients of ``output_grad · forward(net, x)``.

    Args:
        net: Network
        x: Input vector or batch of row vectors
        output_grad: Gradient with respect to the output, same leading shape

    Returns:
        (parameter gradients ordered like ``net.parameters()``, input gradient)
    """
    x = np.asarray(x, dtype=np.float64)
    output_grad = np.asarray(output_grad, dtype=np.float64)
    out, cache = _forward_cache(net, x)
    if output_grad.shape != out.shape:
        raise ValueError(
            f"Output gradient shape {output_grad.shape} does not match {out.shape}"
        )

    batched = x.ndim == 2
    grads: List[np.ndarray] = []
    delta = output_grad
    for layer, (h, z) in zip(reversed(net.layers), reversed(cache)):
        if layer.activation == "relu":
            delta = delta * (z > 0)
        if batched:
            grad_w = h.T @ delta
            grad_b = delta.sum(axis=0)
        else:
            grad_w = np.outer(h, delta)
            grad_b = delta.copy()
        grads = [grad_w, grad_b] + grads
        delta = delta @ layer.weight.T
    return grads, delta


def global_norm(grads: Sequence[np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))


def clip_global_norm(grads: Sequence[np.ndarray], max_norm: float) -> List[np.ndarray]:
    """Scale all gradients together so their joint L2 norm is at most ``max_norm``."""
    if max_norm <= 0:
        raise ValueError(f"max_norm must be > 0, got {max_norm}")
    norm = global_norm(grads)
    if norm <= max_norm:
        return [g.copy() for g in grads]
    scale = max_norm / norm
    return [g * scale for g in grads]


def clip_by_value(grads: Sequence[np.ndarray], max_value: float) -> List[np.ndarray]:
    """Clamp every gradient entry to ``[-max_value, max_value]``."""
    if max_value <= 0:
        raise ValueError(f"max_value must be > 0, got {max_value}")
    return [np.clip(g, -max_value, max_value) for g in grads]


@dataclass
class AdamState:
    """Moment estimates for one list of parameters."""

    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: List[np.ndarray] = field(default_factory=list)
    v: List[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_params(cls, params: Sequence[np.ndarray], **kwargs) -> "AdamState":
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            **kwargs,
        )


def adam_step(
    state: AdamState, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]
) -> None:
    """Apply one bias-corrected Adam update to ``params`` in place."""
    if len(params) != len(grads):
        raise ValueError(f"Got {len(grads)} gradients for {len(params)} parameters")
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]

    state.step += 1
    correction1 = 1.0 - state.beta1**state.step
    correction2 = 1.0 - state.beta2**state.step
    for param, grad, m, v in zip(params, grads, state.m, state.v):
        if param.shape != grad.shape:
            raise ValueError(f"Gradient shape {grad.shape} != parameter {param.shape}")
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * grad * grad
        m_hat = m / correction1
        v_hat = v / correction2
        param -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)
