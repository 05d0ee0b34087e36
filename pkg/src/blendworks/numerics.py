"""Dense neural-network kernel.

Fully-connected layers with relu/softplus/identity activations,
reverse-mode gradients recorded on an explicit tape, Adam with plateau
and step learning-rate schedules, diagonal-Gaussian sampling and
closed-form KL. Everything is float64 and deterministic given a seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

ACTIVATIONS = ("relu", "softplus", "identity")


class DimMismatch(Exception):
    pass


class NonPositiveVariance(Exception):
    pass


@dataclass
class DenseLayer:
    weights: np.ndarray  # (fan_in, fan_out)
    bias: np.ndarray  # (fan_out,)
    activation: str

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.weights.shape[1] != self.bias.shape[0]:
            raise DimMismatch("bias length must match weight fan-out")


@dataclass
class DenseNet:
    layers: list[DenseLayer]

    def __post_init__(self):
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.weights.shape[1] != nxt.weights.shape[0]:
                raise DimMismatch("adjacent layer dims must chain")

    @property
    def input_dim(self) -> int:
        return self.layers[0].weights.shape[0]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weights.shape[1]

    def params(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.append(layer.weights)
            out.append(layer.bias)
        return out


def init_dense(dims: Sequence[int], activations: Sequence[str],
               rng: np.random.Generator) -> DenseNet:
    """Scaled uniform fan-in init: He bound for relu layers, LeCun otherwise."""
    if len(activations) != len(dims) - 1:
        raise ValueError("need one activation per layer")
    layers = []
    for fan_in, fan_out, act in zip(dims, dims[1:], activations):
        bound = np.sqrt((6.0 if act == "relu" else 3.0) / fan_in)
        weights = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        layers.append(DenseLayer(weights, np.zeros(fan_out), act))
    return DenseNet(layers)


def _apply_activation(act: str, pre: np.ndarray) -> np.ndarray:
    if act == "relu":
        return np.maximum(pre, 0.0)
    if act == "softplus":
        # log(1 + exp(x)) computed stably for large |x|
        return np.logaddexp(0.0, pre)
    return pre


def _activation_grad(act: str, pre: np.ndarray) -> np.ndarray:
    if act == "relu":
        return (pre > 0.0).astype(np.float64)
    if act == "softplus":
        return 1.0 / (1.0 + np.exp(-pre))
    return np.ones_like(pre)


@dataclass
class Tape:
    """Per-layer records from a forward pass, enough to run backward."""

    inputs: list[np.ndarray] = field(default_factory=list)
    pre_activations: list[np.ndarray] = field(default_factory=list)
    batched: bool = False


@dataclass
class NetGradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    wrt_input: np.ndarray

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out


def forward(net: DenseNet, x: np.ndarray) -> tuple[np.ndarray, Tape]:
    """Run the affine+activation chain; accepts a vector or a (batch, dim) matrix."""
    x = np.asarray(x, dtype=np.float64)
    batched = x.ndim == 2
    if not batched:
        x = x[None, :]
    if x.shape[1] != net.input_dim:
        raise DimMismatch(f"input dim {x.shape[1]} != {net.input_dim}")
    tape = Tape(batched=batched)
    h = x
    for layer in net.layers:
        tape.inputs.append(h)
        pre = h @ layer.weights + layer.bias
        tape.pre_activations.append(pre)
        h = _apply_activation(layer.activation, pre)
    out = h if batched else h[0]
    return out, tape


def backward(net: DenseNet, tape: Tape, grad_out: np.ndarray) -> NetGradients:
    """Reverse-mode gradients for every weight/bias and the net input."""
    grad = np.asarray(grad_out, dtype=np.float64)
    if not tape.batched:
        grad = grad[None, :]
    weight_grads: list[np.ndarray] = [None] * len(net.layers)  # type: ignore[list-item]
    bias_grads: list[np.ndarray] = [None] * len(net.layers)  # type: ignore[list-item]
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        grad = grad * _activation_grad(layer.activation, tape.pre_activations[i])
        weight_grads[i] = tape.inputs[i].T @ grad
        bias_grads[i] = grad.sum(axis=0)
        grad = grad @ layer.weights.T
    wrt_input = grad if tape.batched else grad[0]
    return NetGradients(weight_grads, bias_grads, wrt_input)


@dataclass
class AdamState:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    first_moments: list[np.ndarray] = field(default_factory=list)
    second_moments: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_params(cls, params: Sequence[np.ndarray], learning_rate: float = 1e-3) -> "AdamState":
        if learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        return cls(
            learning_rate=learning_rate,
            first_moments=[np.zeros_like(p) for p in params],
            second_moments=[np.zeros_like(p) for p in params],
        )


def adam_step(params: Sequence[np.ndarray], grads: Sequence[np.ndarray],
              state: AdamState) -> AdamState:
    """One bias-corrected Adam update; parameters are updated in place."""
    if len(params) != len(state.first_moments):
        raise DimMismatch("parameter count does not match optimizer state")
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    for p, g, m, v in zip(params, grads, state.first_moments, state.second_moments):
        if p.shape != g.shape:
            raise DimMismatch("gradient shape does not match parameter shape")
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        p -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return state


@dataclass
class PlateauSchedule:
    """Decay when the best loss stops improving for `patience` epochs."""

    factor: float = 0.1
    patience: int = 50
    relative_tolerance: float = 1e-4
    best_loss: float = np.inf
    epochs_since_improvement: int = 0


@dataclass
class StepSchedule:
    """Decay at exact multiples of `every_n` epochs."""

    factor: float = 0.1
    every_n: int = 2500


def schedule_lr(state: AdamState, policy: PlateauSchedule | StepSchedule,
                epoch_loss_history: Sequence[float]) -> AdamState:
    """Apply the schedule after an epoch; call once per epoch, in order."""
    if not epoch_loss_history:
        return state
    epoch = len(epoch_loss_history)
    if isinstance(policy, StepSchedule):
        if epoch % policy.every_n == 0:
            state.learning_rate *= policy.factor
        return state
    loss = epoch_loss_history[-1]
    improved = loss < policy.best_loss * (1 - policy.relative_tolerance)
    if improved:
        policy.best_loss = loss
        policy.epochs_since_improvement = 0
    else:
        policy.epochs_since_improvement += 1
        if policy.epochs_since_improvement >= policy.patience:
            state.learning_rate *= policy.factor
            policy.epochs_since_improvement = 0
    return state


@dataclass(frozen=True)
class DiagGaussian:
    mean: np.ndarray
    var: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=np.float64))
        object.__setattr__(self, "var", np.asarray(self.var, dtype=np.float64))
        if self.mean.shape != self.var.shape:
            raise DimMismatch("mean and var must have the same shape")

    @property
    def dim(self) -> int:
        return self.mean.shape[-1]


def sample_gaussian(d: DiagGaussian, rng: np.random.Generator) -> np.ndarray:
    """Reparameterized draw: mean + sqrt(var) * eps with eps ~ N(0, I)."""
    if np.any(d.var <= 0):
        raise NonPositiveVariance("variance must be positive elementwise")
    eps = rng.standard_normal(d.mean.shape)
    return d.mean + np.sqrt(d.var) * eps


def kl_diag(q: DiagGaussian, p: DiagGaussian) -> float:
    """Closed-form KL(q || p) for diagonal Gaussians, summed over dimensions."""
    if np.any(q.var <= 0) or np.any(p.var <= 0):
        raise NonPositiveVariance("variance must be positive elementwise")
    if q.mean.shape != p.mean.shape:
        raise DimMismatch("distributions must share a dimension")
    ratio = q.var / p.var
    return float(0.5 * np.sum(np.log(p.var) - np.log(q.var) + ratio
                              + (q.mean - p.mean) ** 2 / p.var - 1.0))


def finite_difference_grads(loss_fn, params: Sequence[np.ndarray],
                            step: float = 1e-4) -> list[np.ndarray]:
    """Central-difference gradient oracle: perturbs every entry of every array."""
    grads = []
    for p in params:
        g = np.zeros_like(p)
        flat_p = p.ravel()
        flat_g = g.ravel()
        for i in range(flat_p.size):
            orig = flat_p[i]
            flat_p[i] = orig + step
            hi = loss_fn()
            flat_p[i] = orig - step
            lo = loss_fn()
            flat_p[i] = orig
            flat_g[i] = (hi - lo) / (2 * step)
        grads.append(g)
    return grads


def max_relative_error(analytic: Sequence[np.ndarray], numeric: Sequence[np.ndarray],
                       floor: float = 1.0) -> float:
    """max |a - n| / max(floor, |a|, |n|) over all entries of all arrays."""
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(floor, np.maximum(np.abs(a), np.abs(n)))
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst
