"""Dense leaky integrate-and-fire layer with a rectangular surrogate gradient.

Time-major layout throughout: inputs and spikes are ``(T, B, C)``.

Per step::

    u[t] = decay * v[t-1] + x[t] @ W.T        (membrane before reset)
    s[t] = spike(u[t] - threshold)
    v[t] = u[t] - threshold * s[t]            (reset_mode="subtract")
    v[t] = u[t] * (1 - s[t])                  (reset_mode="zero")

``spike`` is the Heaviside step for training/inference. The backward pass
replaces its derivative with ``1 / (2 w)`` on ``|u - threshold| < w``.
Setting ``smooth=True`` swaps the step for the piecewise-linear ramp whose
exact derivative *is* that window, which is what finite differences can see.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dassdp.errors import ParameterError, ShapeError

RESET_MODES = ("subtract", "zero")


@dataclass
class LifLayer:
    weights: np.ndarray  # (C_out, C_in)
    membrane_decay: float = 0.5
    threshold: float = 1.0
    reset_mode: str = "subtract"

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 2:
            raise ShapeError(f"weights must be (C_out, C_in), got {self.weights.shape}")
        if not 0.0 < self.membrane_decay < 1.0:
            raise ParameterError(f"membrane_decay must be in (0, 1), got {self.membrane_decay}")
        if self.threshold <= 0:
            raise ParameterError(f"threshold must be > 0, got {self.threshold}")
        if self.reset_mode not in RESET_MODES:
            raise ParameterError(f"reset_mode must be one of {RESET_MODES}")

    @property
    def c_in(self) -> int:
        return self.weights.shape[1]

    @property
    def c_out(self) -> int:
        return self.weights.shape[0]


@dataclass
class LifTrace:
    """What the backward pass needs from a forward pass."""

    inputs: np.ndarray  # (T, B, C_in)
    membrane: np.ndarray  # (T, B, C_out), before reset
    spikes: np.ndarray  # (T, B, C_out)
    smooth: bool


def ramp(x: np.ndarray, width: float) -> np.ndarray:
    return np.clip(x / (2.0 * width) + 0.5, 0.0, 1.0)


def surrogate_derivative(x: np.ndarray, width: float) -> np.ndarray:
    return np.where(np.abs(x) < width, 1.0 / (2.0 * width), 0.0)


def lif_forward(
    layer: LifLayer, input_spikes, smooth: bool = False, surrogate_width: float = 0.5
) -> tuple[np.ndarray, LifTrace]:
    x = np.asarray(input_spikes, dtype=np.float64)
    if x.ndim != 3 or x.shape[2] != layer.c_in:
        raise ShapeError(f"expected input (T, B, {layer.c_in}), got {x.shape}")
    T, B, _ = x.shape
    current = x @ layer.weights.T
    membrane = np.empty((T, B, layer.c_out))
    spikes = np.empty((T, B, layer.c_out))
    v = np.zeros((B, layer.c_out))
    for t in range(T):
        u = layer.membrane_decay * v + current[t]
        if smooth:
            s = ramp(u - layer.threshold, surrogate_width)
        else:
            s = (u >= layer.threshold).astype(np.float64)
        if layer.reset_mode == "subtract":
            v = u - layer.threshold * s
        else:
            v = u * (1.0 - s)
        membrane[t] = u
        spikes[t] = s
    return spikes, LifTrace(inputs=x, membrane=membrane, spikes=spikes, smooth=smooth)


def surrogate_backward(
    layer: LifLayer, trace: LifTrace | None, grad_spikes, surrogate_width: float
) -> tuple[np.ndarray, np.ndarray]:
    """Backpropagate ``dL/ds`` through time; returns ``(dL/dW, dL/dx)``.

    Gradients flow through the reset path as well, so on a ``smooth=True``
    trace the result is the exact gradient of the smoothed forward.
    """
    if trace is None:
        raise ShapeError("surrogate_backward needs the forward trace")
    if surrogate_width <= 0:
        raise ParameterError(f"surrogate_width must be > 0, got {surrogate_width}")
    grad_s = np.asarray(grad_spikes, dtype=np.float64)
    if grad_s.shape != trace.spikes.shape:
        raise ShapeError(f"grad shape {grad_s.shape} != spike shape {trace.spikes.shape}")
    T = grad_s.shape[0]
    theta = layer.threshold
    decay = layer.membrane_decay

    grad_current = np.empty_like(grad_s)
    grad_v = np.zeros_like(grad_s[0])  # dL/dv[t] from step t+1
    for t in range(T - 1, -1, -1):
        u = trace.membrane[t]
        ds_du = surrogate_derivative(u - theta, surrogate_width)
        if layer.reset_mode == "subtract":
            total_s = grad_s[t] - theta * grad_v
            grad_u = grad_v + total_s * ds_du
        else:
            s = trace.spikes[t]
            total_s = grad_s[t] - u * grad_v
            grad_u = grad_v * (1.0 - s) + total_s * ds_du
        grad_current[t] = grad_u
        grad_v = decay * grad_u

    grad_w = np.einsum("tbo,tbi->oi", grad_current, trace.inputs)
    grad_x = grad_current @ layer.weights
    return grad_w, grad_x
