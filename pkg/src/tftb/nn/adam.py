"""Adam optimizer with standard defaults; only the learning rate is exposed."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, ShapeError
from .models import ModelParams

BETA1 = 0.9
BETA2 = 0.999
EPS = 1e-8


@dataclass
class AdamState:
    step: int
    m_weights: list[np.ndarray]
    v_weights: list[np.ndarray]
    m_biases: list[np.ndarray]
    v_biases: list[np.ndarray]


def init_adam_state(params: ModelParams) -> AdamState:
    return AdamState(
        step=0,
        m_weights=[np.zeros_like(w) for w in params.weights],
        v_weights=[np.zeros_like(w) for w in params.weights],
        m_biases=[np.zeros_like(b) for b in params.biases],
        v_biases=[np.zeros_like(b) for b in params.biases],
    )


def _update(param, grad, m, v, lr, t):
    if param.shape != grad.shape:
        raise ShapeError(
            f"adam: gradient shape {grad.shape} does not match parameter shape {param.shape}"
        )
    if param.shape != m.shape:
        raise ShapeError(
            f"adam: moment shape {m.shape} does not match parameter shape {param.shape}"
        )
    m *= BETA1
    m += (1.0 - BETA1) * grad
    v *= BETA2
    v += (1.0 - BETA2) * grad * grad
    m_hat = m / (1.0 - BETA1**t)
    v_hat = v / (1.0 - BETA2**t)
    param -= lr * m_hat / (np.sqrt(v_hat) + EPS)


def adam_step(
    params: ModelParams,
    grad_weights: list[np.ndarray],
    grad_biases: list[np.ndarray],
    state: AdamState,
    lr: float,
) -> tuple[ModelParams, AdamState]:
    """One in-place Adam update; returns the mutated params and state."""
    if lr <= 0:
        raise ConfigError(f"learning rate must be positive, got {lr}")
    if len(grad_weights) != len(params.weights) or len(grad_biases) != len(params.biases):
        raise ShapeError("adam: gradient list length does not match parameter layers")
    state.step += 1
    t = state.step
    for i in range(len(params.weights)):
        _update(params.weights[i], grad_weights[i], state.m_weights[i], state.v_weights[i], lr, t)
        _update(params.biases[i], grad_biases[i], state.m_biases[i], state.v_biases[i], lr, t)
    return params, state
