"""Decoupled-weight-decay Adam, as a pure function plus a thin stateful wrapper."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeError, TrainingError
from .tensor import Tensor

# Global step counter used by pipeline instrumentation to assert that
# inference performs zero optimizer steps.  Incremented once per adamw_step.
OPTIMIZER_STEP_COUNT = 0


@dataclass
class OptimizerState:
    """Per-parameter first/second moment accumulators and a step counter."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0


def adamw_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: OptimizerState,
    lr: float = 1e-4,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    weight_decay: float = 0.0,
) -> tuple[dict[str, np.ndarray], OptimizerState]:
    """One AdamW update.  Pure: returns fresh params and state.

    Defaults follow the training configuration used throughout: lr 1e-4,
    betas (0.9, 0.999), eps 1e-8, no weight decay.
    """
    global OPTIMIZER_STEP_COUNT
    new_params: dict[str, np.ndarray] = {}
    new_state = OptimizerState(step=state.step + 1)
    t = new_state.step
    bc1 = 1.0 - beta1 ** t
    bc2 = 1.0 - beta2 ** t
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p)
        g = np.asarray(g, dtype=np.float64)
        if g.shape != p.shape:
            raise ShapeError(f"gradient shape {g.shape} != parameter shape {p.shape} for '{name}'")
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient for parameter '{name}'")
        m_prev = state.m.get(name, np.zeros_like(p))
        v_prev = state.v.get(name, np.zeros_like(p))
        m = beta1 * m_prev + (1.0 - beta1) * g
        v = beta2 * v_prev + (1.0 - beta2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2
        p_new = p - lr * (m_hat / (np.sqrt(v_hat) + eps) + weight_decay * p)
        new_params[name] = p_new
        new_state.m[name] = m
        new_state.v[name] = v
    OPTIMIZER_STEP_COUNT += 1
    return new_params, new_state


class AdamW:
    """Stateful wrapper binding :func:`adamw_step` to a set of Tensors."""

    def __init__(self, params: dict[str, Tensor], lr: float = 1e-4,
                 beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8, weight_decay: float = 0.0):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.state = OptimizerState()

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    def step(self) -> None:
        values = {k: p.data for k, p in self.params.items()}
        grads = {k: (p.grad if p.grad is not None else np.zeros_like(p.data))
                 for k, p in self.params.items()}
        new_values, self.state = adamw_step(
            values, grads, self.state, lr=self.lr, beta1=self.beta1,
            beta2=self.beta2, eps=self.eps, weight_decay=self.weight_decay)
        for k, p in self.params.items():
            p.data = new_values[k]
