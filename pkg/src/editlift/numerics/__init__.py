"""Dense tensors, reverse-mode differentiation, and the AdamW optimizer."""

from . import optim
from .gradcheck import grad_check
from .optim import AdamW, OptimizerState, adamw_step
from .tensor import (
    Tensor,
    as_tensor,
    clamp,
    concat,
    cumprod,
    exp,
    gelu,
    layer_norm,
    linear,
    log,
    matmul,
    param,
    sigmoid,
    softmax,
    sqrt,
    stack,
    take,
    tanh,
    where,
)

__all__ = [
    "AdamW",
    "OptimizerState",
    "Tensor",
    "adamw_step",
    "as_tensor",
    "clamp",
    "concat",
    "cumprod",
    "exp",
    "gelu",
    "grad_check",
    "layer_norm",
    "linear",
    "log",
    "matmul",
    "param",
    "sigmoid",
    "softmax",
    "sqrt",
    "stack",
    "take",
    "tanh",
    "where",
]
