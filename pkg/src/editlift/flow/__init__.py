"""Rectified-flow editing backbone: model, sampling, pretraining."""

from .model import EditorConfig, VelocityModel
from .pretrain import PretrainConfig, pretrain_editor
from .sampling import (
    NULL_PROMPT,
    EditPrompt,
    Latent,
    decode,
    euler_single_step,
    forward_diffuse,
    forward_with_tap,
    perturb,
)

__all__ = [
    "EditorConfig",
    "EditPrompt",
    "Latent",
    "NULL_PROMPT",
    "PretrainConfig",
    "VelocityModel",
    "decode",
    "euler_single_step",
    "forward_diffuse",
    "forward_with_tap",
    "perturb",
    "pretrain_editor",
]
