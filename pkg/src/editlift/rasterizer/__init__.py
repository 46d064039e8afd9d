"""Gaussian splat rendering: projection, compositing, differentiable path."""

from ._kernel import kernel_name
from .cameras import (
    CameraIntrinsics,
    CameraPose,
    camera_from_json,
    camera_to_json,
    load_cameras,
    save_cameras,
)
from .diff import GaussianTensors, render_diff
from .render import RenderConfig, RenderResult, RenderStats, project, render, render_bruteforce

__all__ = [
    "CameraIntrinsics",
    "CameraPose",
    "GaussianTensors",
    "RenderConfig",
    "RenderResult",
    "RenderStats",
    "camera_from_json",
    "camera_to_json",
    "kernel_name",
    "load_cameras",
    "project",
    "render",
    "render_bruteforce",
    "render_diff",
    "save_cameras",
]
