"""Pinhole camera intrinsics and world-to-camera poses."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ValidationError


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValidationError(f"focal lengths must be positive, got ({self.fx}, {self.fy})")
        if not (0.0 <= self.cx <= self.width and 0.0 <= self.cy <= self.height):
            raise ValidationError(
                f"principal point ({self.cx}, {self.cy}) outside {self.width}x{self.height} image")

    def scaled(self, width: int, height: int) -> "CameraIntrinsics":
        """Intrinsics for the same camera at a different resolution."""
        sx = width / self.width
        sy = height / self.height
        return CameraIntrinsics(self.fx * sx, self.fy * sy, self.cx * sx, self.cy * sy,
                                width, height)

    def normalized(self) -> np.ndarray:
        """(fx/W, fy/H, cx/W, cy/H) feature used as conditioning."""
        return np.array([self.fx / self.width, self.fy / self.height,
                         self.cx / self.width, self.cy / self.height])


@dataclass(frozen=True)
class CameraPose:
    """World-to-camera map x_cam = R x_world + t."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=np.float64).reshape(3, 3))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=np.float64).reshape(3))
        r = self.rotation
        if np.max(np.abs(r.T @ r - np.eye(3))) > 1e-6:
            raise ValidationError("rotation is not orthonormal within 1e-6")
        if np.linalg.det(r) < 0:
            raise ValidationError("rotation must have determinant +1")

    @property
    def camera_center(self) -> np.ndarray:
        return -self.rotation.T @ self.translation

    def compose_world_rotation(self, q_world: np.ndarray) -> "CameraPose":
        """Pose observing a world rotated by ``q_world`` identically."""
        return CameraPose(self.rotation @ np.asarray(q_world).T, self.translation)

    @staticmethod
    def identity() -> "CameraPose":
        return CameraPose(np.eye(3), np.zeros(3))

    @staticmethod
    def look_at(eye, target, up=(0.0, 1.0, 0.0)) -> "CameraPose":
        """Camera at ``eye`` with +z toward ``target`` (right-handed, y down-ish)."""
        eye = np.asarray(eye, dtype=np.float64)
        forward = np.asarray(target, dtype=np.float64) - eye
        forward = forward / np.linalg.norm(forward)
        up = np.asarray(up, dtype=np.float64)
        right = np.cross(forward, up)
        n = np.linalg.norm(right)
        if n < 1e-9:
            up = np.array([0.0, 0.0, 1.0]) if abs(forward[1]) > 0.9 else np.array([0.0, 1.0, 0.0])
            right = np.cross(forward, up)
            n = np.linalg.norm(right)
        right = right / n
        down = np.cross(forward, right)
        rot = np.stack([right, down, forward])
        return CameraPose(rot, -rot @ eye)


def camera_to_json(intr: CameraIntrinsics, pose: CameraPose) -> dict:
    return {
        "fx": intr.fx, "fy": intr.fy, "cx": intr.cx, "cy": intr.cy,
        "w": intr.width, "h": intr.height,
        "R": [float(v) for v in pose.rotation.reshape(-1)],
        "t": [float(v) for v in pose.translation],
    }


def camera_from_json(obj: dict) -> tuple[CameraIntrinsics, CameraPose]:
    intr = CameraIntrinsics(obj["fx"], obj["fy"], obj["cx"], obj["cy"],
                            int(obj["w"]), int(obj["h"]))
    pose = CameraPose(np.array(obj["R"], dtype=np.float64).reshape(3, 3),
                      np.array(obj["t"], dtype=np.float64))
    return intr, pose


def save_cameras(path: str | Path, cameras: list[tuple[CameraIntrinsics, CameraPose]]) -> None:
    payload = [camera_to_json(i, p) for i, p in cameras]
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_cameras(path: str | Path) -> list[tuple[CameraIntrinsics, CameraPose]]:
    payload = json.loads(Path(path).read_text())
    if isinstance(payload, dict):
        payload = [payload]
    return [camera_from_json(obj) for obj in payload]
