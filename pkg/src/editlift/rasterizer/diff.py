"""Differentiable rendering path built from autodiff ops.

Used by lifting-network training and gradient checks.  Identical math to
``render_bruteforce`` (no tiling, no early stop); the depth sort order is
taken from detached depths, which matches the non-differentiable renderers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import numerics as nm
from ..gaussians import SH_C0, SH_C1, SH_C2, SH_C3, sh_coeff_count
from ..gaussians.core import GaussianScene
from ..numerics import Tensor
from .cameras import CameraIntrinsics, CameraPose
from .render import RenderConfig


@dataclass
class GaussianTensors:
    """Scene parameters as autodiff tensors; shapes match GaussianScene arrays."""

    mu: Tensor        # (G, 3)
    alpha: Tensor     # (G,)
    rotation: Tensor  # (G, 4), need not be normalized
    scale: Tensor     # (G, 3), strictly positive
    sh: Tensor        # (G, 3, K)
    sh_degree: int = 1

    def detach_to_scene(self, canonical_view: int = 0) -> GaussianScene:
        norm = np.linalg.norm(self.rotation.data, axis=1, keepdims=True)
        return GaussianScene(
            mu=self.mu.data.copy(), alpha=self.alpha.data.copy(),
            rotation=self.rotation.data / np.where(norm > 0, norm, 1.0),
            scale=self.scale.data.copy(), sh=self.sh.data.copy(),
            sh_degree=self.sh_degree, canonical_view=canonical_view)

    @staticmethod
    def from_scene(scene: GaussianScene, requires_grad: bool = True) -> "GaussianTensors":
        mk = (lambda a: nm.param(a)) if requires_grad else (lambda a: Tensor(a))
        return GaussianTensors(
            mu=mk(scene.mu), alpha=mk(scene.alpha), rotation=mk(scene.rotation),
            scale=mk(scene.scale), sh=mk(scene.sh), sh_degree=scene.sh_degree)


def quat_to_rotmat_t(q: Tensor) -> Tensor:
    """Engine version of the quaternion-to-rotation map; (G, 4) -> (G, 3, 3)."""
    n = nm.sqrt((q * q).sum(axis=1, keepdims=True) + 1e-24)
    q = q / n
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    rows = [
        nm.stack([1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)], axis=1),
        nm.stack([2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)], axis=1),
        nm.stack([2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)], axis=1),
    ]
    return nm.stack(rows, axis=1)


def sh_basis_t(direction: Tensor, degree: int) -> Tensor:
    """Engine version of the real SH basis; (G, 3) -> (G, (degree+1)^2)."""
    x, y, z = direction[:, 0], direction[:, 1], direction[:, 2]
    values = [x * 0.0 + SH_C0]
    if degree >= 1:
        values += [-SH_C1 * y, SH_C1 * z, -SH_C1 * x]
    if degree >= 2:
        xx, yy, zz = x * x, y * y, z * z
        values += [
            SH_C2[0] * x * y,
            SH_C2[1] * y * z,
            SH_C2[2] * (2.0 * zz - xx - yy),
            SH_C2[3] * x * z,
            SH_C2[4] * (xx - yy),
        ]
    if degree >= 3:
        xx, yy, zz = x * x, y * y, z * z
        values += [
            SH_C3[0] * y * (3.0 * xx - yy),
            SH_C3[1] * x * y * z,
            SH_C3[2] * y * (4.0 * zz - xx - yy),
            SH_C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy),
            SH_C3[4] * x * (4.0 * zz - xx - yy),
            SH_C3[5] * z * (xx - yy),
            SH_C3[6] * x * (xx - 3.0 * yy),
        ]
    return nm.stack(values, axis=1)


def render_diff(scene: GaussianTensors, intr: CameraIntrinsics, pose: CameraPose,
                background=(0.0, 0.0, 0.0),
                config: RenderConfig | None = None) -> tuple[Tensor, Tensor]:
    """Render with gradients w.r.t. all gaussian parameters.

    Returns (rgb (H, W, 3), accumulated weight (H, W)).  The alpha cutoff
    defaults to 0 here so the image stays smooth in the parameters; pass a
    config to match the production renderer exactly.
    """
    if config is None:
        config = RenderConfig(alpha_cutoff=0.0)
    h, w = intr.height, intr.width
    g = scene.mu.shape[0]
    k = sh_coeff_count(scene.sh_degree)
    if scene.sh.shape[-1] != k:
        raise ValueError(f"sh block has {scene.sh.shape[-1]} coefficients, expected {k}")

    rc = Tensor(pose.rotation)
    tc = Tensor(pose.translation)
    cam = nm.matmul(scene.mu, rc.T) + tc
    depth = cam[:, 2]
    valid = depth.data > config.near
    z = nm.where(valid, depth, Tensor(np.ones(g)))

    mx = intr.fx * cam[:, 0] / z + intr.cx
    my = intr.fy * cam[:, 1] / z + intr.cy

    # screen covariance via the projection Jacobian at the center
    zero = Tensor(np.zeros(g))
    j_row0 = nm.stack([intr.fx / z, zero, -intr.fx * cam[:, 0] / (z * z)], axis=1)
    j_row1 = nm.stack([zero, intr.fy / z, -intr.fy * cam[:, 1] / (z * z)], axis=1)
    jac = nm.stack([j_row0, j_row1], axis=1)                     # (G, 2, 3)

    rot = quat_to_rotmat_t(scene.rotation)
    rs = rot * scene.scale.reshape(g, 1, 3)
    sigma3 = nm.matmul(rs, rs.swapaxes(1, 2))
    m = nm.matmul(jac, Tensor(np.broadcast_to(pose.rotation, (g, 3, 3)).copy()))
    cov2 = nm.matmul(nm.matmul(m, sigma3), m.swapaxes(1, 2))

    ca = cov2[:, 0, 0] + config.dilation
    cb = cov2[:, 0, 1]
    cc = cov2[:, 1, 1] + config.dilation
    det = ca * cc - cb * cb
    ia, ib, ic = cc / det, -cb / det, ca / det

    # per-gaussian color from SH at the direction toward the camera center
    offs = scene.mu - Tensor(pose.camera_center)
    dist = nm.sqrt((offs * offs).sum(axis=1, keepdims=True) + 1e-24)
    dirs = offs / dist
    basis = sh_basis_t(dirs, scene.sh_degree)                     # (G, K)
    color = nm.matmul(scene.sh, basis.reshape(g, k, 1)).reshape(g, 3) + 0.5
    color = nm.clamp(color, 0.0, 1.0)

    xs = np.tile(np.arange(w, dtype=np.float64) + 0.5, h)
    ys = np.repeat(np.arange(h, dtype=np.float64) + 0.5, w)
    dx = Tensor(xs) - mx.reshape(g, 1)
    dy = Tensor(ys) - my.reshape(g, 1)
    q = (ia.reshape(g, 1) * dx * dx + 2.0 * ib.reshape(g, 1) * dx * dy
         + ic.reshape(g, 1) * dy * dy)

    alpha_eff = nm.clamp(scene.alpha, 0.0, config.alpha_clamp)
    amap = alpha_eff.reshape(g, 1) * nm.exp(-0.5 * q)
    amap = nm.clamp(amap, 0.0, config.alpha_clamp)
    mask = valid[:, None] & np.ones((1, h * w), dtype=bool)
    if config.alpha_cutoff > 0:
        mask = mask & (amap.data >= config.alpha_cutoff)
    amap = nm.where(mask, amap, Tensor(np.zeros((g, h * w))))

    order = np.lexsort((np.arange(g), depth.data))
    a_sorted = nm.take(amap, order, axis=0)
    c_sorted = nm.take(color, order, axis=0)

    trans = nm.cumprod(1.0 - a_sorted, axis=0)
    t_prev = nm.concat([Tensor(np.ones((1, h * w))), trans[:-1, :]], axis=0)
    weights = a_sorted * t_prev                                   # (G, P)

    rgb = nm.matmul(weights.T, c_sorted)                          # (P, 3)
    wsum = weights.sum(axis=0)
    bg = Tensor(np.asarray(background, dtype=np.float64).reshape(1, 3))
    rgb = rgb + bg * (1.0 - wsum).reshape(h * w, 1)
    return rgb.reshape(h, w, 3), wsum.reshape(h, w)
