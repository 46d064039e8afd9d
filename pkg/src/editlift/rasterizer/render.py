"""Splat rendering: EWA projection, depth sorting, alpha compositing.

``render`` is the production path (tile binning + compiled kernel when
available); ``render_bruteforce`` is the O(pixels * primitives) oracle with
no tiling, no radius culling and no early termination.  Both share the
projection code and the per-contribution formula, so they agree to float
accumulation noise.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..gaussians import GaussianPrimitive, GaussianScene, covariance, eval_sh, quat_to_rotmat, sh_basis
from ._kernel import compose_tile, kernel_name
from .cameras import CameraIntrinsics, CameraPose


@dataclass
class RenderConfig:
    near: float = 0.01
    dilation: float = 0.3          # screen-covariance diagonal padding, pixels^2
    alpha_cutoff: float = 1.0 / 255.0
    alpha_clamp: float = 0.999
    tile: int = 16
    t_stop: float = 1e-14          # transmittance early-stop (production path only)


@dataclass
class RenderStats:
    culled: int = 0
    skipped_singular: int = 0
    ms: float = 0.0

    def to_json(self) -> dict:
        return {"culled": self.culled, "skipped_singular": self.skipped_singular, "ms": self.ms}


@dataclass
class RenderResult:
    rgb: np.ndarray     # (H, W, 3) in [0, 1]
    alpha: np.ndarray   # (H, W) accumulated compositing weight
    stats: RenderStats = field(default_factory=RenderStats)


def project(g: GaussianPrimitive, intr: CameraIntrinsics, pose: CameraPose,
            config: RenderConfig | None = None):
    """Project one primitive; returns (mean2d, cov2d, depth) or None when culled."""
    config = config or RenderConfig()
    scene = GaussianScene(
        mu=g.mu[None], alpha=np.array([g.alpha]), rotation=np.asarray(g.rotation)[None],
        scale=np.asarray(g.scale)[None],
        sh=np.asarray(g.sh)[None], sh_degree=int(np.sqrt(np.asarray(g.sh).shape[-1])) - 1)
    proj = _project_scene(scene, intr, pose, config)
    if not proj["valid"][0]:
        return None
    return proj["mean2d"][0], proj["cov2d"][0], float(proj["depth"][0])


def _project_scene(scene: GaussianScene, intr: CameraIntrinsics, pose: CameraPose,
                   config: RenderConfig) -> dict:
    g = len(scene)
    if g == 0:
        return {
            "valid": np.zeros(0, dtype=bool), "mean2d": np.zeros((0, 2)),
            "cov2d": np.zeros((0, 2, 2)), "depth": np.zeros(0), "color": np.zeros((0, 3)),
        }
    cam = scene.mu @ pose.rotation.T + pose.translation
    depth = cam[:, 2]
    valid = depth > config.near

    z = np.where(valid, depth, 1.0)
    mean2d = np.stack([intr.fx * cam[:, 0] / z + intr.cx,
                       intr.fy * cam[:, 1] / z + intr.cy], axis=1)

    jac = np.zeros((g, 2, 3))
    jac[:, 0, 0] = intr.fx / z
    jac[:, 0, 2] = -intr.fx * cam[:, 0] / (z * z)
    jac[:, 1, 1] = intr.fy / z
    jac[:, 1, 2] = -intr.fy * cam[:, 1] / (z * z)

    norm = np.linalg.norm(scene.rotation, axis=1, keepdims=True)
    quats = scene.rotation / np.where(norm > 0, norm, 1.0)
    rot = quat_to_rotmat(quats)
    rs = rot * scene.scale[:, None, :]
    sigma3 = rs @ rs.swapaxes(1, 2)

    m = jac @ pose.rotation[None]
    cov2d = m @ sigma3 @ m.swapaxes(1, 2)
    cov2d[:, 0, 0] += config.dilation
    cov2d[:, 1, 1] += config.dilation

    center = pose.camera_center
    offs = scene.mu - center
    dist = np.linalg.norm(offs, axis=1, keepdims=True)
    dirs = offs / np.where(dist > 0, dist, 1.0)
    color = eval_sh(scene.sh, dirs, scene.sh_degree)

    return {"valid": valid, "mean2d": mean2d, "cov2d": cov2d, "depth": depth, "color": color}


def _prepare(scene: GaussianScene, intr: CameraIntrinsics, pose: CameraPose,
             config: RenderConfig, stats: RenderStats):
    """Project, invert screen covariances, and depth-sort (index tie-break)."""
    proj = _project_scene(scene, intr, pose, config)
    valid = proj["valid"]
    stats.culled = int((~valid).sum())

    a = proj["cov2d"][:, 0, 0]
    b = proj["cov2d"][:, 0, 1]
    c = proj["cov2d"][:, 1, 1]
    det = a * c - b * b
    singular = valid & (det <= 0)
    stats.skipped_singular = int(singular.sum())
    keep = valid & (det > 0)

    safe_det = np.where(keep, det, 1.0)
    inv_abc = np.stack([c / safe_det, -b / safe_det, a / safe_det], axis=1)

    lam_max = 0.5 * (a + c) + np.sqrt(np.square(0.5 * (a - c)) + b * b)
    alpha = np.minimum(scene.alpha, config.alpha_clamp)
    if config.alpha_cutoff > 0:
        visible = alpha >= config.alpha_cutoff
        keep &= visible
        with np.errstate(divide="ignore", invalid="ignore"):
            qmax = 2.0 * np.log(np.where(visible, alpha / config.alpha_cutoff, 1.0))
        radius = np.sqrt(np.maximum(qmax, 0.0) * np.maximum(lam_max, 0.0))
    else:
        radius = np.full(len(scene), float(intr.width + intr.height))
    radius = np.minimum(radius, float(intr.width + intr.height))

    idx = np.nonzero(keep)[0]
    order = np.lexsort((idx, proj["depth"][idx]))
    idx = idx[order]
    return proj, inv_abc, radius, idx


def render(scene: GaussianScene, intr: CameraIntrinsics, pose: CameraPose,
           background=(0.0, 0.0, 0.0), config: RenderConfig | None = None) -> RenderResult:
    """Tile-binned front-to-back compositing; kernel chosen at import time."""
    config = config or RenderConfig()
    stats = RenderStats()
    t0 = time.perf_counter()
    h, w = intr.height, intr.width
    bg = np.asarray(background, dtype=np.float64).reshape(3)
    rgb = np.zeros((h, w, 3))
    wsum = np.zeros((h, w))

    proj, inv_abc, radius, idx = _prepare(scene, intr, pose, config, stats)

    tile = config.tile
    tiles_x = (w + tile - 1) // tile
    tiles_y = (h + tile - 1) // tile
    bins: dict[tuple[int, int], list[int]] = {}
    mean2d = proj["mean2d"]
    for i in idx:  # idx is depth-sorted, so each bin list stays sorted
        r = radius[i] + 1.0
        x0 = max(int((mean2d[i, 0] - r) // tile), 0)
        x1 = min(int((mean2d[i, 0] + r) // tile), tiles_x - 1)
        y0 = max(int((mean2d[i, 1] - r) // tile), 0)
        y1 = min(int((mean2d[i, 1] + r) // tile), tiles_y - 1)
        if x1 < x0 or y1 < y0:
            continue
        for ty in range(y0, y1 + 1):
            for tx in range(x0, x1 + 1):
                bins.setdefault((ty, tx), []).append(i)

    alphas_eff = np.minimum(proj_alpha(scene), config.alpha_clamp)
    colors = proj["color"]
    for (ty, tx), members in bins.items():
        ys = np.arange(ty * tile, min((ty + 1) * tile, h), dtype=np.float64) + 0.5
        xs = np.arange(tx * tile, min((tx + 1) * tile, w), dtype=np.float64) + 0.5
        sel = np.asarray(members, dtype=np.intp)
        tile_rgb = np.zeros((ys.size, xs.size, 3))
        tile_w = np.zeros((ys.size, xs.size))
        compose_tile(tile_rgb, tile_w, xs, ys,
                     np.ascontiguousarray(mean2d[sel]),
                     np.ascontiguousarray(inv_abc[sel]),
                     np.ascontiguousarray(alphas_eff[sel]),
                     np.ascontiguousarray(colors[sel]),
                     config.alpha_cutoff, config.alpha_clamp, config.t_stop)
        rgb[ty * tile:ty * tile + ys.size, tx * tile:tx * tile + xs.size] = tile_rgb
        wsum[ty * tile:ty * tile + ys.size, tx * tile:tx * tile + xs.size] = tile_w

    rgb += bg[None, None, :] * (1.0 - wsum)[:, :, None]
    stats.ms = (time.perf_counter() - t0) * 1e3
    return RenderResult(rgb=rgb, alpha=wsum, stats=stats)


def proj_alpha(scene: GaussianScene) -> np.ndarray:
    return np.asarray(scene.alpha, dtype=np.float64)


def render_bruteforce(scene: GaussianScene, intr: CameraIntrinsics, pose: CameraPose,
                      background=(0.0, 0.0, 0.0),
                      config: RenderConfig | None = None) -> RenderResult:
    """Per-pixel oracle: every gaussian against every pixel, full accumulation.

    O(pixels * primitives); intended for small fixture scenes.
    """
    config = config or RenderConfig()
    stats = RenderStats()
    t0 = time.perf_counter()
    h, w = intr.height, intr.width
    bg = np.asarray(background, dtype=np.float64).reshape(3)

    proj, inv_abc, _radius, idx = _prepare(scene, intr, pose, config, stats)
    xs = np.arange(w, dtype=np.float64) + 0.5
    ys = np.arange(h, dtype=np.float64) + 0.5
    px = np.repeat(ys, w), np.tile(xs, h)

    if idx.size == 0:
        rgb = np.tile(bg, (h, w, 1)).astype(np.float64)
        stats.ms = (time.perf_counter() - t0) * 1e3
        return RenderResult(rgb=rgb, alpha=np.zeros((h, w)), stats=stats)

    mean2d = proj["mean2d"][idx]
    inv_sel = inv_abc[idx]
    alphas = np.minimum(proj_alpha(scene)[idx], config.alpha_clamp)
    colors = proj["color"][idx]

    dx = px[1][None, :] - mean2d[:, 0, None]
    dy = px[0][None, :] - mean2d[:, 1, None]
    q = (inv_sel[:, 0, None] * dx * dx + 2.0 * inv_sel[:, 1, None] * dx * dy
         + inv_sel[:, 2, None] * dy * dy)
    a = alphas[:, None] * np.exp(-0.5 * q)
    np.minimum(a, config.alpha_clamp, out=a)
    a[a < config.alpha_cutoff] = 0.0

    trans = np.cumprod(1.0 - a, axis=0)
    t_prev = np.vstack([np.ones((1, h * w)), trans[:-1]])
    weights = a * t_prev
    wsum = weights.sum(axis=0)
    rgb = weights.T @ colors + bg[None, :] * (1.0 - wsum)[:, None]
    stats.ms = (time.perf_counter() - t0) * 1e3
    return RenderResult(rgb=rgb.reshape(h, w, 3), alpha=wsum.reshape(h, w), stats=stats)


__all__ = [
    "RenderConfig",
    "RenderResult",
    "RenderStats",
    "kernel_name",
    "project",
    "render",
    "render_bruteforce",
]
