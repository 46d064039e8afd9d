"""3D Gaussian primitives: parameterization, covariance, SH color."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError

# Real spherical harmonics constants, degrees 0..3 (y/z/x ordering as used
# by splatting renderers).
SH_C0 = 0.28209479177387814
SH_C1 = 0.4886025119029199
SH_C2 = (
    1.0925484305920792,
    -1.0925484305920792,
    0.31539156525252005,
    -1.0925484305920792,
    0.5462742152960396,
)
SH_C3 = (
    -0.5900435899266435,
    2.890611442640554,
    -0.4570457994644658,
    0.3731763325901154,
    -0.4570457994644658,
    1.445305721320277,
    -0.5900435899266435,
)


def sh_coeff_count(degree: int) -> int:
    return (degree + 1) ** 2


def quat_to_rotmat(q: np.ndarray) -> np.ndarray:
    """Rotation matrices from unit quaternions (w, x, y, z); shape (..., 4) -> (..., 3, 3)."""
    q = np.asarray(q, dtype=np.float64)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    rot = np.empty(q.shape[:-1] + (3, 3), dtype=np.float64)
    rot[..., 0, 0] = 1 - 2 * (y * y + z * z)
    rot[..., 0, 1] = 2 * (x * y - w * z)
    rot[..., 0, 2] = 2 * (x * z + w * y)
    rot[..., 1, 0] = 2 * (x * y + w * z)
    rot[..., 1, 1] = 1 - 2 * (x * x + z * z)
    rot[..., 1, 2] = 2 * (y * z - w * x)
    rot[..., 2, 0] = 2 * (x * z - w * y)
    rot[..., 2, 1] = 2 * (y * z + w * x)
    rot[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return rot


def covariance(rotation: np.ndarray, scale: np.ndarray) -> np.ndarray:
    """Sigma = R diag(s) diag(s) R^T; symmetric positive definite for s > 0.

    Accepts a single quaternion/scale or batches with matching leading dims.
    """
    rotation = np.asarray(rotation, dtype=np.float64)
    scale = np.asarray(scale, dtype=np.float64)
    norm = np.linalg.norm(rotation, axis=-1)
    if np.any(np.abs(norm - 1.0) > 1e-6):
        raise ValidationError(f"quaternion norm {norm} deviates from 1 beyond 1e-6")
    if np.any(scale <= 0):
        raise ValidationError("scales must be strictly positive")
    rot = quat_to_rotmat(rotation)
    rs = rot * scale[..., None, :]
    return rs @ rs.swapaxes(-1, -2)


def eval_sh(sh: np.ndarray, direction: np.ndarray, degree: int) -> np.ndarray:
    """Evaluate per-channel SH color for a view direction.

    ``sh`` has shape (..., 3, (degree+1)^2); ``direction`` is a unit 3-vector
    (or batch).  Follows the splatting convention: add 0.5, clamp to [0, 1].
    """
    sh = np.asarray(sh, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)
    count = sh_coeff_count(degree)
    if sh.shape[-1] != count:
        raise ValidationError(
            f"expected {count} SH coefficients per channel for degree {degree}, got {sh.shape[-1]}")
    basis = sh_basis(direction, degree)
    color = np.einsum("...ck,...k->...c", sh, basis) + 0.5
    return np.clip(color, 0.0, 1.0)


def sh_basis(direction: np.ndarray, degree: int) -> np.ndarray:
    """Real SH basis values Y_l^m(direction), shape (..., (degree+1)^2)."""
    d = np.asarray(direction, dtype=np.float64)
    x, y, z = d[..., 0], d[..., 1], d[..., 2]
    values = [np.full(np.shape(x), SH_C0)]
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
    if degree > 3:
        raise ValidationError(f"SH degree {degree} unsupported (max 3)")
    return np.stack(values, axis=-1)


def rgb_to_dc(rgb: np.ndarray) -> np.ndarray:
    """DC coefficient that reproduces ``rgb`` under eval_sh at degree 0."""
    return (np.asarray(rgb, dtype=np.float64) - 0.5) / SH_C0


@dataclass
class GaussianPrimitive:
    """One splat: center, opacity, rotation, scale, per-channel SH coefficients."""

    mu: np.ndarray
    alpha: float
    rotation: np.ndarray
    scale: np.ndarray
    sh: np.ndarray  # (3, (L+1)^2)

    def validate(self, degree: int) -> None:
        mu = np.asarray(self.mu, dtype=np.float64)
        if mu.shape != (3,) or not np.all(np.isfinite(mu)):
            raise ValidationError(f"bad center {mu}")
        if not (0.0 < self.alpha <= 1.0):
            raise ValidationError(f"opacity {self.alpha} outside (0, 1]")
        r = np.asarray(self.rotation, dtype=np.float64)
        if abs(np.linalg.norm(r) - 1.0) > 1e-6:
            raise ValidationError(f"quaternion {r} not unit-norm within 1e-6")
        s = np.asarray(self.scale, dtype=np.float64)
        if np.any(s <= 0):
            raise ValidationError(f"scale {s} not strictly positive")
        sh = np.asarray(self.sh, dtype=np.float64)
        if sh.shape != (3, sh_coeff_count(degree)) or not np.all(np.isfinite(sh)):
            raise ValidationError(f"bad SH block of shape {sh.shape} for degree {degree}")


@dataclass
class GaussianScene:
    """A set of primitives in the canonical frame (struct-of-arrays storage).

    ``canonical_view`` records which input view anchors the frame.
    """

    mu: np.ndarray          # (G, 3)
    alpha: np.ndarray       # (G,)
    rotation: np.ndarray    # (G, 4)
    scale: np.ndarray       # (G, 3)
    sh: np.ndarray          # (G, 3, (L+1)^2)
    sh_degree: int = 1
    canonical_view: int = 0

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=np.float64).reshape(-1, 3)
        g = len(self.mu)
        self.alpha = np.asarray(self.alpha, dtype=np.float64).reshape(g)
        self.rotation = np.asarray(self.rotation, dtype=np.float64).reshape(g, 4)
        self.scale = np.asarray(self.scale, dtype=np.float64).reshape(g, 3)
        self.sh = np.asarray(self.sh, dtype=np.float64).reshape(
            g, 3, sh_coeff_count(self.sh_degree))

    def __len__(self) -> int:
        return len(self.mu)

    @staticmethod
    def empty(sh_degree: int = 1, canonical_view: int = 0) -> "GaussianScene":
        k = sh_coeff_count(sh_degree)
        return GaussianScene(
            mu=np.zeros((0, 3)), alpha=np.zeros(0), rotation=np.zeros((0, 4)),
            scale=np.zeros((0, 3)), sh=np.zeros((0, 3, k)),
            sh_degree=sh_degree, canonical_view=canonical_view)

    @staticmethod
    def from_primitives(prims: list[GaussianPrimitive], sh_degree: int = 1,
                        canonical_view: int = 0) -> "GaussianScene":
        for p in prims:
            p.validate(sh_degree)
        if not prims:
            return GaussianScene.empty(sh_degree, canonical_view)
        return GaussianScene(
            mu=np.stack([p.mu for p in prims]),
            alpha=np.array([p.alpha for p in prims]),
            rotation=np.stack([p.rotation for p in prims]),
            scale=np.stack([p.scale for p in prims]),
            sh=np.stack([p.sh for p in prims]),
            sh_degree=sh_degree, canonical_view=canonical_view)

    def primitives(self) -> list[GaussianPrimitive]:
        return [
            GaussianPrimitive(self.mu[i], float(self.alpha[i]), self.rotation[i],
                              self.scale[i], self.sh[i])
            for i in range(len(self))
        ]

    def validate(self) -> None:
        for p in self.primitives():
            p.validate(self.sh_degree)
