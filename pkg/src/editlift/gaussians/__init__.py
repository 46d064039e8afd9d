"""3D Gaussian scene representation and file I/O."""

from .core import (
    GaussianPrimitive,
    GaussianScene,
    SH_C0,
    SH_C1,
    SH_C2,
    SH_C3,
    covariance,
    eval_sh,
    quat_to_rotmat,
    rgb_to_dc,
    sh_basis,
    sh_coeff_count,
)
from .ply import read_ply, write_ply

__all__ = [
    "GaussianPrimitive",
    "GaussianScene",
    "SH_C0",
    "SH_C1",
    "SH_C2",
    "SH_C3",
    "covariance",
    "eval_sh",
    "quat_to_rotmat",
    "read_ply",
    "rgb_to_dc",
    "sh_basis",
    "sh_coeff_count",
    "write_ply",
]
