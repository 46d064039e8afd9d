"""PLY reader/writer for Gaussian scenes, using the community splat layout.

Vertices carry: x y z, nx ny nz (zeros), f_dc_0..2, f_rest_* (channel-major),
opacity as a pre-activation logit, scale_0..2 in log space, rot_0..3.
Binary little-endian, float32 per property.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import PlyParseError
from .core import GaussianScene, sh_coeff_count

_LOGIT_CLIP = 1e-7


def _property_names(sh_degree: int) -> list[str]:
    rest = 3 * (sh_coeff_count(sh_degree) - 1)
    names = ["x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"]
    names += [f"f_rest_{i}" for i in range(rest)]
    names += ["opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"]
    return names


def write_ply(scene: GaussianScene, path: str | Path, sidecar: bool = True) -> None:
    path = Path(path)
    g = len(scene)
    names = _property_names(scene.sh_degree)
    k = sh_coeff_count(scene.sh_degree)

    header = ["ply", "format binary_little_endian 1.0", f"element vertex {g}"]
    header += [f"property float {n}" for n in names]
    header.append("end_header")

    table = np.zeros((g, len(names)), dtype=np.float64)
    table[:, 0:3] = scene.mu
    alpha = np.clip(scene.alpha, _LOGIT_CLIP, 1.0 - _LOGIT_CLIP)
    table[:, 6:9] = scene.sh[:, :, 0]
    if k > 1:
        # channel-major: all of R's higher-order coefficients, then G's, then B's
        table[:, 9:9 + 3 * (k - 1)] = scene.sh[:, :, 1:].reshape(g, -1)
    base = 9 + 3 * (k - 1)
    table[:, base] = np.log(alpha / (1.0 - alpha))
    table[:, base + 1:base + 4] = np.log(scene.scale)
    table[:, base + 4:base + 8] = scene.rotation

    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        fh.write(np.ascontiguousarray(table, dtype="<f4").tobytes())

    if sidecar:
        meta = {"count": g, "sh_degree": scene.sh_degree, "canonical_view": scene.canonical_view}
        path.with_suffix(".json").write_text(json.dumps(meta, sort_keys=True) + "\n")


def read_ply(path: str | Path) -> GaussianScene:
    path = Path(path)
    raw = path.read_bytes()
    end = raw.find(b"end_header\n")
    if not raw.startswith(b"ply\n") or end < 0:
        raise PlyParseError(f"{path}: not a PLY file", offset=0)
    header_lines = raw[:end].decode("ascii").splitlines()
    body_offset = end + len(b"end_header\n")

    count = None
    names: list[str] = []
    fmt_ok = False
    for line in header_lines:
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "format":
            if parts[1] != "binary_little_endian":
                raise PlyParseError(f"{path}: unsupported format {parts[1]!r}", offset=raw.find(b"format"))
            fmt_ok = True
        elif parts[0] == "element" and parts[1] == "vertex":
            count = int(parts[2])
        elif parts[0] == "property":
            if parts[1] != "float":
                raise PlyParseError(f"{path}: unsupported property type {parts[1]!r}",
                                    offset=raw.find(line.encode("ascii")))
            names.append(parts[2])
    if not fmt_ok or count is None:
        raise PlyParseError(f"{path}: missing format or vertex element", offset=0)

    rest_count = sum(1 for n in names if n.startswith("f_rest_"))
    if rest_count % 3 != 0:
        raise PlyParseError(f"{path}: f_rest count {rest_count} not divisible by 3", offset=body_offset)
    k = rest_count // 3 + 1
    degree = int(np.sqrt(k)) - 1
    if sh_coeff_count(degree) != k:
        raise PlyParseError(f"{path}: {k} SH coefficients is not a full degree", offset=body_offset)

    for needed in _property_names(degree):
        if needed not in names:
            raise PlyParseError(f"{path}: missing property '{needed}'", offset=body_offset)

    expected = count * len(names) * 4
    if len(raw) - body_offset < expected:
        raise PlyParseError(f"{path}: truncated payload, expected {expected} bytes",
                            offset=len(raw))
    table = np.frombuffer(raw, dtype="<f4", count=count * len(names),
                          offset=body_offset).reshape(count, len(names)).astype(np.float64)
    col = {n: i for i, n in enumerate(names)}

    mu = table[:, [col["x"], col["y"], col["z"]]]
    dc = table[:, [col["f_dc_0"], col["f_dc_1"], col["f_dc_2"]]]
    sh = np.zeros((count, 3, k))
    sh[:, :, 0] = dc
    if k > 1:
        rest = table[:, [col[f"f_rest_{i}"] for i in range(3 * (k - 1))]]
        sh[:, :, 1:] = rest.reshape(count, 3, k - 1)
    logits = table[:, col["opacity"]]
    alpha = 1.0 / (1.0 + np.exp(-logits))
    scale = np.exp(table[:, [col["scale_0"], col["scale_1"], col["scale_2"]]])
    rot = table[:, [col["rot_0"], col["rot_1"], col["rot_2"], col["rot_3"]]]

    canonical = 0
    sidecar = path.with_suffix(".json")
    if sidecar.exists():
        meta = json.loads(sidecar.read_text())
        canonical = int(meta.get("canonical_view", 0))

    return GaussianScene(mu=mu, alpha=alpha, rotation=rot, scale=scale, sh=sh,
                         sh_degree=degree, canonical_view=canonical)
