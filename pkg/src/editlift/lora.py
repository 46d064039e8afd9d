"""Low-rank adapters on attention projections.

An adapter holds A (rank x d_in, Gaussian init) and B (d_out x rank, zero
init) so a fresh adapter is an exact no-op.  Placements address blocks by
stream kind and per-stream index; within a double-stream block the adapters
target the image-side projections.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import tensorio
from .errors import ConfigError
from .numerics import Tensor, matmul, param


@dataclass
class LoraAdapter:
    a: Tensor  # (rank, d_in)
    b: Tensor  # (d_out, rank)
    rank: int
    scale: float = 1.0

    @staticmethod
    def create(d_in: int, d_out: int, rank: int, rng: np.random.Generator,
               scale: float = 1.0, name: str = "lora") -> "LoraAdapter":
        if rank > min(d_in, d_out):
            raise ConfigError(f"rank {rank} exceeds min(d_in, d_out) = {min(d_in, d_out)}")
        a = rng.standard_normal((rank, d_in)) / np.sqrt(d_in)
        return LoraAdapter(
            a=param(a, name=f"{name}.A"),
            b=param(np.zeros((d_out, rank)), name=f"{name}.B"),
            rank=rank, scale=scale)


def apply(base_weight, adapter: LoraAdapter, x) -> Tensor:
    """y = x W^T + scale * (x A^T) B^T, i.e. the base projection plus the
    low-rank delta scale * B (A x)."""
    w = base_weight if isinstance(base_weight, Tensor) else Tensor(base_weight)
    x = x if isinstance(x, Tensor) else Tensor(x)
    d_out, d_in = w.shape
    if adapter.a.shape[1] != d_in or adapter.b.shape[0] != d_out \
            or adapter.a.shape[0] != adapter.rank or adapter.b.shape[1] != adapter.rank:
        raise ConfigError(
            f"adapter shapes A{adapter.a.shape} B{adapter.b.shape} do not fit weight {w.shape}")
    if x.shape[-1] != d_in:
        raise ConfigError(f"input width {x.shape[-1]} != d_in {d_in}")
    base = matmul(x, w.T)
    delta = matmul(matmul(x, adapter.a.T), adapter.b.T)
    return base + adapter.scale * delta


def merge(base_weight, adapter: LoraAdapter) -> np.ndarray:
    """Folded weight W' = W + scale * B A."""
    w = base_weight.data if isinstance(base_weight, Tensor) else np.asarray(base_weight)
    if (adapter.b.shape[0], adapter.a.shape[1]) != w.shape:
        raise ConfigError(f"cannot merge adapter {adapter.b.shape}x{adapter.a.shape} into {w.shape}")
    return w + adapter.scale * (adapter.b.data @ adapter.a.data)


@dataclass(frozen=True)
class LoraPlacement:
    stream: str  # "double" | "single"
    block: int   # index within the stream
    proj: str    # "qkv" | "proj"

    def __post_init__(self):
        if self.stream not in ("double", "single"):
            raise ConfigError(f"unknown stream kind {self.stream!r}")
        if self.proj not in ("qkv", "proj"):
            raise ConfigError(f"unknown projection {self.proj!r}")

    def key(self) -> str:
        return f"{self.stream}.{self.block}.{self.proj}"

    def param_path(self) -> str:
        if self.stream == "double":
            return f"double.{self.block}.img_{self.proj}.weight"
        return f"single.{self.block}.{self.proj}.weight"

    def global_block(self, n_double: int) -> int:
        return self.block if self.stream == "double" else n_double + self.block


PAPER_RANK = 4
PAPER_DOUBLE_BLOCKS = (17, 18)
PAPER_SINGLE_BLOCKS = (34, 35, 36, 37)


def paper_placements() -> list[LoraPlacement]:
    """The full-scale insertion positions: double-stream blocks 17-18 and
    single-stream blocks 34-37, qkv and proj each (12 adapters)."""
    out = []
    for b in PAPER_DOUBLE_BLOCKS:
        out += [LoraPlacement("double", b, "qkv"), LoraPlacement("double", b, "proj")]
    for b in PAPER_SINGLE_BLOCKS:
        out += [LoraPlacement("single", b, "qkv"), LoraPlacement("single", b, "proj")]
    return out


def scaled_placements(n_double: int, n_single: int) -> list[LoraPlacement]:
    """Deep-layer analog for small models: adapt the last half of each
    stream (at least one block per stream)."""
    if n_double < 1 or n_single < 1:
        raise ConfigError("model must have at least one block per stream")
    k_d = max(1, n_double // 2)
    k_s = max(1, n_single // 2)
    out = []
    for b in range(n_double - k_d, n_double):
        out += [LoraPlacement("double", b, "qkv"), LoraPlacement("double", b, "proj")]
    for b in range(n_single - k_s, n_single):
        out += [LoraPlacement("single", b, "qkv"), LoraPlacement("single", b, "proj")]
    return out


def placements_for(n_double: int, n_single: int) -> list[LoraPlacement]:
    """Paper positions when addressable, otherwise the scaled mapping."""
    if n_double > max(PAPER_DOUBLE_BLOCKS) and n_single > max(PAPER_SINGLE_BLOCKS):
        return paper_placements()
    return scaled_placements(n_double, n_single)


def save_adapters(path: str | Path, adapters: dict[LoraPlacement, LoraAdapter]) -> None:
    tensors: dict[str, np.ndarray] = {}
    meta: dict[str, dict] = {}
    for placement, adapter in adapters.items():
        key = placement.key()
        tensors[f"lora.{key}.A"] = adapter.a.data
        tensors[f"lora.{key}.B"] = adapter.b.data
        meta[key] = {"rank": adapter.rank, "scale": adapter.scale,
                     "stream": placement.stream, "block": placement.block,
                     "proj": placement.proj}
    tensorio.save_tensors(path, tensors, config={"adapters": meta})


def load_adapters(path: str | Path) -> dict[LoraPlacement, LoraAdapter]:
    tensors, config = tensorio.load_tensors(path)
    out: dict[LoraPlacement, LoraAdapter] = {}
    for key, meta in config["adapters"].items():
        placement = LoraPlacement(meta["stream"], int(meta["block"]), meta["proj"])
        out[placement] = LoraAdapter(
            a=param(tensors[f"lora.{key}.A"], name=f"lora.{key}.A"),
            b=param(tensors[f"lora.{key}.B"], name=f"lora.{key}.B"),
            rank=int(meta["rank"]), scale=float(meta["scale"]))
    return out
