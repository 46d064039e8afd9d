"""Toy rectified-flow velocity field.

A small transformer over pixel-space latents with the double-stream /
single-stream split: double blocks keep image and text tokens in separate
projections but attend jointly; single blocks run one fused sequence.
Source-image tokens are concatenated into the image stream (in-context
conditioning), so editing stays conditional even from pure noise.

Positions are view-local: for an input that horizontally concatenates
``n_views`` views, the column code repeats per view, which makes identical
views produce identical per-view activations.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .. import lora as lora_mod
from .. import tensorio
from ..errors import ConfigError
from ..numerics import Tensor, concat, gelu, layer_norm, matmul, param, softmax, take
from ..vocab import VOCAB_SIZE


@dataclass
class EditorConfig:
    width: int = 64
    heads: int = 4
    double_blocks: int = 2
    single_blocks: int = 4
    patch_size: int = 8
    mlp_ratio: int = 2
    vocab_size: int = VOCAB_SIZE

    def __post_init__(self):
        if self.width % self.heads != 0:
            raise ConfigError(f"width {self.width} not divisible by heads {self.heads}")
        if self.width % 4 != 0:
            raise ConfigError(f"width {self.width} must be divisible by 4 for position codes")
        if self.double_blocks < 1 or self.single_blocks < 1:
            raise ConfigError("need at least one block per stream")

    @property
    def n_blocks(self) -> int:
        return self.double_blocks + self.single_blocks


def _sincos(values: np.ndarray, dim: int, base: float = 200.0) -> np.ndarray:
    """(N,) positions -> (N, dim) interleaved sin/cos code."""
    half = dim // 2
    freqs = base ** (-np.arange(half) / max(half - 1, 1))
    angles = values[:, None] * freqs[None, :]
    return np.concatenate([np.sin(angles), np.cos(angles)], axis=1)


def _grid_positions(gh: int, gw: int, n_views: int, dim: int) -> np.ndarray:
    """View-local 2D position code for a (gh, gw) token grid."""
    if gw % n_views != 0:
        raise ConfigError(f"token width {gw} not divisible by n_views {n_views}")
    local = gw // n_views
    rows = np.repeat(np.arange(gh, dtype=np.float64), gw)
    cols = np.tile(np.arange(gw, dtype=np.float64) % local, gh)
    return np.concatenate([_sincos(rows, dim // 2), _sincos(cols, dim // 2)], axis=1)


class VelocityModel:
    """Transformer velocity field with LoRA attachment points."""

    def __init__(self, config: EditorConfig, rng: np.random.Generator):
        self.config = config
        self.params: dict[str, Tensor] = {}
        self.adapters: dict[lora_mod.LoraPlacement, lora_mod.LoraAdapter] = {}
        self._by_path: dict[str, lora_mod.LoraAdapter] = {}
        self.forward_calls = 0
        self._init_params(rng)

    # -- parameters ---------------------------------------------------------

    def _add(self, name: str, shape: tuple[int, ...], rng: np.random.Generator,
             zero: bool = False, std: float | None = None) -> None:
        if zero:
            data = np.zeros(shape)
        else:
            scale = std if std is not None else 1.0 / np.sqrt(shape[-1])
            data = rng.standard_normal(shape) * scale
        self.params[name] = param(data, name=name)

    def _init_params(self, rng: np.random.Generator) -> None:
        cfg = self.config
        d = cfg.width
        pdim = cfg.patch_size * cfg.patch_size * 3
        self._add("patch_embed.weight", (d, pdim), rng)
        self._add("patch_embed.bias", (d,), rng, zero=True)
        self._add("text_embed.weight", (cfg.vocab_size, d), rng, std=0.5)
        self._add("segment.weight", (2, d), rng, std=0.5)
        self._add("time_mlp.w1", (d, d), rng)
        self._add("time_mlp.b1", (d,), rng, zero=True)
        self._add("time_mlp.w2", (d, d), rng)
        self._add("time_mlp.b2", (d,), rng, zero=True)
        m = d * cfg.mlp_ratio
        for i in range(cfg.double_blocks):
            for stream in ("img", "txt"):
                self._add(f"double.{i}.{stream}_qkv.weight", (3 * d, d), rng)
                self._add(f"double.{i}.{stream}_qkv.bias", (3 * d,), rng, zero=True)
                self._add(f"double.{i}.{stream}_proj.weight", (d, d), rng)
                self._add(f"double.{i}.{stream}_proj.bias", (d,), rng, zero=True)
                self._add(f"double.{i}.{stream}_mlp.w1", (m, d), rng)
                self._add(f"double.{i}.{stream}_mlp.b1", (m,), rng, zero=True)
                self._add(f"double.{i}.{stream}_mlp.w2", (d, m), rng)
                self._add(f"double.{i}.{stream}_mlp.b2", (d,), rng, zero=True)
        for i in range(cfg.single_blocks):
            self._add(f"single.{i}.qkv.weight", (3 * d, d), rng)
            self._add(f"single.{i}.qkv.bias", (3 * d,), rng, zero=True)
            self._add(f"single.{i}.proj.weight", (d, d), rng)
            self._add(f"single.{i}.proj.bias", (d,), rng, zero=True)
            self._add(f"single.{i}.mlp.w1", (m, d), rng)
            self._add(f"single.{i}.mlp.b1", (m,), rng, zero=True)
            self._add(f"single.{i}.mlp.w2", (d, m), rng)
            self._add(f"single.{i}.mlp.b2", (d,), rng, zero=True)
        # zero-initialized head: an untrained model is the identity flow
        self._add("head.weight", (pdim, d), rng, zero=True)
        self._add("head.bias", (pdim,), rng, zero=True)

    def backbone_checksum(self) -> str:
        h = hashlib.sha256()
        for name in sorted(self.params):
            h.update(name.encode())
            h.update(np.ascontiguousarray(self.params[name].data).tobytes())
        return h.hexdigest()

    # -- adapters -------------------------------------------------------------

    def attach_adapters(self, adapters: dict[lora_mod.LoraPlacement, lora_mod.LoraAdapter]) -> None:
        by_path: dict[str, lora_mod.LoraAdapter] = {}
        for placement, adapter in adapters.items():
            path = placement.param_path()
            if path not in self.params:
                raise ConfigError(
                    f"placement {placement.key()} addresses missing block "
                    f"(model has {self.config.double_blocks}+{self.config.single_blocks} blocks)")
            d_out, d_in = self.params[path].shape
            if adapter.a.shape[1] != d_in or adapter.b.shape[0] != d_out:
                raise ConfigError(f"adapter for {placement.key()} does not fit {self.params[path].shape}")
            by_path[path] = adapter
        self.adapters = dict(adapters)
        self._by_path = by_path

    def detach_adapters(self) -> None:
        self.adapters = {}
        self._by_path = {}

    def make_adapters(self, rng: np.random.Generator, rank: int = lora_mod.PAPER_RANK,
                      scale: float = 1.0,
                      placements: list[lora_mod.LoraPlacement] | None = None,
                      ) -> dict[lora_mod.LoraPlacement, lora_mod.LoraAdapter]:
        if placements is None:
            placements = lora_mod.placements_for(self.config.double_blocks,
                                                 self.config.single_blocks)
        out = {}
        for placement in placements:
            path = placement.param_path()
            if path not in self.params:
                raise ConfigError(f"placement {placement.key()} out of range for this model")
            d_out, d_in = self.params[path].shape
            out[placement] = lora_mod.LoraAdapter.create(
                d_in, d_out, rank, rng, scale=scale, name=f"lora.{placement.key()}")
        return out

    def adapter_params(self) -> dict[str, Tensor]:
        out = {}
        for placement, adapter in self.adapters.items():
            out[f"lora.{placement.key()}.A"] = adapter.a
            out[f"lora.{placement.key()}.B"] = adapter.b
        return out

    # -- forward ----------------------------------------------------------------

    def _proj(self, x: Tensor, path: str) -> Tensor:
        w = self.params[path + ".weight"]
        adapter = self._by_path.get(path + ".weight")
        if adapter is not None:
            y = lora_mod.apply(w, adapter, x)
        else:
            y = matmul(x, w.T)
        bias = self.params.get(path + ".bias")
        return y + bias if bias is not None else y

    def _mlp(self, x: Tensor, path: str) -> Tensor:
        h = matmul(x, self.params[path + ".w1"].T) + self.params[path + ".b1"]
        return matmul(gelu(h), self.params[path + ".w2"].T) + self.params[path + ".b2"]

    def _attention(self, q: Tensor, k: Tensor, v: Tensor) -> Tensor:
        n, d = q.shape
        heads = self.config.heads
        dh = d // heads
        qh = q.reshape(n, heads, dh).swapaxes(0, 1)
        kh = k.reshape(n, heads, dh).swapaxes(0, 1)
        vh = v.reshape(n, heads, dh).swapaxes(0, 1)
        att = softmax(matmul(qh, kh.swapaxes(1, 2)) * (1.0 / np.sqrt(dh)), axis=-1)
        out = matmul(att, vh)
        return out.swapaxes(0, 1).reshape(n, d)

    def _patchify(self, image: Tensor) -> tuple[Tensor, int, int]:
        p = self.config.patch_size
        h, w, c = image.shape
        if h % p or w % p:
            raise ConfigError(f"image {h}x{w} not divisible by patch size {p}")
        gh, gw = h // p, w // p
        tokens = image.reshape(gh, p, gw, p, c).transpose((0, 2, 1, 3, 4)).reshape(gh * gw, p * p * c)
        return tokens, gh, gw

    def _unpatchify(self, tokens: Tensor, gh: int, gw: int) -> Tensor:
        p = self.config.patch_size
        return tokens.reshape(gh, gw, p, p, 3).transpose((0, 2, 1, 3, 4)).reshape(gh * p, gw * p, 3)

    def resolve_block(self, index: int) -> int:
        n = self.config.n_blocks
        resolved = index + n if index < 0 else index
        if not (0 <= resolved < n):
            raise ConfigError(f"block index {index} out of range for {n} blocks")
        return resolved

    def forward(self, z, t: float, prompt_ids, source=None, n_views: int = 1,
                tap_block: int | None = None) -> tuple[Tensor, Tensor | None]:
        """Velocity for latent ``z`` at flow time ``t``.

        Returns (velocity, tap) where ``tap`` is the latent-token grid after
        the requested block, or None.
        """
        self.forward_calls += 1
        cfg = self.config
        d = cfg.width
        z = z if isinstance(z, Tensor) else Tensor(z)
        if tap_block is not None:
            tap_block = self.resolve_block(tap_block)

        lat_tokens, gh, gw = self._patchify(z)
        n_lat = lat_tokens.shape[0]
        lat = matmul(lat_tokens, self.params["patch_embed.weight"].T) + self.params["patch_embed.bias"]
        lat = lat + Tensor(_grid_positions(gh, gw, n_views, d)) + self.params["segment.weight"][0]

        if source is not None:
            source = source if isinstance(source, Tensor) else Tensor(source)
            src_tokens, sh, sw = self._patchify(source)
            src = matmul(src_tokens, self.params["patch_embed.weight"].T) + self.params["patch_embed.bias"]
            src = src + Tensor(_grid_positions(sh, sw, n_views, d)) + self.params["segment.weight"][1]
            img = concat([lat, src], axis=0)
        else:
            img = lat

        ids = np.asarray(prompt_ids, dtype=np.int64)
        txt = take(self.params["text_embed.weight"], ids, axis=0)

        temb = Tensor(_sincos(np.array([float(t)]), d, base=1000.0))
        temb = matmul(gelu(matmul(temb, self.params["time_mlp.w1"].T) + self.params["time_mlp.b1"]),
                      self.params["time_mlp.w2"].T) + self.params["time_mlp.b2"]
        img = img + temb
        txt = txt + temb

        tap: Tensor | None = None
        block_index = 0
        n_txt = txt.shape[0]
        for i in range(cfg.double_blocks):
            img_n = layer_norm(img)
            txt_n = layer_norm(txt)
            qkv_i = self._proj(img_n, f"double.{i}.img_qkv")
            qkv_t = self._proj(txt_n, f"double.{i}.txt_qkv")
            q = concat([qkv_t[:, :d], qkv_i[:, :d]], axis=0)
            k = concat([qkv_t[:, d:2 * d], qkv_i[:, d:2 * d]], axis=0)
            v = concat([qkv_t[:, 2 * d:], qkv_i[:, 2 * d:]], axis=0)
            att = self._attention(q, k, v)
            txt = txt + self._proj(att[:n_txt], f"double.{i}.txt_proj")
            img = img + self._proj(att[n_txt:], f"double.{i}.img_proj")
            txt = txt + self._mlp(layer_norm(txt), f"double.{i}.txt_mlp")
            img = img + self._mlp(layer_norm(img), f"double.{i}.img_mlp")
            if tap_block == block_index:
                tap = img[:n_lat].reshape(gh, gw, d)
            block_index += 1

        x = concat([txt, img], axis=0)
        for i in range(cfg.single_blocks):
            xn = layer_norm(x)
            qkv = self._proj(xn, f"single.{i}.qkv")
            att = self._attention(qkv[:, :d], qkv[:, d:2 * d], qkv[:, 2 * d:])
            x = x + self._proj(att, f"single.{i}.proj")
            x = x + self._mlp(layer_norm(x), f"single.{i}.mlp")
            if tap_block == block_index:
                tap = x[n_txt:n_txt + n_lat].reshape(gh, gw, d)
            block_index += 1

        out_tokens = matmul(layer_norm(x[n_txt:n_txt + n_lat]), self.params["head.weight"].T) \
            + self.params["head.bias"]
        velocity = self._unpatchify(out_tokens, gh, gw)
        return velocity, tap

    # -- serialization ---------------------------------------------------------

    def save(self, path: str | Path) -> None:
        tensorio.save_tensors(path, {k: v.data for k, v in self.params.items()},
                              config={"editor": asdict(self.config)})

    @staticmethod
    def load(path: str | Path) -> "VelocityModel":
        tensors, config = tensorio.load_tensors(path)
        cfg = EditorConfig(**config["editor"])
        model = VelocityModel(cfg, np.random.default_rng(0))
        for name, arr in tensors.items():
            if name not in model.params:
                raise ConfigError(f"unexpected tensor {name!r} in {path}")
            if model.params[name].data.shape != arr.shape:
                raise ConfigError(f"tensor {name!r} shape {arr.shape} does not match config")
            model.params[name].data = arr
        return model

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: v.data.copy() for k, v in self.params.items()}
