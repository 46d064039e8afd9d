"""Pluggable text/image embedders and text-guided patch localization.

The toy embedder stands in for the pretrained text-image encoders: a patch
is described by a soft-binned joint color histogram plus mean squared
gradients, L2-normalized; text maps recognized color words and object nouns
to solid-color prototype descriptors in the same space.  The histogram
soft-binning is smooth, so dense features carry analytic gradients.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import tensorio, vocab
from .errors import PerceptionError
from .numerics import Tensor, as_tensor, concat, exp, sqrt

HIST_BINS = 4
HIST_SIGMA = 0.125
GRAD_WEIGHT = 0.5
OBJECT_WEIGHT = 0.6
_BIN_CENTERS = (np.arange(HIST_BINS) + 0.5) / HIST_BINS


class Embedder(ABC):
    """Text and image encoders sharing one embedding space."""

    @abstractmethod
    def embed_text(self, prompt: str) -> np.ndarray:
        """Unit vector for a prompt."""

    @abstractmethod
    def embed_patch(self, patch):
        """Unit vector for one image patch (same space as text)."""

    @abstractmethod
    def dense_features(self, image, patch_size: int):
        """(gh, gw, dim) grid of per-patch descriptors."""


@dataclass
class Localization:
    """Per-view argmax patch indices from text-guided matching."""

    left: tuple[int, int]
    right: tuple[int, int]
    scores_left: np.ndarray
    scores_right: np.ndarray

    @property
    def confidence(self) -> tuple[float, float]:
        return float(self.scores_left.max()), float(self.scores_right.max())


def partition_patches(image: np.ndarray, patch_size: int) -> np.ndarray:
    """Row-major (gh, gw, p, p, 3) grid of non-overlapping crops.

    Dimensions must divide exactly; the harness never produces sizes that
    need padding.
    """
    image = np.asarray(image, dtype=np.float64)
    h, w, c = image.shape
    if h % patch_size or w % patch_size:
        raise ValueError(f"image {h}x{w} not divisible by patch size {patch_size}")
    gh, gw = h // patch_size, w // patch_size
    return image.reshape(gh, patch_size, gw, patch_size, c).swapaxes(1, 2)


def _patch_batch(image: Tensor, patch_size: int) -> tuple[Tensor, int, int]:
    h, w, c = image.shape
    if h % patch_size or w % patch_size:
        raise ValueError(f"image {h}x{w} not divisible by patch size {patch_size}")
    gh, gw = h // patch_size, w // patch_size
    batch = image.reshape(gh, patch_size, gw, patch_size, c).transpose((0, 2, 1, 3, 4))
    return batch.reshape(gh * gw, patch_size, patch_size, c), gh, gw


class ToyColorEmbedder(Embedder):
    """Deterministic color-histogram embedder over the closed vocabulary."""

    def __init__(self):
        self._prototypes = {
            word: self._solid_descriptor(rgb) for word, rgb in vocab.COLOR_WORDS.items()
        }

    @property
    def dim(self) -> int:
        return HIST_BINS ** 3 + 3

    # -- descriptors -----------------------------------------------------------

    @staticmethod
    def _channel_kernels(values: Tensor) -> Tensor:
        """Soft assignment of (..., 1) values to histogram bins (... , B)."""
        centers = Tensor(_BIN_CENTERS)
        d = values - centers
        k = exp(d * d * (-0.5 / (HIST_SIGMA * HIST_SIGMA)))
        return k / k.sum(axis=-1, keepdims=True)

    def _descriptor_batch(self, patches: Tensor) -> Tensor:
        """(N, p, p, 3) -> (N, dim) L2-normalized descriptors."""
        n, p, _, _ = patches.shape
        flat = patches.reshape(n, p * p, 3)
        kr = self._channel_kernels(flat[:, :, 0].reshape(n, p * p, 1))
        kg = self._channel_kernels(flat[:, :, 1].reshape(n, p * p, 1))
        kb = self._channel_kernels(flat[:, :, 2].reshape(n, p * p, 1))
        b = HIST_BINS
        joint = (kr.reshape(n, p * p, b, 1, 1)
                 * kg.reshape(n, p * p, 1, b, 1)
                 * kb.reshape(n, p * p, 1, 1, b))
        hist = joint.mean(axis=1).reshape(n, b * b * b)

        gx = patches[:, :, 1:, :] - patches[:, :, :-1, :]
        gy = patches[:, 1:, :, :] - patches[:, :-1, :, :]
        grad = ((gx * gx).mean(axis=(1, 2)) + (gy * gy).mean(axis=(1, 2))) * GRAD_WEIGHT

        desc = concat([hist, grad], axis=1)
        norm = sqrt((desc * desc).sum(axis=1, keepdims=True))
        return desc / norm

    def _solid_descriptor(self, rgb) -> np.ndarray:
        patch = np.broadcast_to(np.asarray(rgb, dtype=np.float64), (2, 2, 3)).copy()
        return self._descriptor_batch(Tensor(patch[None]))[0].data

    # -- interface ------------------------------------------------------------

    def embed_text(self, prompt: str) -> np.ndarray:
        words = vocab.tokenize(prompt)
        mix = np.zeros(self.dim)
        recognized = 0
        for w in words:
            if w in vocab.COLOR_WORDS:
                mix += self._prototypes[w]
                recognized += 1
            elif w in vocab.OBJECT_WORDS:
                mix += OBJECT_WEIGHT * self._prototypes[vocab.OBJECT_WORDS[w]]
                recognized += 1
            elif w in vocab.STOP_WORDS:
                continue
            else:
                raise PerceptionError(
                    f"unknown prompt token {w!r}; vocabulary: {sorted(vocab.TOKEN_IDS)}")
        if recognized == 0:
            raise PerceptionError(
                f"prompt {prompt!r} has no content words; vocabulary: {sorted(vocab.TOKEN_IDS)}")
        return mix / np.linalg.norm(mix)

    def embed_patch(self, patch):
        is_tensor = isinstance(patch, Tensor)
        t = as_tensor(patch)
        out = self._descriptor_batch(t.reshape(1, *t.shape))[0]
        return out if is_tensor else out.data

    def dense_features(self, image, patch_size: int):
        is_tensor = isinstance(image, Tensor)
        t = as_tensor(image)
        batch, gh, gw = _patch_batch(t, patch_size)
        grid = self._descriptor_batch(batch).reshape(gh, gw, self.dim)
        return grid if is_tensor else grid.data


def toy_color_embedder() -> ToyColorEmbedder:
    return ToyColorEmbedder()


def localize(left_image, right_image, prompt: str, embedder: Embedder,
             patch_size: int = 32) -> Localization:
    """Independent per-view argmax of cosine(patch, prompt).

    Ties break to the smallest row-major index.  Runs on the pre-edit views.
    """
    try:
        text = embedder.embed_text(prompt)
        score_grids = []
        for img in (left_image, right_image):
            feats = embedder.dense_features(np.asarray(img, dtype=np.float64), patch_size)
            score_grids.append(feats @ text)
    except PerceptionError:
        raise
    except Exception as err:  # embedder implementations may fail arbitrarily
        raise PerceptionError(f"embedder failed during localization: {err}") from err
    sl, sr = score_grids
    li = int(np.argmax(sl))
    ri = int(np.argmax(sr))
    return Localization(
        left=(li // sl.shape[1], li % sl.shape[1]),
        right=(ri // sr.shape[1], ri % sr.shape[1]),
        scores_left=sl, scores_right=sr)


def embed_image(embedder: Embedder, image: np.ndarray, patch_size: int = 32) -> np.ndarray:
    """Whole-image embedding: mean-pooled dense features, re-normalized."""
    feats = embedder.dense_features(np.asarray(image, dtype=np.float64), patch_size)
    pooled = feats.reshape(-1, feats.shape[-1]).mean(axis=0)
    return pooled / np.linalg.norm(pooled)


class EmbeddingCache:
    """Optional on-disk cache of per-image dense feature grids, keyed by
    image content hash and patch size."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _key(self, image: np.ndarray, patch_size: int) -> Path:
        import hashlib

        h = hashlib.sha256()
        h.update(np.ascontiguousarray(image, dtype=np.float64).tobytes())
        h.update(str(patch_size).encode())
        return self.directory / f"{h.hexdigest()}.bin"

    def dense_features(self, embedder: Embedder, image: np.ndarray, patch_size: int) -> np.ndarray:
        path = self._key(image, patch_size)
        if path.exists():
            tensors, _ = tensorio.load_tensors(path)
            return tensors["features"]
        feats = embedder.dense_features(np.asarray(image, dtype=np.float64), patch_size)
        tensorio.save_tensors(path, {"features": feats}, config={"patch_size": patch_size})
        return feats
