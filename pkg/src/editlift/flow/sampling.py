"""Noising, single-step sampling, and decoding for the flow editor."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import vocab
from ..errors import ConfigError, InferenceError
from ..numerics import Tensor, as_tensor, clamp
from .model import VelocityModel


@dataclass
class EditPrompt:
    """A tokenized edit instruction over the closed vocabulary."""

    text: str
    ids: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.ids is None:
            self.ids = vocab.encode(self.text)
        self.ids = np.asarray(self.ids, dtype=np.int64)
        if self.ids.size and (self.ids.min() < 0 or self.ids.max() >= vocab.VOCAB_SIZE):
            raise ConfigError(f"token ids {self.ids} outside vocabulary of size {vocab.VOCAB_SIZE}")


NULL_PROMPT = EditPrompt(text="", ids=np.array([vocab.TOKEN_IDS[vocab.NULL_TOKEN]]))


@dataclass
class Latent:
    """Editor state: pixel-space latent plus its flow time."""

    z: Tensor
    t: float
    velocity: Tensor | None = None  # cached by euler_single_step

    def __post_init__(self):
        self.z = as_tensor(self.z)
        if not (0.0 <= self.t <= 1.0):
            raise ConfigError(f"flow time {self.t} outside [0, 1]")


def perturb(source, noise, strength: float = 1.0) -> Latent:
    """z1 = (1 - strength) * z_src + strength * eps, at t = 1.

    With the default strength 1 the latent is pure noise; the source still
    conditions the edit through in-context tokens.
    """
    if not (0.0 < strength <= 1.0):
        raise ConfigError(f"strength {strength} outside (0, 1]")
    src = source.z if isinstance(source, Latent) else as_tensor(source)
    eps = as_tensor(noise)
    if eps.shape != src.shape:
        raise ConfigError(f"noise shape {eps.shape} != source shape {src.shape}")
    return Latent(z=(1.0 - strength) * src + strength * eps, t=1.0)


def euler_single_step(z1: Latent, c: EditPrompt, model: VelocityModel,
                      source=None) -> Latent:
    """z0 = z1 - v(z1, 1, c): the whole sampling procedure, one forward only."""
    if z1.t != 1.0:
        raise ConfigError(f"euler_single_step expects a latent at t=1, got t={z1.t}")
    velocity, _ = model.forward(z1.z, 1.0, c.ids, source=source)
    if not np.all(np.isfinite(velocity.data)):
        raise InferenceError("velocity field produced non-finite values")
    z0 = z1.z - velocity
    return Latent(z=z0, t=0.0, velocity=velocity)


def forward_diffuse(x0, t: int, horizon: int = 1000, rng: np.random.Generator | None = None,
                    noise=None):
    """x_t = (1 - t/T) * x0 + (t/T) * eps on the linear flow schedule.

    ``noise`` overrides drawing eps from ``rng`` (used to share one draw
    across views).  Returns a Tensor when ``x0`` is one, else an ndarray.
    """
    if not (0 <= t <= horizon):
        raise ValueError(f"timestep {t} outside [0, {horizon}]")
    is_tensor = isinstance(x0, Tensor)
    x = as_tensor(x0)
    if noise is None:
        if rng is None:
            raise ValueError("either rng or noise must be provided")
        noise = rng.standard_normal(x.shape)
    eps = as_tensor(noise)
    frac = t / horizon
    out = (1.0 - frac) * x + frac * eps
    return out if is_tensor else out.data


def decode(z0: Latent):
    """Clamp-identity decoding of a pixel-space latent to an image in [0, 1]."""
    img = clamp(z0.z if isinstance(z0, Latent) else as_tensor(z0), 0.0, 1.0)
    return img


def forward_with_tap(x, t: float, c: EditPrompt, model: VelocityModel, layer: int,
                     source=None, n_views: int = 1):
    """Model output plus the post-block feature grid at ``layer``."""
    velocity, tap = model.forward(x, t, c.ids, source=source, n_views=n_views,
                                  tap_block=layer)
    return velocity, tap
