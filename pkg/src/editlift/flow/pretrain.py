"""Flow-matching pretraining for the toy backbone.

The production editor builds on a pretrained model; at desk scale we create
that asset ourselves by training the velocity field on synthetic
(source, prompt, target) triplets: identity tasks (target == source) teach
in-context copying, recolor tasks teach prompt-conditioned edits.  This runs
once, before the self-supervised consistency fine-tune, and never shares
scenes with the evaluation benchmark.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import TrainingError
from ..numerics import AdamW, Tensor
from .model import VelocityModel
from .sampling import EditPrompt


@dataclass
class PretrainConfig:
    steps: int = 1500
    lr: float = 2e-3
    seed: int = 0
    t_one_fraction: float = 0.5  # fraction of steps trained at t=1 (the sampling time)


def pretrain_editor(model: VelocityModel,
                    tasks: list[tuple[np.ndarray, EditPrompt, np.ndarray]],
                    config: PretrainConfig,
                    log_path: str | Path | None = None) -> list[dict]:
    """Train all backbone parameters with the rectified-flow matching loss."""
    if not tasks:
        raise TrainingError("pretraining needs at least one task")
    opt = AdamW(model.params, lr=config.lr)
    log: list[dict] = []
    fh = open(log_path, "w") if log_path else None
    try:
        for step in range(config.steps):
            rng = np.random.default_rng(np.random.SeedSequence(entropy=config.seed,
                                                               spawn_key=(step,)))
            src, prompt, tgt = tasks[int(rng.integers(len(tasks)))]
            t = 1.0 if rng.random() < config.t_one_fraction else float(rng.uniform(0.0, 1.0))
            eps = rng.standard_normal(tgt.shape)
            z_t = (1.0 - t) * tgt + t * eps
            started = time.perf_counter()
            velocity, _ = model.forward(Tensor(z_t), t, prompt.ids, source=Tensor(src))
            diff = velocity - Tensor(eps - tgt)
            loss = (diff * diff).mean()
            if not np.isfinite(loss.data):
                raise TrainingError(f"non-finite pretraining loss at step {step}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            record = {"step": step, "loss": float(loss.data),
                      "wall_ms": (time.perf_counter() - started) * 1e3}
            log.append(record)
            if fh:
                fh.write(json.dumps(record) + "\n")
    finally:
        if fh:
            fh.close()
    return log
