"""Pure-numpy compositing kernel (fallback for the compiled extension).

Semantics are shared with ``_compose_cy``: per pixel, walk the depth-sorted
gaussians front to back; contribution a = min(alpha * exp(-q/2), clamp);
values below the cutoff are skipped, and once the running transmittance
drops below ``t_stop`` later gaussians contribute nothing.
"""

from __future__ import annotations

import numpy as np


def compose_tile(rgb, wsum, xs, ys, means, inv_abc, alphas, colors,
                 alpha_cutoff, alpha_clamp, t_stop):
    """Accumulate into rgb (h, w, 3) and wsum (h, w) in place."""
    h = ys.shape[0]
    w = xs.shape[0]
    k = means.shape[0]
    if k == 0:
        return
    dx = xs[None, None, :] - means[:, 0, None, None]          # (K, 1, w)
    dy = ys[None, :, None] - means[:, 1, None, None]          # (K, h, 1)
    q = (inv_abc[:, 0, None, None] * dx * dx
         + 2.0 * inv_abc[:, 1, None, None] * dx * dy
         + inv_abc[:, 2, None, None] * dy * dy)               # (K, h, w)
    a = alphas[:, None, None] * np.exp(-0.5 * q)
    np.minimum(a, alpha_clamp, out=a)
    a[a < alpha_cutoff] = 0.0

    a = a.reshape(k, h * w)
    trans = np.cumprod(1.0 - a, axis=0)
    t_prev = np.vstack([np.ones((1, h * w)), trans[:-1]])
    weights = a * t_prev
    weights[t_prev < t_stop] = 0.0

    rgb += (weights.T @ colors).reshape(h, w, 3)
    wsum += weights.sum(axis=0).reshape(h, w)
