"""Pure-numpy implementations of the hot kernels.

The compiled extension in `_core.pyx` mirrors these functions exactly;
this module is the fallback selected at import time when the extension
is unavailable, and the baseline for the backend benchmark.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def accumulate(xs, ys, ts, t0, theta_x, theta_y, theta_z, theta_r, cx, cy,
               width, height):
    """Warp events back to t0 and splat them with bilinear weights.

    Returns (sum_w, sum_wt, sum_wt2, dropped) where the three images are
    per-pixel sums of the bilinear weight, weight*(t-t0) and
    weight*(t-t0)^2, and dropped counts events whose warped position fell
    outside [0, width-1] x [0, height-1].
    """
    dt = ts - t0
    dx = xs - cx
    dy = ys - cy
    u = xs - dt * (theta_x + theta_z * dx - theta_r * dy)
    v = ys - dt * (theta_y + theta_z * dy + theta_r * dx)

    inside = (u >= 0.0) & (u <= width - 1.0) & (v >= 0.0) & (v <= height - 1.0)
    dropped = int(len(u) - np.count_nonzero(inside))
    u, v, dt = u[inside], v[inside], dt[inside]

    # Clamp the base corner so u == width-1 splats fully onto the last column.
    x0 = np.minimum(np.floor(u), width - 2).astype(np.intp)
    y0 = np.minimum(np.floor(v), height - 2).astype(np.intp)
    fx = u - x0
    fy = v - y0

    sum_w = np.zeros(width * height, dtype=np.float64)
    sum_wt = np.zeros(width * height, dtype=np.float64)
    sum_wt2 = np.zeros(width * height, dtype=np.float64)

    base = y0 * width + x0
    dt2 = dt * dt
    for off, w in (
        (0, (1.0 - fx) * (1.0 - fy)),
        (1, fx * (1.0 - fy)),
        (width, (1.0 - fx) * fy),
        (width + 1, fx * fy),
    ):
        np.add.at(sum_w, base + off, w)
        np.add.at(sum_wt, base + off, w * dt)
        np.add.at(sum_wt2, base + off, w * dt2)

    shape = (height, width)
    return sum_w.reshape(shape), sum_wt.reshape(shape), sum_wt2.reshape(shape), dropped


def gradient_loss(mean_t, support):
    """Mean over supported pixels of the gradient norm of mean_t.

    Central differences in the interior, one-sided at image borders; a
    gradient component is only evaluated where the needed neighbors are
    supported, otherwise it contributes nothing (unsupported neighbors are
    excluded, not read as zero).
    """
    m = np.asarray(mean_t, dtype=np.float64)
    s = np.asarray(support, dtype=bool)
    n_support = int(np.count_nonzero(s))
    if n_support == 0:
        return 0.0

    gx = np.zeros_like(m)
    gy = np.zeros_like(m)

    # x component
    if m.shape[1] > 1:
        ok = s[:, 1:-1] & s[:, :-2] & s[:, 2:]
        gx[:, 1:-1][ok] = ((m[:, 2:] - m[:, :-2]) * 0.5)[ok]
        ok = s[:, 0] & s[:, 1]
        gx[:, 0][ok] = (m[:, 1] - m[:, 0])[ok]
        ok = s[:, -1] & s[:, -2]
        gx[:, -1][ok] = (m[:, -1] - m[:, -2])[ok]

    # y component
    if m.shape[0] > 1:
        ok = s[1:-1, :] & s[:-2, :] & s[2:, :]
        gy[1:-1, :][ok] = ((m[2:, :] - m[:-2, :]) * 0.5)[ok]
        ok = s[0, :] & s[1, :]
        gy[0, :][ok] = (m[1, :] - m[0, :])[ok]
        ok = s[-1, :] & s[-2, :]
        gy[-1, :][ok] = (m[-1, :] - m[-2, :])[ok]

    norms = np.sqrt(gx * gx + gy * gy)
    return float(norms[s].sum() / n_support)
