"""Event warping, event-frame accumulation and the alignment objectives.

The motion model is a first-order similarity flow: per-second horizontal
and vertical translation, divergence and in-plane rotation about a warp
center. Warping an event subtracts its accumulated flow, transporting it
back to the slice start t0; a well-chosen model collapses each scene edge
onto a single sharp location.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np

from . import _kernels
from .errors import EmptySlice
from .events import Event, EventSlice

__all__ = [
    "WarpParams",
    "EventFrame",
    "warp_event",
    "warp_points",
    "project",
    "temporal_gradient_loss",
    "contrast_score",
]


@dataclass(frozen=True)
class WarpParams:
    """Four-parameter 2D motion model plus its warp center.

    theta_x, theta_y: translation rates (px/s); theta_z: divergence rate
    (1/s); theta_r: in-plane rotation rate (rad/s); center: (cx, cy) pixel
    the divergence/rotation components act about.
    """

    theta_x: float = 0.0
    theta_y: float = 0.0
    theta_z: float = 0.0
    theta_r: float = 0.0
    center: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        values = (self.theta_x, self.theta_y, self.theta_z, self.theta_r, *self.center)
        if not all(np.isfinite(v) for v in values):
            raise ValueError(f"non-finite warp parameters: {values}")

    def as_vector(self) -> np.ndarray:
        return np.array([self.theta_x, self.theta_y, self.theta_z, self.theta_r])

    @classmethod
    def from_vector(cls, vec, center) -> "WarpParams":
        tx, ty, tz, tr = (float(v) for v in vec)
        return cls(tx, ty, tz, tr, (float(center[0]), float(center[1])))

    def with_center(self, center) -> "WarpParams":
        return replace(self, center=(float(center[0]), float(center[1])))

    @property
    def is_zero(self) -> bool:
        return self.theta_x == self.theta_y == self.theta_z == self.theta_r == 0.0


@dataclass
class EventFrame:
    """Per-pixel accumulators of one projected slice.

    count: accumulated bilinear event weight; mean_t / var_t: weighted mean
    and (population) variance of t - t0 where count > 0, zero elsewhere;
    support: number of pixels with count > 0; dropped: events warped out of
    bounds; t0: slice start the frame was projected to.
    """

    count: np.ndarray
    mean_t: np.ndarray
    var_t: np.ndarray
    support: int
    dropped: int
    t0: float

    @property
    def support_mask(self) -> np.ndarray:
        return self.count > 0.0

    @property
    def shape(self) -> Tuple[int, int]:
        return self.count.shape


def warp_points(xs, ys, ts, theta: WarpParams, t0: float):
    """Vectorized warp: transport points at times ts back to t0.

    With dt = t - t0 and d = p - center, the flow at p is
    (theta_x + theta_z*dx - theta_r*dy, theta_y + theta_z*dy + theta_r*dx)
    and the warped point is p - dt * flow.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    dt = np.asarray(ts, dtype=np.float64) - t0
    cx, cy = theta.center
    dx = xs - cx
    dy = ys - cy
    u = xs - dt * (theta.theta_x + theta.theta_z * dx - theta.theta_r * dy)
    v = ys - dt * (theta.theta_y + theta.theta_z * dy + theta.theta_r * dx)
    return u, v


def warp_event(e: Event, theta: WarpParams, t0: float) -> Tuple[float, float]:
    """Warped continuous position of a single event."""
    u, v = warp_points(
        np.array([e.x], dtype=np.float64),
        np.array([e.y], dtype=np.float64),
        np.array([e.t], dtype=np.float64),
        theta,
        t0,
    )
    return float(u[0]), float(v[0])


def project(slice_: EventSlice, theta: WarpParams) -> EventFrame:
    """Warp a slice by theta and accumulate it into an event frame.

    Each warped event is splatted with bilinear weights; timestamps are
    accumulated with the same weights, so mean_t / var_t are the weighted
    per-pixel mean and variance of t - t0. Out-of-bounds events are
    dropped and counted.
    """
    if len(slice_) == 0:
        raise EmptySlice("cannot project an empty slice")
    cx, cy = theta.center
    sum_w, sum_wt, sum_wt2, dropped = _kernels.accumulate(
        slice_.xs, slice_.ys, slice_.ts, slice_.t0,
        theta.theta_x, theta.theta_y, theta.theta_z, theta.theta_r,
        cx, cy, slice_.width, slice_.height,
    )
    mask = sum_w > 0.0
    mean_t = np.zeros_like(sum_w)
    var_t = np.zeros_like(sum_w)
    mean_t[mask] = sum_wt[mask] / sum_w[mask]
    var_t[mask] = sum_wt2[mask] / sum_w[mask] - mean_t[mask] ** 2
    np.maximum(var_t, 0.0, out=var_t)  # clip float cancellation noise
    return EventFrame(
        count=sum_w,
        mean_t=mean_t,
        var_t=var_t,
        support=int(np.count_nonzero(mask)),
        dropped=dropped,
        t0=slice_.t0,
    )


def temporal_gradient_loss(frame: EventFrame) -> float:
    """Mean gradient-norm of the per-pixel mean timestamp (s/px).

    Central differences in the interior, one-sided at image borders;
    a component is evaluated only where the pixel and the neighbors it
    reads are supported. A perfectly compensated slice has near-constant
    mean_t and a loss near zero.
    """
    if frame.support == 0:
        raise EmptySlice("temporal gradient of a frame without support")
    return float(_kernels.gradient_loss(frame.mean_t, frame.support_mask))


def contrast_score(slice_: EventSlice, theta: WarpParams) -> float:
    """Count-normalized sharpness of the projected slice: Var(count)/mean(count).

    Both moments are taken over the full frame, which makes the score
    roughly the event mass per covered pixel: it is maximal when the warp
    concentrates events onto few pixels, size-comparable across clusters,
    and zero for a perfectly uniform frame. This is the single swap point
    for alternate contrast reductions.
    """
    frame = project(slice_, theta)
    total = float(frame.count.sum())
    if total <= 0.0:
        return 0.0
    n_pixels = frame.count.size
    mean = total / n_pixels
    var = float(np.mean(frame.count * frame.count)) - mean * mean
    return max(var, 0.0) / mean
