"""Sparse feature tracklets over a FIFO buffer of motion-compensated frames.

The detector is a Harris corner response on the per-slice event-count
image; tracking extends each tracklet by normalized cross-correlation of
its last 11x11 patch inside a search disk on the newest frame. The
backend is deliberately classical and swappable: tests can inject
ground-truth tracklets through the same data type and text format.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.ndimage import gaussian_filter, maximum_filter

from .errors import EmptySlice
from .warp import EventFrame

__all__ = [
    "TrackerConfig",
    "Tracklet",
    "FrameBuffer",
    "Tracker",
    "detect_features",
    "load_tracklets",
    "save_tracklets",
]


@dataclass(frozen=True)
class TrackerConfig:
    max_feats: int = 60
    patch_radius: int = 5       # 11x11 template
    search_radius: int = 20     # px per frame; bounds the track step
    nms_radius: int = 5
    min_ncc: float = 0.3
    max_missed: int = 2
    spawn_clearance: float = 10.0
    harris_k: float = 0.05
    harris_sigma: float = 1.5


@dataclass
class Tracklet:
    """A feature track: one (t, u, v) sample per frame where it was matched."""

    id: int
    samples: List[Tuple[float, float, float]]
    age: int = 1
    missed: int = 0
    patch: Optional[np.ndarray] = None

    @property
    def position(self) -> Tuple[float, float]:
        return self.samples[-1][1], self.samples[-1][2]

    @property
    def last_step(self) -> Tuple[float, float]:
        """Displacement between the last two samples (zero for new tracks)."""
        if len(self.samples) < 2:
            return (0.0, 0.0)
        (_, u0, v0), (_, u1, v1) = self.samples[-2], self.samples[-1]
        return (u1 - u0, v1 - v0)

    def velocity(self) -> Optional[Tuple[float, float]]:
        """Per-second velocity from the last two samples, None if untracked."""
        if len(self.samples) < 2:
            return None
        (t0, u0, v0), (t1, u1, v1) = self.samples[-2], self.samples[-1]
        if t1 <= t0:
            return None
        return ((u1 - u0) / (t1 - t0), (v1 - v0) / (t1 - t0))

    def interp(self, t: float) -> Tuple[float, float]:
        """Position at time t, linearly interpolated, clamped at the ends."""
        ts = [s[0] for s in self.samples]
        us = [s[1] for s in self.samples]
        vs = [s[2] for s in self.samples]
        return float(np.interp(t, ts, us)), float(np.interp(t, ts, vs))


class FrameBuffer:
    """FIFO of the N most recent compensated frames with their start times."""

    def __init__(self, maxlen: int = 4):
        self.maxlen = maxlen
        self.frames: List[Tuple[float, EventFrame]] = []

    def push(self, t0: float, frame: EventFrame) -> None:
        if self.frames and t0 < self.frames[-1][0]:
            raise ValueError("frames must be pushed in time order")
        self.frames.append((t0, frame))
        if len(self.frames) > self.maxlen:
            self.frames.pop(0)

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def newest(self) -> Tuple[float, EventFrame]:
        return self.frames[-1]


def _harris_response(count: np.ndarray, k: float, sigma: float) -> np.ndarray:
    img = count.astype(np.float64)
    gy, gx = np.gradient(img)
    sxx = gaussian_filter(gx * gx, sigma)
    syy = gaussian_filter(gy * gy, sigma)
    sxy = gaussian_filter(gx * gy, sigma)
    det = sxx * syy - sxy * sxy
    trace = sxx + syy
    return det - k * trace * trace


def detect_features(frame: EventFrame, max_feats: int,
                    cfg: TrackerConfig = TrackerConfig()) -> List[Tuple[float, float, float]]:
    """Top Harris corners of the count image after non-maximum suppression.

    Returns (u, v, score) triples sorted by descending score (ties broken
    by position); deterministic. Corners too close to the border for a
    full template are suppressed.
    """
    if frame.support == 0:
        raise EmptySlice("feature detection on a frame without support")
    r = _harris_response(frame.count, cfg.harris_k, cfg.harris_sigma)
    size = 2 * cfg.nms_radius + 1
    peaks = (r == maximum_filter(r, size=size)) & (r > 0)
    m = cfg.patch_radius + 1
    peaks[:m, :] = peaks[-m:, :] = False
    peaks[:, :m] = peaks[:, -m:] = False
    ys, xs = np.nonzero(peaks)
    scores = r[ys, xs]
    order = np.lexsort((xs, ys, -scores))
    out = []
    for i in order[:max_feats]:
        out.append((float(xs[i]), float(ys[i]), float(scores[i])))
    return out


def _extract_patch(img: np.ndarray, u: float, v: float, radius: int) -> Optional[np.ndarray]:
    x, y = int(round(u)), int(round(v))
    if x - radius < 0 or y - radius < 0 or x + radius >= img.shape[1] or y + radius >= img.shape[0]:
        return None
    return img[y - radius:y + radius + 1, x - radius:x + radius + 1].copy()


def _ncc_match(img: np.ndarray, template: np.ndarray, u: float, v: float,
               cfg: TrackerConfig) -> Optional[Tuple[float, float, float]]:
    """Best normalized cross-correlation of template in a disk around (u, v).

    Returns (u*, v*, ncc) or None when the window falls off the image or
    correlation is degenerate everywhere.
    """
    p = cfg.patch_radius
    r = cfg.search_radius
    x, y = int(round(u)), int(round(v))
    x0, x1 = x - r - p, x + r + p
    y0, y1 = y - r - p, y + r + p
    if x0 < 0 or y0 < 0 or x1 >= img.shape[1] or y1 >= img.shape[0]:
        # clamp the search region, keeping full patches only
        x0, y0 = max(x0, 0), max(y0, 0)
        x1, y1 = min(x1, img.shape[1] - 1), min(y1, img.shape[0] - 1)
        if x1 - x0 < 2 * p or y1 - y0 < 2 * p:
            return None
    region = img[y0:y1 + 1, x0:x1 + 1]
    windows = sliding_window_view(region, (2 * p + 1, 2 * p + 1))
    wh, ww = windows.shape[:2]
    flat = windows.reshape(wh * ww, -1).astype(np.float64)
    t = template.reshape(-1).astype(np.float64)
    t = t - t.mean()
    t_norm = np.linalg.norm(t)
    if t_norm < 1e-12:
        return None
    flat = flat - flat.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(flat, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        ncc = (flat @ t) / (norms * t_norm)
    ncc[norms < 1e-12] = -1.0

    # candidate centers and the search-disk constraint
    cys, cxs = np.mgrid[y0 + p:y0 + p + wh, x0 + p:x0 + p + ww]
    dist2 = (cxs - u) ** 2 + (cys - v) ** 2
    ncc = ncc.reshape(wh, ww)
    ncc[dist2 > cfg.search_radius ** 2] = -1.0
    idx = int(np.argmax(ncc))
    best = float(ncc.flat[idx])
    if best < cfg.min_ncc:
        return None
    by, bx = divmod(idx, ww)
    return (float(x0 + p + bx), float(y0 + p + by), best)


class Tracker:
    """Stateful tracklet maintenance; ids are never reused within a run."""

    def __init__(self, cfg: TrackerConfig = TrackerConfig()):
        self.cfg = cfg
        self.tracklets: List[Tracklet] = []
        self._next_id = 0

    def _new_id(self) -> int:
        i = self._next_id
        self._next_id += 1
        return i

    def update_tracklets(self, buffer: FrameBuffer,
                         prev: Optional[List[Tracklet]] = None) -> List[Tracklet]:
        """Advance tracking onto the newest frame of the buffer.

        Extends each previous tracklet by NCC patch matching within the
        search disk, retires tracklets missed on max_missed consecutive
        frames, then spawns detections in regions clear of live tracks.
        Returns the live tracklet list (also kept on the tracker).
        """
        if len(buffer) == 0:
            raise EmptySlice("tracker update needs at least one frame")
        if prev is not None:
            self.tracklets = prev
        t_new, frame = buffer.newest
        img = frame.count
        survivors: List[Tracklet] = []
        for tr in self.tracklets:
            match = None
            if tr.patch is not None:
                u, v = tr.position
                match = _ncc_match(img, tr.patch, u, v, self.cfg)
            if match is None:
                tr.missed += 1
                if tr.missed < self.cfg.max_missed:
                    survivors.append(tr)
                continue
            u, v, _ = match
            tr.samples.append((t_new, u, v))
            tr.age += 1
            tr.missed = 0
            patch = _extract_patch(img, u, v, self.cfg.patch_radius)
            if patch is not None:
                tr.patch = patch
            survivors.append(tr)

        # spawn new features away from live tracks
        if frame.support > 0:
            taken = [tr.position for tr in survivors]
            for u, v, _score in detect_features(frame, self.cfg.max_feats, self.cfg):
                if len(survivors) >= self.cfg.max_feats:
                    break
                if any((u - pu) ** 2 + (v - pv) ** 2 < self.cfg.spawn_clearance ** 2
                       for pu, pv in taken):
                    continue
                patch = _extract_patch(img, u, v, self.cfg.patch_radius)
                if patch is None:
                    continue
                tr = Tracklet(id=self._new_id(), samples=[(t_new, u, v)], patch=patch)
                survivors.append(tr)
                taken.append((u, v))
        self.tracklets = survivors
        return survivors


def save_tracklets(path, tracklets: List[Tracklet]) -> None:
    """Write tracks in the injection format: `id t u v` rows."""
    with Path(path).open("w") as fh:
        fh.write("# id t u v\n")
        for tr in tracklets:
            for t, u, v in tr.samples:
                fh.write(f"{tr.id} {t:.6f} {u:.3f} {v:.3f}\n")


def load_tracklets(path) -> List[Tracklet]:
    """Read the `id t u v` injection format (comments with #)."""
    rows: dict = {}
    with Path(path).open() as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            tid, t, u, v = line.split()
            rows.setdefault(int(tid), []).append((float(t), float(u), float(v)))
    out = []
    for tid in sorted(rows):
        samples = sorted(rows[tid])
        out.append(Tracklet(id=tid, samples=samples, age=len(samples)))
    return out
