"""Event data structures and the plain-text event file format.

Events are stored column-wise in numpy arrays inside :class:`EventSlice`;
the scalar :class:`Event` exists for single-event call sites and tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import EmptySlice, EvsegError

__all__ = ["Event", "EventSlice", "load_events", "save_events", "slice_stream"]


@dataclass(frozen=True)
class Event:
    """One asynchronous brightness event: pixel, timestamp (s), polarity sign."""

    x: int
    y: int
    t: float
    p: int = 1

    def __post_init__(self):
        if self.p not in (-1, 1):
            raise ValueError(f"polarity must be -1 or +1, got {self.p}")
        if self.x < 0 or self.y < 0:
            raise ValueError(f"negative pixel coordinates ({self.x}, {self.y})")
        if not np.isfinite(self.t) or self.t < 0:
            raise ValueError(f"bad timestamp {self.t}")


@dataclass
class EventSlice:
    """A time-windowed batch of events, sorted by timestamp.

    Attributes
    ----------
    xs, ys : int arrays, pixel coordinates
    ts : float array, timestamps in seconds, non-decreasing
    ps : int array of -1/+1 polarities
    t0, t1 : window bounds; every event satisfies t0 <= t < t1
    width, height : sensor dimensions in pixels
    """

    xs: np.ndarray
    ys: np.ndarray
    ts: np.ndarray
    ps: np.ndarray
    t0: float
    t1: float
    width: int
    height: int

    def __post_init__(self):
        self.xs = np.ascontiguousarray(self.xs, dtype=np.float64)
        self.ys = np.ascontiguousarray(self.ys, dtype=np.float64)
        self.ts = np.ascontiguousarray(self.ts, dtype=np.float64)
        self.ps = np.ascontiguousarray(self.ps, dtype=np.int8)
        n = len(self.ts)
        if not (len(self.xs) == len(self.ys) == len(self.ps) == n):
            raise ValueError("event columns have mismatched lengths")
        if n:
            if np.any(np.diff(self.ts) < 0):
                raise ValueError("event timestamps must be non-decreasing")
            if self.ts[0] < self.t0 or self.ts[-1] >= self.t1:
                raise ValueError(
                    f"events outside window [{self.t0}, {self.t1}): "
                    f"span [{self.ts[0]}, {self.ts[-1]}]"
                )
            if (
                self.xs.min() < 0
                or self.xs.max() >= self.width
                or self.ys.min() < 0
                or self.ys.max() >= self.height
            ):
                raise ValueError("event coordinates outside sensor bounds")

    def __len__(self) -> int:
        return len(self.ts)

    @property
    def duration(self) -> float:
        return self.t1 - self.t0

    def subset(self, indices: np.ndarray) -> "EventSlice":
        """Slice sharing this window but holding only the indexed events."""
        return EventSlice(
            self.xs[indices], self.ys[indices], self.ts[indices], self.ps[indices],
            self.t0, self.t1, self.width, self.height,
        )

    def event(self, i: int) -> Event:
        return Event(int(self.xs[i]), int(self.ys[i]), float(self.ts[i]), int(self.ps[i]))

    @classmethod
    def from_events(cls, events, t0, t1, width, height) -> "EventSlice":
        """Build from an iterable of Event, sorting by timestamp (stable)."""
        events = sorted(events, key=lambda e: e.t)
        xs = np.array([e.x for e in events], dtype=np.float64)
        ys = np.array([e.y for e in events], dtype=np.float64)
        ts = np.array([e.t for e in events], dtype=np.float64)
        ps = np.array([e.p for e in events], dtype=np.int8)
        return cls(xs, ys, ts, ps, t0, t1, width, height)


def slice_stream(stream: EventSlice, dt: float) -> Iterator[EventSlice]:
    """Split a stream into consecutive windows of length dt seconds.

    Windows are [t0 + k*dt, t0 + (k+1)*dt); empty windows are yielded too so
    the caller sees a gapless slice sequence.
    """
    if dt <= 0:
        raise ValueError("slice duration must be positive")
    n_slices = int(np.ceil((stream.t1 - stream.t0) / dt))
    bounds = stream.t0 + dt * np.arange(n_slices + 1)
    idx = np.searchsorted(stream.ts, bounds)
    for k in range(n_slices):
        lo, hi = idx[k], idx[k + 1]
        yield EventSlice(
            stream.xs[lo:hi], stream.ys[lo:hi], stream.ts[lo:hi], stream.ps[lo:hi],
            float(bounds[k]), float(bounds[k + 1]), stream.width, stream.height,
        )


def load_events(path) -> EventSlice:
    """Read a plain-text event file: one `t x y p` row per event.

    Lines starting with `#` are comments; a `# width=W height=H` header
    comment is required before the first event. An optional `# t0=A t1=B`
    comment restores the exact time window; otherwise the window is the
    event span.
    """
    path = Path(path)
    header: dict[str, float] = {}
    ts, xs, ys, ps = [], [], [], []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for token in line[1:].split():
                    key, sep, value = token.partition("=")
                    if sep and key in ("width", "height", "t0", "t1"):
                        header[key] = float(value)
                continue
            parts = line.split()
            if len(parts) != 4:
                raise EvsegError(f"{path}:{lineno}: expected 't x y p', got {line!r}")
            t, x, y, p = float(parts[0]), int(parts[1]), int(parts[2]), int(parts[3])
            if p not in (-1, 1):
                raise EvsegError(f"{path}:{lineno}: polarity must be -1 or 1")
            ts.append(t)
            xs.append(x)
            ys.append(y)
            ps.append(p)
    if "width" not in header or "height" not in header:
        raise EvsegError(f"{path}: missing '# width=W height=H' header")
    ts = np.asarray(ts, dtype=np.float64)
    order = np.argsort(ts, kind="stable")
    if len(ts):
        t0 = header.get("t0", float(ts[order[0]]))
        t1 = header.get("t1", float(np.nextafter(ts[order[-1]], np.inf)))
    else:
        t0, t1 = header.get("t0", 0.0), header.get("t1", 0.0)
    return EventSlice(
        np.asarray(xs, dtype=np.float64)[order],
        np.asarray(ys, dtype=np.float64)[order],
        ts[order],
        np.asarray(ps, dtype=np.int8)[order],
        t0=t0,
        t1=t1,
        width=int(header["width"]),
        height=int(header["height"]),
    )


def save_events(path, slice_: EventSlice) -> None:
    """Write a slice in the plain-text event format (microsecond precision)."""
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"# width={slice_.width} height={slice_.height}\n")
        fh.write(f"# t0={slice_.t0!r} t1={slice_.t1!r}\n")
        fh.write("# t x y p\n")
        for t, x, y, p in zip(slice_.ts, slice_.xs, slice_.ys, slice_.ps):
            fh.write(f"{t:.6f} {int(x)} {int(y)} {int(p)}\n")


def require_events(slice_: EventSlice, op: str) -> None:
    if len(slice_) == 0:
        raise EmptySlice(f"{op} needs a non-empty slice")
