"""Binary PNM raster I/O: P5 graymaps for masks, P6 pixmaps for visualization."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import EvsegError


def write_pgm(path, image: np.ndarray) -> None:
    """Write a P5 graymap (maxval 255). Boolean input maps to 0/255."""
    if image.dtype == bool:
        image = np.where(image, 255, 0)
    data = np.ascontiguousarray(np.clip(image, 0, 255)).astype(np.uint8)
    h, w = data.shape
    with Path(path).open("wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def read_pgm(path) -> np.ndarray:
    """Read a P5 graymap written by write_pgm."""
    raw = Path(path).read_bytes()
    if not raw.startswith(b"P5"):
        raise EvsegError(f"{path}: not a binary P5 graymap")
    parts = raw.split(b"\n", 3)
    if len(parts) < 4:
        raise EvsegError(f"{path}: truncated P5 header")
    w, h = (int(v) for v in parts[1].split())
    maxval = int(parts[2])
    if maxval != 255:
        raise EvsegError(f"{path}: unsupported maxval {maxval}")
    data = np.frombuffer(parts[3], dtype=np.uint8, count=w * h)
    return data.reshape(h, w).copy()


def write_ppm(path, image: np.ndarray) -> None:
    """Write a P6 color pixmap from an (H, W, 3) uint8 array."""
    data = np.ascontiguousarray(np.clip(image, 0, 255)).astype(np.uint8)
    h, w, _ = data.shape
    with Path(path).open("wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes())
