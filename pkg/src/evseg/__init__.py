"""Monocular event-camera multi-motion segmentation.

Splits an asynchronous event stream into background and independently
moving objects by fitting per-cluster 2D warp models, merging clusters by
contrast, and propagating motion models across time slices with keyslice
re-clustering. Ships with a synthetic stratified scene generator and an
evaluation harness.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .events import Event, EventSlice, load_events, save_events, slice_stream
from .warp import (
    EventFrame,
    WarpParams,
    contrast_score,
    project,
    temporal_gradient_loss,
    warp_event,
)

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "Event",
    "EventSlice",
    "EventFrame",
    "WarpParams",
    "load_events",
    "save_events",
    "slice_stream",
    "project",
    "temporal_gradient_loss",
    "contrast_score",
    "warp_event",
    "__version__",
]
