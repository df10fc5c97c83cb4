"""Warp-model fitting by derivative-free minimization of the temporal
gradient loss.

The loss surface is piecewise-smooth (bilinear splatting) with a narrow
basin around the true motion, so the solver is a bounded Nelder-Mead
simplex seeded at the caller's init plus a few seeded random restarts;
the best of all runs (including the untouched init) is returned, which
guarantees the fit never worsens the initial model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from .errors import TooFewEvents
from .events import EventSlice
from .warp import WarpParams, contrast_score, project, temporal_gradient_loss

__all__ = ["FitConfig", "FitResult", "RunStats", "fit_model", "fit_all_clusters"]

_OUT_OF_FRAME_PENALTY = 1e9


@dataclass(frozen=True)
class FitConfig:
    """Box bounds are per-parameter magnitudes: |theta| <= bound."""

    bounds: Tuple[float, float, float, float] = (300.0, 300.0, 2.0, 6.0)
    tol: float = 1e-5
    max_evals: int = 400
    restarts: int = 2
    min_events: int = 30
    seed: int = 0

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_evals < 50:
            raise ValueError("max_evals must be at least 50")
        if any(b <= 0 for b in self.bounds):
            raise ValueError("bounds must be strictly positive")


@dataclass
class FitResult:
    theta: WarpParams
    loss: float
    contrast: float
    evals: int
    degenerate: bool = False


@dataclass
class RunStats:
    """Mutable counters threaded through a pipeline run for diagnostics."""

    fit_calls: int = 0
    objective_evals: int = 0

    def merge(self, other: "RunStats") -> None:
        self.fit_calls += other.fit_calls
        self.objective_evals += other.objective_evals


def _clip(vec: np.ndarray, bounds) -> np.ndarray:
    b = np.asarray(bounds)
    return np.clip(vec, -b, b)


_SCALES = (0.125, 0.25, 0.5, 1.0)
_MIN_COARSE_EXTENT = 6  # px; skip scales that shrink the sensor below this


def _scaled_slice(slice_: EventSlice, scale: float) -> EventSlice:
    w = max(int(np.ceil(slice_.width * scale)), 2)
    h = max(int(np.ceil(slice_.height * scale)), 2)
    return EventSlice(
        np.minimum(slice_.xs * scale, w - 1e-9), np.minimum(slice_.ys * scale, h - 1e-9),
        slice_.ts, slice_.ps, slice_.t0, slice_.t1, w, h,
    )


def fit_model(slice_: EventSlice, init: WarpParams, cfg: FitConfig,
              stats: Optional[RunStats] = None) -> FitResult:
    """Fit warp parameters to a slice starting from `init`.

    Coarse-to-fine over a spatial pyramid: at 1/8 resolution the loss
    surface is a smooth bowl (pixel-quantization dips and the narrow
    full-resolution basin average out), so Nelder-Mead rolls into the
    right basin from far away and each finer scale only refines. Random
    restarts around `init` run at the coarsest scale, seeded. The warp
    center is taken from `init` and never optimized. Deterministic for
    fixed inputs and cfg.seed; the returned loss is never above the loss
    at `init` on the full-resolution slice.
    """
    if len(slice_) < cfg.min_events:
        raise TooFewEvents(f"{len(slice_)} events < minimum {cfg.min_events}")
    center = init.center
    evals = 0
    # identifiability caps: a single window cannot support models that
    # shrink the scene more than 2x or spin it more than a quarter turn;
    # such warps collapse events into points where the loss is blind.
    # Short pipeline slices keep the configured bounds unchanged.
    duration = max(slice_.duration, 1e-6)
    bounds_arr = np.minimum(np.asarray(cfg.bounds, dtype=float),
                            [np.inf, np.inf, 0.5 / duration, np.pi / (2 * duration)])

    scales = [s for s in _SCALES
              if min(slice_.width, slice_.height) * s >= _MIN_COARSE_EXTENT]
    if not scales or scales[-1] != 1.0:
        scales = list(scales) + [1.0]
    stage_slices = [(s, _scaled_slice(slice_, s) if s != 1.0 else slice_)
                    for s in scales]

    def make_objective(sub: EventSlice, scale: float, free, x_base, guard=False):
        cx, cy = center[0] * scale, center[1] * scale
        free = np.asarray(free)

        def objective(vec_free: np.ndarray) -> float:
            # parameters are in full-resolution units; translations scale
            # with the pyramid, divergence/rotation rates are scale-free
            nonlocal evals
            evals += 1
            v = x_base.copy()
            v[free] = vec_free
            v = np.clip(v, -bounds_arr, bounds_arr)
            theta = WarpParams(v[0] * scale, v[1] * scale, v[2], v[3], (cx, cy))
            frame = project(sub, theta)
            if frame.support == 0:
                return _OUT_OF_FRAME_PENALTY
            loss = temporal_gradient_loss(frame)
            if guard:
                # repel degenerate fast sweeps that dump events off-frame;
                # internal to the coarse search, never part of reported loss
                loss *= 1.0 + 4.0 * frame.dropped / len(sub)
            return loss
        return objective

    def run_nm(objective, x0_full, budget, step_scale, free=(0, 1, 2, 3),
               base_steps=(4.0, 4.0, 0.1, 0.2)):
        free = np.asarray(free)
        steps = (np.array(base_steps) * step_scale)[free]
        lo, hi = -bounds_arr[free], bounds_arr[free]
        x0 = np.clip(np.asarray(x0_full)[free], lo, hi)
        ndim = len(free)
        simplex = np.clip(np.vstack([x0] + [x0 + steps[i] * np.eye(ndim)[i]
                                            for i in range(ndim)]), lo, hi)
        res = optimize.minimize(
            objective, x0, method="Nelder-Mead",
            bounds=optimize.Bounds(lo, hi),
            options={"maxfev": budget, "fatol": cfg.tol, "xatol": 1e-3,
                     "initial_simplex": simplex, "disp": False},
        )
        x = np.asarray(x0_full, dtype=float).copy()
        x[free] = np.clip(np.asarray(res.x), lo, hi)
        return x, float(res.fun)

    x_init = np.clip(init.as_vector(), -bounds_arr, bounds_arr)
    rng = np.random.default_rng(cfg.seed)
    span = 0.2 * bounds_arr

    coarse_budget = max(cfg.max_evals // 13, 20)
    mid_budget = max(cfg.max_evals // 8, 25)
    full_budget = max(cfg.max_evals // 3, 50)

    # coarse scales keep divergence frozen: it is the one collapse-capable
    # parameter (it can implode events without dropping any), while
    # translation and rotation are safe to search broadly
    COARSE_FREE = (0, 1, 3)
    coarse_scale, coarse_slice = stage_slices[0]
    coarse_obj = make_objective(coarse_slice, coarse_scale, COARSE_FREE, x_init,
                                guard=True)

    # deterministic 5x5 translation seed scan around init; its best cells
    # start extra simplex runs alongside init and the random restarts
    scan_step = 25.0
    scan = []
    for dx in (-2, -1, 0, 1, 2):
        for dy in (-2, -1, 0, 1, 2):
            probe = x_init.copy()
            probe[:2] = np.clip(x_init[:2] + np.array([dx, dy]) * scan_step,
                              -bounds_arr[:2], bounds_arr[:2])
            scan.append((coarse_obj(probe[list(COARSE_FREE)]), tuple(probe)))
    scan.sort(key=lambda p: p[0])
    scan_starts = [np.array(p) for _, p in scan[:2] if p != tuple(x_init)]

    starts = [x_init] + scan_starts + [
        np.clip(x_init + rng.uniform(-1.0, 1.0, 4) * span, -bounds_arr, bounds_arr)
        for _ in range(cfg.restarts)
    ]
    coarse = [run_nm(coarse_obj, x0, coarse_budget, 1.0 / coarse_scale,
                     free=COARSE_FREE) for x0 in starts]
    x = min(coarse, key=lambda c: c[1])[0]

    for scale, sub in stage_slices[1:]:
        if scale < 0.5:
            x, _ = run_nm(make_objective(sub, scale, COARSE_FREE, x, guard=True),
                          x, mid_budget, 1.0 / scale, free=COARSE_FREE)
        else:
            budget = full_budget if scale == 1.0 else mid_budget
            x, _ = run_nm(make_objective(sub, scale, (0, 1, 2, 3), x), x,
                          budget, 1.0 / scale)

    # fresh small simplex escapes the collapsed one of the previous run
    x, _ = run_nm(make_objective(slice_, 1.0, (0, 1, 2, 3), x), x,
                  full_budget // 2, 1.0, base_steps=(0.6, 0.6, 0.02, 0.04))

    full_obj = make_objective(slice_, 1.0, (0, 1, 2, 3), x_init)
    init_loss = full_obj(x_init)
    final_loss = full_obj(x)
    if init_loss <= final_loss:
        x, final_loss = x_init, init_loss

    theta = WarpParams.from_vector(x, center)
    if stats is not None:
        stats.fit_calls += 1
        stats.objective_evals += evals
    return FitResult(
        theta=theta,
        loss=float(final_loss),
        contrast=contrast_score(slice_, theta),
        evals=evals,
    )


def degenerate_result(center=(0.0, 0.0)) -> FitResult:
    return FitResult(theta=WarpParams(center=center), loss=0.0, contrast=0.0,
                     evals=0, degenerate=True)


def fit_all_clusters(slice_: EventSlice, labels: np.ndarray, cfg: FitConfig,
                     centers: Optional[Dict[int, Tuple[float, float]]] = None,
                     inits: Optional[Dict[int, WarpParams]] = None,
                     stats: Optional[RunStats] = None) -> Dict[int, FitResult]:
    """Independent per-cluster fits on disjoint event subsets.

    labels: one cluster id per event. Returns results keyed by cluster id
    in ascending id order. Clusters below cfg.min_events come back flagged
    degenerate with a zero model instead of raising. Warp centers default
    to each cluster's mean event position.
    """
    labels = np.asarray(labels)
    if len(labels) != len(slice_):
        raise ValueError("labels must align with slice events")
    results: Dict[int, FitResult] = {}
    for cid in sorted(int(c) for c in np.unique(labels)):
        sel = labels == cid
        sub = slice_.subset(sel)
        if centers is not None and cid in centers:
            center = centers[cid]
        elif len(sub):
            center = (float(sub.xs.mean()), float(sub.ys.mean()))
        else:
            center = (slice_.width / 2.0, slice_.height / 2.0)
        if len(sub) < cfg.min_events:
            results[cid] = degenerate_result(center)
            continue
        init = inits.get(cid) if inits else None
        if init is None:
            init = WarpParams(center=center)
        else:
            init = init.with_center(center)
        results[cid] = fit_model(sub, init, cfg, stats=stats)
    return results
