"""Synthetic stratified scene generator with full ground truth.

Scenes are fronto-parallel: a textured background translating/rotating at
the camera rate plus textured convex polygon objects with their own
motion. Intensity frames are rendered at 1 kHz with bilinear texture
sampling (a stand-in for optical blur, and the source of sub-pixel event
timing); events fire whenever the per-pixel log intensity drifts a
threshold step away from its reference level, with multiple events per
large step. Every event carries the id of the object that owned its pixel
at the start of the render interval, giving exact per-event labels on top
of the per-millisecond masks and boxes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import EvsegError, InvalidScript, Unclassifiable
from .events import EventSlice
from .rasters import read_pgm, write_pgm

__all__ = [
    "TextureSpec",
    "CameraSpec",
    "ObjectSpec",
    "SceneScript",
    "GroundTruth",
    "render_events",
    "classify_sequence",
    "sequence_name",
    "standard_fixture_suite",
    "load_script",
    "save_script",
    "write_ground_truth",
    "load_ground_truth",
]

RENDER_RATE = 1000  # frames per second; also the ground-truth sample rate


@dataclass(frozen=True)
class TextureSpec:
    """Seeded binary blob texture: cells of `cell` px at two intensity levels."""

    seed: int = 0
    cell: int = 4
    density: float = 0.5
    levels: Tuple[float, float] = (0.25, 0.7)
    tile: int = 256

    def build(self) -> np.ndarray:
        lo, hi = self.levels
        if lo <= 0 or hi <= 0:
            raise InvalidScript("texture intensity levels must be positive")
        n = max(self.tile // self.cell, 1)
        rng = np.random.default_rng([int(self.seed), 0x7E57])
        cells = rng.random((n, n)) < self.density
        img = np.where(cells, hi, lo)
        return np.repeat(np.repeat(img, self.cell, axis=0), self.cell, axis=1)


@dataclass(frozen=True)
class CameraSpec:
    """Apparent image motion of the background: px/s translation, deg/s rotation
    about the image center."""

    velocity: Tuple[float, float] = (0.0, 0.0)
    omega: float = 0.0


@dataclass
class ObjectSpec:
    """One independently moving textured convex polygon.

    polygon: vertices in the object frame (about its centroid); position:
    centroid at t=0; velocity in px/s, optionally overridden from given
    times by velocity_schedule entries (t, vx, vy); omega in deg/s about
    the centroid; shatter_time replaces the object by one child triangle
    per polygon edge flying apart at shatter_speed.
    """

    polygon: Sequence[Tuple[float, float]]
    position: Tuple[float, float]
    velocity: Tuple[float, float] = (0.0, 0.0)
    omega: float = 0.0
    texture: TextureSpec = field(default_factory=lambda: TextureSpec(levels=(0.35, 0.95)))
    spawn: float = 0.0
    despawn: Optional[float] = None
    velocity_schedule: Optional[List[Tuple[float, float, float]]] = None
    shatter_time: Optional[float] = None
    shatter_speed: float = 40.0

    def segments(self) -> List[Tuple[float, np.ndarray]]:
        segs = [(0.0, np.asarray(self.velocity, dtype=float))]
        for t, vx, vy in sorted(self.velocity_schedule or []):
            segs.append((float(t), np.array([vx, vy], dtype=float)))
        return segs

    def velocity_at(self, t: float) -> np.ndarray:
        v = None
        for t_from, seg_v in self.segments():
            if t >= t_from:
                v = seg_v
        return v if v is not None else np.asarray(self.velocity, dtype=float)

    def displacement(self, t: float) -> np.ndarray:
        segs = self.segments()
        disp = np.zeros(2)
        for i, (t_from, v) in enumerate(segs):
            t_to = segs[i + 1][0] if i + 1 < len(segs) else math.inf
            lo, hi = min(t_from, t), min(t_to, t)
            if hi > lo:
                disp += v * (hi - lo)
        return disp


@dataclass
class SceneScript:
    """Full scene description; duration must be a whole number of milliseconds."""

    width: int
    height: int
    duration: float
    camera: CameraSpec = field(default_factory=CameraSpec)
    background: TextureSpec = field(default_factory=TextureSpec)
    objects: List[ObjectSpec] = field(default_factory=list)
    event_trigger_tau: float = 0.25
    name: str = "scene"

    def validate(self) -> None:
        if self.duration <= 0:
            raise InvalidScript("duration must be positive")
        steps = self.duration * RENDER_RATE
        if abs(steps - round(steps)) > 1e-9:
            raise InvalidScript("duration must be a whole number of milliseconds")
        if self.event_trigger_tau <= 0:
            raise InvalidScript("event_trigger_tau must be positive")
        if self.width < 2 or self.height < 2:
            raise InvalidScript("sensor must be at least 2x2 pixels")
        for i, obj in enumerate(self.objects):
            poly = np.asarray(obj.polygon, dtype=float)
            if poly.ndim != 2 or poly.shape[0] < 3 or poly.shape[1] != 2:
                raise InvalidScript(f"object {i}: polygon needs at least 3 vertices")
            if not np.all(np.isfinite(poly)):
                raise InvalidScript(f"object {i}: non-finite polygon vertex")
            if abs(_signed_area(poly)) < 1e-9:
                raise InvalidScript(f"object {i}: zero-area polygon")
            if obj.shatter_time is not None:
                if poly.shape[0] < 4:
                    raise InvalidScript(f"object {i}: shattering needs >= 4 edges")
                if obj.omega != 0.0:
                    raise InvalidScript(f"object {i}: shattering a rotating object is unsupported")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration * RENDER_RATE))


def _signed_area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _ccw(poly: np.ndarray) -> np.ndarray:
    return poly if _signed_area(poly) > 0 else poly[::-1]


def _rot(angle_rad: float) -> np.ndarray:
    c, s = math.cos(angle_rad), math.sin(angle_rad)
    return np.array([[c, -s], [s, c]])


def _sample_texture(img: np.ndarray, sx: np.ndarray, sy: np.ndarray) -> np.ndarray:
    """Bilinear sample of a wrapped texture tile at float coordinates."""
    t = img.shape[0]
    x0f = np.floor(sx)
    y0f = np.floor(sy)
    fx = sx - x0f
    fy = sy - y0f
    x0 = x0f.astype(np.intp) % t
    y0 = y0f.astype(np.intp) % t
    x1 = (x0 + 1) % t
    y1 = (y0 + 1) % t
    return (
        img[y0, x0] * (1 - fx) * (1 - fy)
        + img[y0, x1] * fx * (1 - fy)
        + img[y1, x0] * (1 - fx) * fy
        + img[y1, x1] * fx * fy
    )


def _polygon_alpha(verts: np.ndarray, width: int, height: int):
    """Soft-edged coverage of a convex polygon on the pixel grid.

    Returns (alpha, x0, y0) where alpha covers the clipped bounding box and
    ramps linearly from 1 inside to 0 outside over one pixel of signed
    distance. Returns None when the polygon misses the sensor.
    """
    verts = _ccw(np.asarray(verts, dtype=float))
    x0 = max(int(np.floor(verts[:, 0].min())) - 1, 0)
    y0 = max(int(np.floor(verts[:, 1].min())) - 1, 0)
    x1 = min(int(np.ceil(verts[:, 0].max())) + 1, width - 1)
    y1 = min(int(np.ceil(verts[:, 1].max())) + 1, height - 1)
    if x1 < x0 or y1 < y0:
        return None
    yy, xx = np.mgrid[y0:y1 + 1, x0:x1 + 1]
    sd = np.full(xx.shape, -np.inf)
    for i in range(len(verts)):
        a = verts[i]
        b = verts[(i + 1) % len(verts)]
        edge = b - a
        norm = math.hypot(edge[0], edge[1])
        if norm < 1e-12:
            continue
        # outward normal of a CCW edge
        nx, ny = edge[1] / norm, -edge[0] / norm
        sd = np.maximum(sd, (xx - a[0]) * nx + (yy - a[1]) * ny)
    alpha = np.clip(0.5 - sd, 0.0, 1.0)
    return alpha, x0, y0


class _RenderObject:
    """An ObjectSpec expanded to renderable form (shatter children included).

    `position` is the centroid pose at `t_ref`; motion integrates the
    velocity segments away from t_ref, rotation winds at omega from t_ref.
    """

    def __init__(self, obj_id, polygon, position, t_ref, segments, omega_deg,
                 texture, spawn, despawn, source_index):
        self.obj_id = obj_id
        self.polygon = _ccw(np.asarray(polygon, dtype=float))
        self.position = np.asarray(position, dtype=float)
        self.t_ref = t_ref
        self.segments = [(float(t), np.asarray(v, dtype=float)) for t, v in segments]
        self.omega = math.radians(omega_deg)
        self.texture_img = texture.build()
        self.spawn = spawn
        self.despawn = despawn if despawn is not None else math.inf
        self.source_index = source_index

    def live(self, t: float) -> bool:
        return self.spawn <= t < self.despawn

    def _displacement(self, t: float) -> np.ndarray:
        disp = np.zeros(2)
        for i, (t_from, v) in enumerate(self.segments):
            t_to = self.segments[i + 1][0] if i + 1 < len(self.segments) else math.inf
            lo, hi = min(t_from, t), min(t_to, t)
            if hi > lo:
                disp += v * (hi - lo)
        return disp

    def velocity_at(self, t: float) -> np.ndarray:
        v = self.segments[0][1]
        for t_from, seg_v in self.segments:
            if t >= t_from:
                v = seg_v
        return v

    def pose(self, t: float) -> np.ndarray:
        return self.position + self._displacement(t) - self._displacement(self.t_ref)

    def world_vertices(self, t: float) -> np.ndarray:
        angle = self.omega * (t - self.t_ref)
        return self.pose(t) + self.polygon @ _rot(angle).T


def _expand_objects(script: SceneScript) -> List[_RenderObject]:
    out: List[_RenderObject] = []
    next_id = 0
    for idx, obj in enumerate(script.objects):
        despawn = obj.despawn
        if obj.shatter_time is not None:
            despawn = min(obj.shatter_time, despawn if despawn is not None else math.inf)
        out.append(_RenderObject(
            next_id, obj.polygon, obj.position, 0.0, obj.segments(), obj.omega,
            obj.texture, obj.spawn, despawn, idx,
        ))
        next_id += 1
        if obj.shatter_time is not None:
            t_sh = obj.shatter_time
            pos_sh = np.asarray(obj.position, dtype=float) + obj.displacement(t_sh)
            poly = _ccw(np.asarray(obj.polygon, dtype=float))
            centroid = poly.mean(axis=0)
            v_sh = obj.velocity_at(t_sh)
            for e in range(len(poly)):
                tri = np.array([centroid, poly[e], poly[(e + 1) % len(poly)]])
                c = tri.mean(axis=0)
                radial = c - centroid
                norm = math.hypot(radial[0], radial[1])
                direction = radial / norm if norm > 1e-9 else np.array([1.0, 0.0])
                child_v = v_sh + obj.shatter_speed * direction
                out.append(_RenderObject(
                    next_id, tri - c, pos_sh + c, t_sh, [(0.0, child_v)], obj.omega,
                    obj.texture, t_sh, obj.despawn, idx,
                ))
                next_id += 1
    return out


@dataclass
class GroundTruth:
    """Per-millisecond ground truth: object poses, masks, boxes, velocities,
    plus exact per-event object labels (-1 = background)."""

    width: int
    height: int
    duration: float
    rate: int
    sample_times: np.ndarray
    object_ids: List[int]
    camera_velocity: Tuple[float, float]
    camera_omega: float
    event_labels: np.ndarray
    _vertices: dict  # (sample, obj_id) -> (M,2) world vertices, present only
    _velocities: dict  # (sample, obj_id) -> (vx, vy)
    _draw_order: List[int]

    def nearest_sample(self, t: float) -> int:
        i = int(round((t - 0.0) * self.rate))
        return min(max(i, 0), len(self.sample_times) - 1)

    def objects_present(self, sample: int) -> List[int]:
        return [o for o in self.object_ids if self.mask(sample, o) is not None]

    def raw_mask(self, sample: int, obj_id: int) -> Optional[np.ndarray]:
        key = (sample, obj_id)
        if key not in self._vertices:
            return None
        res = _polygon_alpha(self._vertices[key], self.width, self.height)
        if res is None:
            return None
        alpha, x0, y0 = res
        mask = np.zeros((self.height, self.width), dtype=bool)
        mask[y0:y0 + alpha.shape[0], x0:x0 + alpha.shape[1]] = alpha > 0.5
        return mask if mask.any() else None

    def mask(self, sample: int, obj_id: int) -> Optional[np.ndarray]:
        """Occlusion-aware boolean mask; None when the object is absent."""
        mask = self.raw_mask(sample, obj_id)
        if mask is None:
            return None
        above = self._draw_order.index(obj_id) + 1
        for other in self._draw_order[above:]:
            om = self.raw_mask(sample, other)
            if om is not None:
                mask &= ~om
        return mask if mask.any() else None

    def box(self, sample: int, obj_id: int) -> Optional[Tuple[int, int, int, int]]:
        """Tight AABB (x0, y0, x1, y1, inclusive pixels) of the mask."""
        mask = self.mask(sample, obj_id)
        if mask is None:
            return None
        ys, xs = np.nonzero(mask)
        return int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max())

    def velocity(self, sample: int, obj_id: int) -> Optional[Tuple[float, float]]:
        return self._velocities.get((sample, obj_id))


def render_events(script: SceneScript, seed: int = 0) -> Tuple[EventSlice, GroundTruth]:
    """Render a script to an event stream and its ground truth.

    Deterministic for a given (script, seed): texture content comes from
    the script's texture seeds, timestamp jitter from `seed`. Timestamps
    are on the microsecond grid, strictly inside [0, duration).
    """
    script.validate()
    rng = np.random.default_rng([int(seed), 0xE7E7])
    w, h = script.width, script.height
    objects = _expand_objects(script)
    bg_img = script.background.build()
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    v_cam = np.asarray(script.camera.velocity, dtype=float)
    om_cam = math.radians(script.camera.omega)

    vertices: dict = {}
    velocities: dict = {}

    def compose(t: float):
        """Intensity frame and owner map at time t; records GT at samples."""
        if om_cam != 0.0:
            a = -om_cam * t
            ca, sa = math.cos(a), math.sin(a)
            rx = cx + (xx - cx) * ca - (yy - cy) * sa
            ry = cy + (xx - cx) * sa + (yy - cy) * ca
        else:
            rx, ry = xx, yy
        frame = _sample_texture(bg_img, rx - v_cam[0] * t, ry - v_cam[1] * t)
        owner = np.full((h, w), -1, dtype=np.int32)
        for obj in objects:
            if not obj.live(t):
                continue
            res = _polygon_alpha(obj.world_vertices(t), w, h)
            if res is None:
                continue
            alpha, x0, y0 = res
            ph, pw = alpha.shape
            sl = np.s_[y0:y0 + ph, x0:x0 + pw]
            pos = obj.pose(t)
            angle = obj.omega * (t - obj.spawn)
            rot = _rot(-angle)
            px = xx[sl] - pos[0]
            py = yy[sl] - pos[1]
            qx = rot[0, 0] * px + rot[0, 1] * py
            qy = rot[1, 0] * px + rot[1, 1] * py
            tex = _sample_texture(obj.texture_img, qx, qy)
            frame[sl] = frame[sl] * (1 - alpha) + tex * alpha
            owner[sl] = np.where(alpha > 0.5, obj.obj_id, owner[sl])
        return frame, owner

    def record_truth(sample: int, t: float):
        for obj in objects:
            if not obj.live(t):
                continue
            verts = obj.world_vertices(t)
            if _polygon_alpha(verts, w, h) is None:
                continue
            vertices[(sample, obj.obj_id)] = verts
            velocities[(sample, obj.obj_id)] = tuple(obj.velocity_at(t))

    n_steps = script.n_steps
    frame, owner_prev = compose(0.0)
    ref = np.log(frame)
    record_truth(0, 0.0)

    ev_x, ev_y, ev_t, ev_p, ev_label = [], [], [], [], []
    tau = script.event_trigger_tau
    for k in range(1, n_steps + 1):
        t = k / RENDER_RATE
        frame, owner = compose(t)
        if k < n_steps:
            record_truth(k, t)
        diff = np.log(frame) - ref
        n_fire = np.floor(np.abs(diff) / tau).astype(np.int64)
        fired = n_fire > 0
        if fired.any():
            ys, xs = np.nonzero(fired)
            counts = n_fire[ys, xs]
            signs = np.sign(diff[ys, xs]).astype(np.int8)
            total = int(counts.sum())
            jitter = rng.integers(0, 1000, total).astype(np.float64) * 1e-6
            ev_x.append(np.repeat(xs, counts).astype(np.float64))
            ev_y.append(np.repeat(ys, counts).astype(np.float64))
            ev_t.append((k - 1) / RENDER_RATE + jitter)
            ev_p.append(np.repeat(signs, counts))
            ev_label.append(np.repeat(owner_prev[ys, xs], counts))
            ref += np.sign(diff) * n_fire * tau
        owner_prev = owner

    if ev_x:
        xs = np.concatenate(ev_x)
        ys = np.concatenate(ev_y)
        ts = np.concatenate(ev_t)
        ps = np.concatenate(ev_p)
        labels = np.concatenate(ev_label)
        order = np.argsort(ts, kind="stable")
        xs, ys, ts, ps, labels = xs[order], ys[order], ts[order], ps[order], labels[order]
    else:
        xs = ys = ts = np.array([])
        ps = np.array([], dtype=np.int8)
        labels = np.array([], dtype=np.int32)

    stream = EventSlice(xs, ys, ts, ps, 0.0, script.duration, w, h)
    truth = GroundTruth(
        width=w, height=h, duration=script.duration, rate=RENDER_RATE,
        sample_times=np.arange(n_steps) / RENDER_RATE,
        object_ids=[o.obj_id for o in objects],
        camera_velocity=tuple(v_cam),
        camera_omega=script.camera.omega,
        event_labels=labels.astype(np.int32),
        _vertices=vertices,
        _velocities=velocities,
        _draw_order=[o.obj_id for o in objects],
    )
    return stream, truth


# -- stratification -----------------------------------------------------------

ANGLE_CLASSES = (("AS", 0.0, 45.0), ("AM", 60.0, 120.0), ("AL", 140.0, 180.0))
SPEED_CLASSES = (("SS", 0.5, 3.0, False), ("SM", 3.0, 7.0, False), ("SL", 7.0, 10.0, True))
ROTATION_CLASSES = (("RS", 0.0, 5.0), ("RM", 25.0, 30.0), ("RL", 90.0, 100.0))


def _closed_class(value, classes, what):
    for tag, lo, hi in classes:
        if lo <= value <= hi:
            return tag
    raise Unclassifiable(f"{what} {value:.3f} falls outside every class range")


def _speed_class(eta):
    for tag, lo, hi, hi_closed in SPEED_CLASSES:
        if lo <= eta < hi or (hi_closed and eta == hi):
            return tag
    raise Unclassifiable(f"speed ratio {eta:.3f} falls outside every class range")


def classify_sequence(script: SceneScript) -> Tuple[str, str, str]:
    """Stratification tags (angle, speed-ratio, rotation) of a script.

    Uses each object's velocity at t=0 and requires all objects to share a
    class per attribute. Endpoints: angle classes are closed ([0,45],
    [60,120], [140,180] deg), speed classes are right-open except the top
    of SL ([0.5,3), [3,7), [7,10]), rotation classes are closed ([0,5],
    [25,30], [90,100] deg/s).
    """
    if not script.objects:
        raise Unclassifiable("script has no objects to classify")
    v_cam = np.asarray(script.camera.velocity, dtype=float)
    cam_speed = float(np.hypot(*v_cam))
    if cam_speed <= 0:
        raise Unclassifiable("camera velocity is zero; angle and ratio undefined")
    tags = set()
    for obj in script.objects:
        v = np.asarray(obj.velocity_at(0.0), dtype=float)
        speed = float(np.hypot(*v))
        if speed <= 0:
            raise Unclassifiable("object velocity is zero; angle undefined")
        cosang = float(np.dot(v_cam, v) / (cam_speed * speed))
        # micro-degree rounding keeps exact boundary constructions on their
        # documented closed endpoints despite acos noise
        theta = round(math.degrees(math.acos(min(1.0, max(-1.0, cosang)))), 6)
        eta = round(speed / cam_speed, 6)
        d_omega = round(abs(script.camera.omega - obj.omega), 6)
        tags.add((
            _closed_class(theta, ANGLE_CLASSES, "angle"),
            _speed_class(eta),
            _closed_class(d_omega, ROTATION_CLASSES, "rotation difference"),
        ))
    if len(tags) > 1:
        raise Unclassifiable(f"objects fall in different classes: {sorted(tags)}")
    return tags.pop()


def sequence_name(seqnum: int, tags: Sequence[str]) -> str:
    return f"Seq{seqnum}_" + "_".join(tags)


# -- standard fixture suite ---------------------------------------------------

SUITE_WIDTH = 160
SUITE_HEIGHT = 120
SUITE_CAM_VELOCITY = (8.0, 0.0)
SUITE_SLICE_DT = 0.05  # slice length the suite is calibrated for

_QUAD = [(-13.0, -11.0), (12.0, -13.0), (14.0, 12.0), (-11.0, 13.0)]
_QUAD2 = [(-11.0, -12.0), (13.0, -10.0), (11.0, 13.0), (-13.0, 11.0)]

_OBJ_LEVELS = [(0.4, 0.95), (0.15, 0.55)]
_OBJ_RADIUS = 16.0  # conservative polygon extent for placement
_MARGIN = 3.0


def _imo_velocity(angle_deg: float, eta: float) -> Tuple[float, float]:
    """Object velocity at angle_deg from the camera velocity, speed eta * |v_cam|."""
    v_cam = np.asarray(SUITE_CAM_VELOCITY)
    base = math.atan2(v_cam[1], v_cam[0])
    speed = eta * float(np.hypot(*v_cam))
    a = base + math.radians(angle_deg)
    return (speed * math.cos(a), speed * math.sin(a))


def _place(velocity, duration, lane) -> Tuple[float, float]:
    """Start position keeping the whole scripted travel on-sensor."""
    disp = np.asarray(velocity, dtype=float) * duration
    pos = []
    for size, frac, d in ((SUITE_WIDTH, lane[0], disp[0]), (SUITE_HEIGHT, lane[1], disp[1])):
        lo = _MARGIN + _OBJ_RADIUS
        hi = size - _MARGIN - _OBJ_RADIUS
        if hi - lo < abs(d):
            raise InvalidScript(f"scripted travel {d:.0f}px does not fit a {size}px axis")
        start = size * frac - d / 2
        pos.append(float(np.clip(start, lo, hi - max(d, 0.0)) if d >= 0
                         else np.clip(start, lo - min(d, 0.0), hi)))
    return (pos[0], pos[1])


def _suite_object(k: int, velocity, duration, lane=None, **kw) -> ObjectSpec:
    lanes = [(0.3, 0.3), (0.7, 0.7)]
    lane = lanes[k % 2] if lane is None else lane
    return ObjectSpec(
        polygon=_QUAD if k % 2 == 0 else _QUAD2,
        position=_place(velocity, duration, lane),
        velocity=tuple(velocity),
        texture=TextureSpec(seed=40 + k, cell=4, density=0.5, levels=_OBJ_LEVELS[k % 2]),
        **kw,
    )


def _suite_script(duration, objects, seed_salt=0) -> SceneScript:
    return SceneScript(
        width=SUITE_WIDTH, height=SUITE_HEIGHT, duration=duration,
        camera=CameraSpec(velocity=SUITE_CAM_VELOCITY),
        background=TextureSpec(seed=7 + seed_salt, cell=4, density=0.5),
        objects=objects, event_trigger_tau=0.25, name="tmp",
    )


# (seqnum, duration, [(angle deg, eta), ...]) for the linear-velocity columns;
# durations shrink with speed class so scripted travel stays on-sensor
_STRAT_ROWS = [
    (1, 2.0, [(25.0, 4.5), (-35.0, 4.5)]),     # AS_SM_RS
    (2, 2.0, [(80.0, 4.5), (-105.0, 4.5)]),    # AM_SM_RS
    (3, 2.0, [(150.0, 4.5), (-165.0, 4.5)]),   # AL_SM_RS
    (4, 2.6, [(75.0, 2.4), (-100.0, 2.8)]),    # AM_SS_RS
    (5, 1.0, [(80.0, 8.0), (-100.0, 8.5)]),    # AM_SL_RS
    (6, 2.6, [(150.0, 2.4), (-165.0, 2.8)]),   # AL_SS_RS
]

REVERSAL_TIME = 1.0  # scripted direction flip in Seq9
SHATTER_TIME = 0.8   # scripted break-up in Seq11


def standard_fixture_suite(seed: int = 0) -> List[SceneScript]:
    """Fixed desk-scale scripts: the eight stratification columns, the
    scripted-reversal, exit and shatter fixtures used by pipeline tests,
    and a long 2-object run for detection-rate statistics.

    The seed only offsets texture seeds so distinct suites stay
    deterministic; geometry and motion are versioned constants calibrated
    for 0.05 s slices.
    """
    scripts = []
    for n, duration, rows in _STRAT_ROWS:
        objs = [_suite_object(k, _imo_velocity(ang, eta), duration)
                for k, (ang, eta) in enumerate(rows)]
        script = _suite_script(duration, objs, seed_salt=seed)
        script.name = sequence_name(n, classify_sequence(script))
        scripts.append(script)

    for n, d_omega in ((7, 27.0), (8, 95.0)):
        objs = [
            _suite_object(0, _imo_velocity(150.0, 2.4), 2.6, omega=d_omega),
            _suite_object(1, _imo_velocity(-165.0, 2.8), 2.6, omega=-d_omega),
        ]
        script = _suite_script(2.6, objs, seed_salt=seed)
        script.name = sequence_name(n, classify_sequence(script))
        scripts.append(script)

    # scripted reversal: object 0 flips direction at REVERSAL_TIME
    v0 = _imo_velocity(80.0, 4.5)
    rev = _suite_script(2.0, [
        _suite_object(0, v0, 2.0, velocity_schedule=[(REVERSAL_TIME, -v0[0], -v0[1])]),
        _suite_object(1, _imo_velocity(-105.0, 4.5), 2.0),
    ], seed_salt=seed)
    rev.name = sequence_name(9, classify_sequence(rev)) + "_reversal"
    scripts.append(rev)

    # exit: object 0 leaves the sensor midway (placement solver bypassed)
    ex_obj = ObjectSpec(
        polygon=_QUAD,
        position=(SUITE_WIDTH * 0.63, SUITE_HEIGHT * 0.25),
        velocity=_imo_velocity(5.0, 6.0),
        texture=TextureSpec(seed=40, cell=4, density=0.5, levels=_OBJ_LEVELS[0]),
    )
    ex = _suite_script(2.0, [
        ex_obj,
        _suite_object(1, _imo_velocity(-30.0, 4.5), 2.0),
    ], seed_salt=seed)
    ex.name = sequence_name(10, classify_sequence(ex)) + "_exit"
    scripts.append(ex)

    # shatter: one quad splits into 4 triangles at SHATTER_TIME
    sh_obj = _suite_object(0, _imo_velocity(80.0, 2.0), 1.6, lane=(0.5, 0.5),
                           shatter_time=SHATTER_TIME, shatter_speed=45.0)
    sh = _suite_script(1.6, [sh_obj], seed_salt=seed)
    sh.name = sequence_name(11, classify_sequence(sh)) + "_shatter"
    scripts.append(sh)

    # long 2-IMO run: opposing-motion objects, 52 slices at the suite dt
    two = _suite_script(2.6, [
        _suite_object(0, _imo_velocity(150.0, 2.8), 2.6),
        _suite_object(1, _imo_velocity(-160.0, 2.9), 2.6),
    ], seed_salt=seed)
    two.name = sequence_name(12, classify_sequence(two)) + "_longrun"
    scripts.append(two)

    return scripts


def two_imo_fixture(seed: int = 0) -> SceneScript:
    """The standard 2-object fixture (Seq12) used by the acceptance suite."""
    return standard_fixture_suite(seed)[11]


# -- script serialization -----------------------------------------------------

def save_script(path, script: SceneScript) -> None:
    """Write a script as JSON (the plain-text scene configuration format)."""
    def texture(t: TextureSpec):
        return {"seed": t.seed, "cell": t.cell, "density": t.density,
                "levels": list(t.levels), "tile": t.tile}

    doc = {
        "name": script.name,
        "width": script.width,
        "height": script.height,
        "duration": script.duration,
        "event_trigger_tau": script.event_trigger_tau,
        "camera": {"velocity": list(script.camera.velocity), "omega": script.camera.omega},
        "background": texture(script.background),
        "objects": [
            {
                "polygon": [list(p) for p in obj.polygon],
                "position": list(obj.position),
                "velocity": list(obj.velocity),
                "omega": obj.omega,
                "texture": texture(obj.texture),
                "spawn": obj.spawn,
                "despawn": obj.despawn,
                "velocity_schedule": [list(s) for s in obj.velocity_schedule]
                if obj.velocity_schedule else None,
                "shatter_time": obj.shatter_time,
                "shatter_speed": obj.shatter_speed,
            }
            for obj in script.objects
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_script(path) -> SceneScript:
    """Parse a JSON scene script; raises InvalidScript with position info."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidScript(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc

    def texture(d) -> TextureSpec:
        return TextureSpec(
            seed=int(d.get("seed", 0)), cell=int(d.get("cell", 4)),
            density=float(d.get("density", 0.5)),
            levels=tuple(d.get("levels", (0.25, 0.7))),
            tile=int(d.get("tile", 256)),
        )

    try:
        objects = []
        for od in doc.get("objects", []):
            objects.append(ObjectSpec(
                polygon=[tuple(p) for p in od["polygon"]],
                position=tuple(od["position"]),
                velocity=tuple(od.get("velocity", (0.0, 0.0))),
                omega=float(od.get("omega", 0.0)),
                texture=texture(od.get("texture", {})),
                spawn=float(od.get("spawn", 0.0)),
                despawn=None if od.get("despawn") is None else float(od["despawn"]),
                velocity_schedule=[tuple(s) for s in od["velocity_schedule"]]
                if od.get("velocity_schedule") else None,
                shatter_time=None if od.get("shatter_time") is None else float(od["shatter_time"]),
                shatter_speed=float(od.get("shatter_speed", 40.0)),
            ))
        cam = doc.get("camera", {})
        script = SceneScript(
            width=int(doc["width"]), height=int(doc["height"]),
            duration=float(doc["duration"]),
            camera=CameraSpec(velocity=tuple(cam.get("velocity", (0.0, 0.0))),
                              omega=float(cam.get("omega", 0.0))),
            background=texture(doc.get("background", {})),
            objects=objects,
            event_trigger_tau=float(doc.get("event_trigger_tau", 0.25)),
            name=str(doc.get("name", Path(path).stem)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidScript(f"{path}: bad script field: {exc}") from exc
    script.validate()
    return script


# -- ground-truth directory ---------------------------------------------------

def write_ground_truth(path, truth: GroundTruth, rate: Optional[int] = None) -> None:
    """Write a ground-truth directory: meta.json, boxes.txt, velocities.txt
    and per-sample P5 mask rasters (mask_<sample>_obj<k>.pgm).

    `rate` subsamples the mask/box output (must divide the render rate);
    metadata records the output rate.
    """
    rate = rate or truth.rate
    if truth.rate % rate != 0:
        raise EvsegError(f"output rate {rate} must divide the render rate {truth.rate}")
    stride = truth.rate // rate
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    (path / "masks").mkdir(exist_ok=True)

    meta = {
        "width": truth.width, "height": truth.height,
        "duration": truth.duration, "rate": rate,
        "object_ids": list(truth.object_ids),
        "camera_velocity": list(truth.camera_velocity),
        "camera_omega": truth.camera_omega,
    }
    (path / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")

    with (path / "boxes.txt").open("w") as boxes, \
            (path / "velocities.txt").open("w") as vels:
        boxes.write("# t obj_id x0 y0 x1 y1\n")
        vels.write("# t obj_id vx vy  (obj_id -1 = camera)\n")
        for sample in range(0, len(truth.sample_times), stride):
            t = truth.sample_times[sample]
            vels.write(f"{t:.6f} -1 {truth.camera_velocity[0]:.6f} {truth.camera_velocity[1]:.6f}\n")
            for obj_id in truth.object_ids:
                mask = truth.mask(sample, obj_id)
                if mask is None:
                    continue
                x0, y0, x1, y1 = truth.box(sample, obj_id)
                boxes.write(f"{t:.6f} {obj_id} {x0} {y0} {x1} {y1}\n")
                v = truth.velocity(sample, obj_id)
                if v is not None:
                    vels.write(f"{t:.6f} {obj_id} {v[0]:.6f} {v[1]:.6f}\n")
                write_pgm(path / "masks" / f"mask_{sample // stride:06d}_obj{obj_id}.pgm", mask)


class DiskGroundTruth:
    """Read-only view of a ground-truth directory with the GroundTruth
    query interface used by evaluation."""

    def __init__(self, path):
        path = Path(path)
        if not (path / "meta.json").exists():
            from .errors import MissingGroundTruth
            raise MissingGroundTruth(f"{path}: no meta.json")
        meta = json.loads((path / "meta.json").read_text())
        self.width = int(meta["width"])
        self.height = int(meta["height"])
        self.duration = float(meta["duration"])
        self.rate = int(meta["rate"])
        self.object_ids = [int(v) for v in meta["object_ids"]]
        self.camera_velocity = tuple(meta["camera_velocity"])
        self.camera_omega = float(meta.get("camera_omega", 0.0))
        self.path = path
        n = int(round(self.duration * self.rate))
        self.sample_times = np.arange(n) / self.rate
        self._boxes = {}
        with (path / "boxes.txt").open() as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                t, obj_id, x0, y0, x1, y1 = line.split()
                sample = int(round(float(t) * self.rate))
                self._boxes[(sample, int(obj_id))] = (int(x0), int(y0), int(x1), int(y1))

    def nearest_sample(self, t: float) -> int:
        i = int(round(t * self.rate))
        return min(max(i, 0), len(self.sample_times) - 1)

    def objects_present(self, sample: int) -> List[int]:
        return [o for o in self.object_ids if (sample, o) in self._boxes]

    def box(self, sample: int, obj_id: int):
        return self._boxes.get((sample, obj_id))

    def mask(self, sample: int, obj_id: int):
        if (sample, obj_id) not in self._boxes:
            return None
        p = self.path / "masks" / f"mask_{sample:06d}_obj{obj_id}.pgm"
        if not p.exists():
            return None
        return read_pgm(p) > 127


def load_ground_truth(path) -> DiskGroundTruth:
    return DiskGroundTruth(path)
