"""Shared synthetic fixtures.

These generators build event slices directly from scripted point motion,
independent of the scene simulator, so they can serve as oracles for it
and for the fitting/segmentation stack.
"""

import numpy as np
import pytest

from evseg.events import EventSlice


def pattern_slice(rng, positions_at, n_events, width=128, height=96,
                  duration=0.1, t0=0.0):
    """Sample events from a time-parameterized point pattern.

    positions_at(dt) must return an (M, 2) float array of pattern point
    positions dt seconds after t0. Each event picks one pattern point and
    one uniform time, then rounds the instantaneous position to a pixel.
    """
    ts = np.sort(rng.uniform(0.0, duration, n_events)) + t0
    idx = rng.integers(0, len(positions_at(0.0)), n_events)
    xs = np.empty(n_events)
    ys = np.empty(n_events)
    for i, (t, j) in enumerate(zip(ts, idx)):
        p = positions_at(t - t0)[j]
        xs[i] = np.round(p[0])
        ys[i] = np.round(p[1])
    if xs.min() < 0 or xs.max() >= width or ys.min() < 0 or ys.max() >= height:
        raise AssertionError("fixture pattern left the sensor; adjust geometry")
    return EventSlice(xs, ys, ts, np.ones(n_events, dtype=np.int8),
                      t0, t0 + duration, width, height)


def bar_points(length=30, thickness=2):
    """Vertical bar of unit-spaced points, thickness columns wide."""
    ys, xs = np.mgrid[0:length, 0:thickness]
    return np.stack([xs.ravel(), ys.ravel()], axis=1).astype(float)


def translating_slice(rng, velocity=(20.0, 0.0), n_events=2000, width=128,
                      height=96, duration=0.1, t0=0.0, start=None):
    """Events from a rigid bar translating at `velocity` px/s."""
    base = bar_points()
    v = np.asarray(velocity, dtype=float)
    if start is None:
        span = v * duration
        start = np.round([
            (width - base[:, 0].max()) / 2 - span[0] / 2,
            (height - base[:, 1].max()) / 2 - span[1] / 2,
        ])
    pts = base + np.asarray(start)

    def positions_at(dt):
        return pts + v * dt

    return pattern_slice(rng, positions_at, n_events, width, height, duration, t0)


def rotating_slice(rng, omega=1.0, n_events=3000, width=128, height=96,
                   duration=0.1, t0=0.0, radius=30.0):
    """Events from a textured disk rim rotating at `omega` rad/s about its center."""
    center = np.array([width / 2.0, height / 2.0])
    angles = rng.uniform(0, 2 * np.pi, 80)
    radii = rng.uniform(0.5, 1.0, 80) * radius
    base = np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=1)

    def positions_at(dt):
        a = omega * dt
        rot = np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])
        return center + base @ rot.T

    return pattern_slice(rng, positions_at, n_events, width, height, duration, t0)


def static_slice(rng, n_events=2000, width=128, height=96, duration=0.1, t0=0.0):
    """Events from a stationary random texture (noise-triggered)."""
    pts = np.stack([
        rng.uniform(5, width - 6, 120),
        rng.uniform(5, height - 6, 120),
    ], axis=1)

    def positions_at(dt):
        return pts

    return pattern_slice(rng, positions_at, n_events, width, height, duration, t0)


def rendered_translation(seed, velocity=(20.0, 0.0), duration=0.2, width=96,
                         height=72, tau=0.3, cell=5, density=0.45):
    """Rendered pure-translation fixture: the whole scene pans at `velocity`.

    Gives realistic edge-crossing event timing, unlike the sampled-pattern
    fixtures above; the generating velocity is the fitting oracle.
    """
    from evseg.simulate import CameraSpec, SceneScript, TextureSpec, render_events

    script = SceneScript(
        width=width, height=height, duration=duration,
        camera=CameraSpec(velocity=velocity),
        background=TextureSpec(seed=seed, cell=cell, density=density),
        event_trigger_tau=tau,
    )
    stream, _ = render_events(script, seed=seed)
    return stream


def moving_block(seed, velocity=(20.0, 0.0), duration=0.4, width=96, height=72,
                 tau=0.35, cell=5, density=0.45, half=(26.0, 19.0)):
    """Rendered pure-translation fixture: one big textured block translating
    inside a flat background.

    Nothing enters or leaves the sensor, so the loss basin is free of the
    border bias a panning full-frame texture shows; the block velocity is
    the fitting oracle.
    """
    from evseg.simulate import (
        CameraSpec, ObjectSpec, SceneScript, TextureSpec, render_events,
    )

    disp = np.asarray(velocity) * duration
    pos = (width / 2 - disp[0] / 2, height / 2 - disp[1] / 2)
    obj = ObjectSpec(
        polygon=[(-half[0], -half[1]), (half[0], -half[1]),
                 (half[0], half[1]), (-half[0], half[1])],
        position=pos, velocity=tuple(velocity),
        texture=TextureSpec(seed=seed + 50, cell=cell, density=density,
                            levels=(0.35, 0.95)),
    )
    script = SceneScript(
        width=width, height=height, duration=duration, camera=CameraSpec(),
        background=TextureSpec(seed=seed, density=0.0, levels=(0.55, 0.55)),
        objects=[obj], event_trigger_tau=tau,
    )
    stream, _ = render_events(script, seed=seed)
    return stream


def rotating_block(seed, omega_rad=1.0, duration=0.4, width=96, height=72,
                   tau=0.35, radius=22.0):
    """Rendered textured octagon spinning at omega_rad rad/s about its centroid."""
    from evseg.simulate import (
        CameraSpec, ObjectSpec, SceneScript, TextureSpec, render_events,
    )

    angles = np.arange(8) * (2 * np.pi / 8)
    poly = [(radius * np.cos(a), radius * np.sin(a)) for a in angles]
    obj = ObjectSpec(
        polygon=poly, position=(width / 2.0, height / 2.0),
        omega=np.degrees(omega_rad),
        texture=TextureSpec(seed=seed + 90, cell=5, density=0.45, levels=(0.35, 0.95)),
    )
    script = SceneScript(
        width=width, height=height, duration=duration, camera=CameraSpec(),
        background=TextureSpec(seed=seed, density=0.0, levels=(0.55, 0.55)),
        objects=[obj], event_trigger_tau=tau,
    )
    stream, _ = render_events(script, seed=seed)
    return stream


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
