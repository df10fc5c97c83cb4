import numpy as np
import pytest
import sympy

from evseg.errors import EmptySlice
from evseg.events import Event, EventSlice
from evseg.warp import WarpParams, contrast_score, project, temporal_gradient_loss, warp_event

from conftest import moving_block, translating_slice


def symbolic_warp(x, y, t, t0, tx, ty, tz, tr, cx, cy):
    """Independent symbolic evaluation of the similarity-flow displacement."""
    xs, ys, d = sympy.symbols("xs ys d")
    dx, dy = xs - cx, ys - cy
    u = xs - d * (tx + tz * dx - tr * dy)
    v = ys - d * (ty + tz * dy + tr * dx)
    subs = {xs: x, ys: y, d: t - t0}
    return float(u.subs(subs)), float(v.subs(subs))


class TestWarpEvent:
    def test_zero_theta_is_identity(self):
        e = Event(10, 20, 3.7)
        assert warp_event(e, WarpParams(center=(5, 5)), t0=1.0) == (10.0, 20.0)

    def test_pure_translation(self):
        e = Event(10, 0, 1.0)
        theta = WarpParams(theta_x=5.0, center=(50.0, 50.0))
        assert warp_event(e, theta, t0=0.0) == (5.0, 0.0)

    def test_divergence_example(self):
        # frozen from the symbolic oracle below
        e = Event(12, 10, 0.5)
        theta = WarpParams(theta_z=0.2, center=(10.0, 10.0))
        u, v = warp_event(e, theta, t0=0.0)
        assert (u, v) == pytest.approx((11.8, 10.0), abs=1e-12)
        assert symbolic_warp(12, 10, 0.5, 0.0, 0, 0, 0.2, 0, 10, 10) == pytest.approx((11.8, 10.0))

    def test_matches_symbolic_oracle(self, rng):
        for _ in range(20):
            x, y = rng.integers(0, 100, 2)
            t = float(rng.uniform(0, 2))
            params = rng.uniform(-1, 1, 4) * [50, 50, 1, 2]
            cx, cy = rng.uniform(0, 100, 2)
            theta = WarpParams(*params, center=(cx, cy))
            got = warp_event(Event(int(x), int(y), t), theta, t0=0.0)
            want = symbolic_warp(int(x), int(y), t, 0.0, *params, cx, cy)
            assert got == pytest.approx(want, rel=1e-12)

    def test_zero_dt_is_identity(self, rng):
        for _ in range(10):
            params = rng.uniform(-1, 1, 4) * [100, 100, 2, 6]
            theta = WarpParams(*params, center=(30, 40))
            e = Event(17, 23, 5.0)
            assert warp_event(e, theta, t0=5.0) == (17.0, 23.0)

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            WarpParams(theta_x=float("nan"))


class TestProject:
    def test_single_event_single_pixel(self):
        s = EventSlice([7], [5], [0.0], [1], 0.0, 1.0, 16, 16)
        frame = project(s, WarpParams())
        assert frame.support == 1
        assert frame.count[5, 7] == 1.0
        assert frame.count.sum() == 1.0
        assert frame.dropped == 0

    def test_two_event_mean_variance(self):
        s = EventSlice([3, 3], [4, 4], [0.0, 0.1], [1, 1], 0.0, 1.0, 8, 8)
        frame = project(s, WarpParams())
        assert frame.mean_t[4, 3] == pytest.approx(0.05)
        assert frame.var_t[4, 3] == pytest.approx(0.0025)

    def test_empty_slice_raises(self):
        s = EventSlice([], [], [], [], 0.0, 1.0, 8, 8)
        with pytest.raises(EmptySlice):
            project(s, WarpParams())

    def test_compensation_shrinks_support(self, rng):
        s = translating_slice(rng, velocity=(20.0, 0.0), n_events=1000, duration=0.5)
        sharp = project(s, WarpParams(theta_x=20.0, center=(64, 48)))
        blurry = project(s, WarpParams(center=(64, 48)))
        assert sharp.support < blurry.support

    def test_count_sum_matches_inbounds(self, rng):
        s = translating_slice(rng, velocity=(30.0, -12.0), n_events=1500, duration=0.5)
        theta = WarpParams(theta_x=700.0, theta_y=300.0, center=(64, 48))
        frame = project(s, theta)
        kept = len(s) - frame.dropped
        assert frame.count.sum() == pytest.approx(kept, abs=1e-6)
        assert frame.dropped > 0  # the big warp pushes some events out

    def test_permutation_invariance(self, rng):
        s = translating_slice(rng, n_events=800)
        perm = rng.permutation(len(s))
        order = np.argsort(s.ts[perm], kind="stable")
        shuffled = EventSlice(s.xs[perm][order], s.ys[perm][order], s.ts[perm][order],
                              s.ps[perm][order], s.t0, s.t1, s.width, s.height)
        theta = WarpParams(theta_x=13.0, theta_y=5.0, center=(64, 48))
        a = project(s, theta)
        b = project(shuffled, theta)
        np.testing.assert_allclose(a.count, b.count, atol=1e-9)

    def test_frame_invariants(self, rng):
        s = translating_slice(rng, velocity=(25.0, 10.0), n_events=1200)
        frame = project(s, WarpParams(theta_x=10.0, center=(64, 48)))
        assert np.all(frame.var_t >= 0)
        assert frame.mean_t.min() >= 0.0
        assert frame.mean_t.max() <= s.duration
        assert frame.support == np.count_nonzero(frame.count)


class TestTemporalGradientLoss:
    def make_frame(self, mean_t, count):
        from evseg.warp import EventFrame
        count = np.asarray(count, dtype=float)
        mask = count > 0
        return EventFrame(count, np.where(mask, mean_t, 0.0), np.zeros_like(count),
                          int(mask.sum()), 0, 0.0)

    def test_constant_is_zero(self):
        frame = self.make_frame(np.full((8, 8), 0.42), np.ones((8, 8)))
        assert temporal_gradient_loss(frame) == 0.0

    def test_ramp_recovers_slope(self):
        s = 0.03
        xs = np.arange(10, dtype=float)
        mean_t = np.tile(s * xs, (6, 1))
        frame = self.make_frame(mean_t, np.ones((6, 10)))
        # central and one-sided stencils all read slope s on a linear ramp
        assert temporal_gradient_loss(frame) == pytest.approx(s, rel=1e-12)

    def test_unsupported_neighbors_excluded(self):
        # one supported pixel with a wild value, isolated: no gradient read
        count = np.zeros((5, 5))
        count[2, 2] = 3.0
        frame = self.make_frame(np.full((5, 5), 9.9), count)
        assert temporal_gradient_loss(frame) == 0.0

    def test_zero_support_raises(self):
        frame = self.make_frame(np.zeros((4, 4)), np.zeros((4, 4)))
        with pytest.raises(EmptySlice):
            temporal_gradient_loss(frame)

    def test_truth_beats_zero_warp(self, rng):
        s = translating_slice(rng, velocity=(20.0, 0.0), n_events=2000)
        loss_gt = temporal_gradient_loss(project(s, WarpParams(theta_x=20.0, center=(64, 48))))
        loss_0 = temporal_gradient_loss(project(s, WarpParams(center=(64, 48))))
        assert loss_gt < loss_0

    def test_grid_minimum_near_generator_velocity(self):
        v = (20.15, -8.1)
        s = moving_block(31, velocity=v)
        cx = round(v[0] / 0.5) * 0.5
        cy = round(v[1] / 0.5) * 0.5
        best, best_loss = None, np.inf
        for dx in np.arange(-2.0, 2.01, 0.5):
            for dy in np.arange(-2.0, 2.01, 0.5):
                theta = WarpParams(cx + dx, cy + dy, center=(48, 36))
                loss = temporal_gradient_loss(project(s, theta))
                if loss < best_loss:
                    best, best_loss = theta, loss
        assert (best.theta_x, best.theta_y) == pytest.approx((cx, cy))


class TestContrastScore:
    def test_concentrated_is_maximal(self):
        n = 50
        s = EventSlice([6] * n, [6] * n, np.linspace(0, 0.9, n), [1] * n,
                       0.0, 1.0, 16, 16)
        score_identity = contrast_score(s, WarpParams())
        for tx, ty in [(2.0, 0.0), (-3.0, 1.0), (0.0, 5.0), (1.0, 1.0)]:
            smeared = contrast_score(s, WarpParams(tx, ty, center=(8, 8)))
            assert smeared < score_identity

    def test_uniform_frame_is_zero(self):
        ys, xs = np.mgrid[0:8, 0:8]
        n = 64
        s = EventSlice(xs.ravel(), ys.ravel(), np.full(n, 0.5), np.ones(n),
                       0.0, 1.0, 8, 8)
        assert contrast_score(s, WarpParams()) == pytest.approx(0.0, abs=1e-12)

    def test_truth_beats_zero_warp(self, rng):
        s = translating_slice(rng, velocity=(20.0, 0.0), n_events=2000, duration=0.5)
        assert contrast_score(s, WarpParams(theta_x=20.0, center=(64, 48))) > \
            contrast_score(s, WarpParams(center=(64, 48)))

    def test_ranks_agree_with_loss(self, rng):
        # candidates inside the sharp neighborhood of the optimum, where
        # both measures respond to alignment rather than sweep artifacts
        s = translating_slice(rng, velocity=(20.0, 0.0), n_events=3000, duration=0.5)
        candidates = [14.0, 17.0, 20.0, 22.0]
        losses, scores = [], []
        for tx in candidates:
            theta = WarpParams(theta_x=tx, center=(64, 48))
            losses.append(temporal_gradient_loss(project(s, theta)))
            scores.append(contrast_score(s, theta))
        for i in range(len(candidates)):
            for j in range(i + 1, len(candidates)):
                assert (losses[i] < losses[j]) == (scores[i] > scores[j])
