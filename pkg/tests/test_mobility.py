import math
import random

import pytest

from dbmfsim.mobility import (NonPositivePowerError, Position, RadioParams,
                              WaypointState, ZeroDistanceError, advance,
                              distance_from_rss, euclidean, in_range,
                              init_positions, rss_at)
from tests.test_model import base_config

Q2 = RadioParams(trans_pow=1.0, k_const=1.0, q_exp=2, rad_rng=50.0)


class TestInitPositions:
    def test_deterministic(self):
        cfg = base_config(node_count=3)
        a = init_positions(cfg, random.Random(cfg.seed))
        b = init_positions(cfg, random.Random(cfg.seed))
        assert [(s.position.x, s.position.y) for s in a] == \
               [(s.position.x, s.position.y) for s in b]

    def test_within_bounds(self):
        cfg = base_config(node_count=200,
                          flows=(base_config().flows[0],))
        for s in init_positions(cfg, random.Random(5)):
            assert 0.0 <= s.position.x <= 500.0
            assert 0.0 <= s.position.y <= 500.0
            assert cfg.speed_min <= s.speed <= cfg.speed_max

    def test_uniformity_monte_carlo(self):
        # Empirical mean of uniform [0, 500] should sit near 250.
        cfg = base_config(node_count=10_000,
                          flows=(base_config().flows[0],))
        states = init_positions(cfg, random.Random(12345))
        mean_x = sum(s.position.x for s in states) / len(states)
        assert abs(mean_x - 250.0) <= 5.0


class TestAdvance:
    def test_exact_arrival_345(self):
        cfg = base_config(pause_time=2.0)
        state = WaypointState(Position(0.0, 0.0), Position(3.0, 4.0), 5.0, 0.0)
        out = advance(state, 1.0, cfg, random.Random(0))
        assert (out.position.x, out.position.y) == (3.0, 4.0)
        assert out.pause_remaining == 2.0

    def test_linear_interpolation(self):
        cfg = base_config()
        state = WaypointState(Position(0.0, 0.0), Position(3.0, 4.0), 5.0, 0.0)
        out = advance(state, 0.5, cfg, random.Random(0))
        assert out.position.x == pytest.approx(1.5, abs=1e-12)
        assert out.position.y == pytest.approx(2.0, abs=1e-12)

    def test_long_run_stays_in_bounds(self):
        cfg = base_config(area_width=100.0, area_height=80.0, pause_time=0.5,
                          speed_min=5.0, speed_max=50.0)
        rng = random.Random(77)
        state = init_positions(base_config(area_width=100.0, area_height=80.0,
                                           node_count=2), rng)[0]
        for _ in range(1000):
            state = advance(state, 0.1, cfg, rng)
            assert 0.0 <= state.position.x <= 100.0
            assert 0.0 <= state.position.y <= 80.0

    def test_distance_equals_speed_times_moving_time(self):
        # No pauses: path length over many steps must match speed * time.
        cfg = base_config(pause_time=0.0, speed_min=7.0, speed_max=7.0)
        rng = random.Random(3)
        state = WaypointState(Position(10.0, 10.0), Position(400.0, 300.0), 7.0, 0.0)
        total = 0.0
        steps = 500
        for _ in range(steps):
            nxt = advance(state, 0.1, cfg, rng)
            total += euclidean(state.position, nxt.position)
            state = nxt
        # Straight-line segments between samples undercount only at the
        # direction changes, each bounded by one step of slack.
        assert total <= 7.0 * 0.1 * steps + 1e-6
        assert total >= 7.0 * 0.1 * steps * 0.98

    def test_rejects_nonpositive_dt(self):
        cfg = base_config()
        state = WaypointState(Position(0, 0), Position(1, 1), 5.0, 0.0)
        with pytest.raises(ValueError):
            advance(state, 0.0, cfg, random.Random(0))


class TestFriis:
    def test_identity_case(self):
        assert rss_at(Q2, 1.0) == 1.0
        assert distance_from_rss(Q2, 1.0) == 1.0

    def test_exact_arithmetic_q2(self):
        radio = RadioParams(100.0, 1.0, 2, 50.0)
        assert rss_at(radio, 5.0) == 4.0
        assert distance_from_rss(radio, 4.0) == 5.0

    def test_exact_arithmetic_q3(self):
        radio = RadioParams(10.0, 2.0, 3, 50.0)
        assert rss_at(radio, 2.0) == 2.5

    def test_roundtrip_oracle(self):
        rng = random.Random(424242)
        for q in (2, 3):
            radio = RadioParams(100.0, 2.5, q, 50.0)
            for _ in range(1000):
                d = rng.uniform(0.1, 100.0)
                back = distance_from_rss(radio, rss_at(radio, d))
                assert abs(back - d) / d <= 1e-9

    def test_strictly_decreasing(self):
        radio = RadioParams(100.0, 1.0, 3, 50.0)
        distances = [0.5 * (i + 1) for i in range(100)]
        powers = [rss_at(radio, d) for d in distances]
        assert all(a > b for a, b in zip(powers, powers[1:]))
        back = [distance_from_rss(radio, p) for p in powers]
        assert all(a < b for a, b in zip(back, back[1:]))

    def test_errors(self):
        with pytest.raises(ZeroDistanceError):
            rss_at(Q2, 0.0)
        with pytest.raises(NonPositivePowerError):
            distance_from_rss(Q2, 0.0)


class TestInRange:
    def test_zero_distance(self):
        p = Position(1.0, 1.0)
        assert in_range(p, p, Q2, Q2)

    def test_min_range_governs(self):
        a, b = Position(0.0, 0.0), Position(30.0, 0.0)
        r50 = RadioParams(1.0, 1.0, 2, 50.0)
        r20 = RadioParams(1.0, 1.0, 2, 20.0)
        assert not in_range(a, b, r50, r20)
        assert in_range(a, b, r50, r50)

    def test_boundary_inclusive(self):
        # 3-4-5 triangle: distance is exactly 5 in floating point.
        a, b = Position(0.0, 0.0), Position(3.0, 4.0)
        r5 = RadioParams(1.0, 1.0, 2, 5.0)
        assert in_range(a, b, r5, r5)

    def test_symmetric(self):
        rng = random.Random(8)
        for _ in range(100):
            a = Position(rng.uniform(0, 100), rng.uniform(0, 100))
            b = Position(rng.uniform(0, 100), rng.uniform(0, 100))
            ra = RadioParams(1.0, 1.0, 2, rng.uniform(1, 60))
            rb = RadioParams(1.0, 1.0, 2, rng.uniform(1, 60))
            assert in_range(a, b, ra, rb) == in_range(b, a, rb, ra)
