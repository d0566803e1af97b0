import random

import numpy as np
import pytest

from dbmfsim import _kernels_py, kernels, mobility
from dbmfsim.mobility import Position, WaypointState
from tests.test_model import base_config

try:
    from dbmfsim import _speedups
except ImportError:
    _speedups = None

needs_ext = pytest.mark.skipif(_speedups is None,
                               reason="compiled extension not built")


def random_arrays(n, seed):
    rng = random.Random(seed)
    mk = lambda lo, hi: np.array([rng.uniform(lo, hi) for _ in range(n)])
    xs, ys = mk(0, 500), mk(0, 500)
    txs, tys = mk(0, 500), mk(0, 500)
    speeds = mk(1, 50)
    pauses = np.array([0.0 if rng.random() < 0.8 else rng.uniform(0, 2)
                       for _ in range(n)])
    ranges = mk(10, 60)
    alive = np.array([1 if rng.random() < 0.9 else 0 for _ in range(n)],
                     dtype=np.uint8)
    return xs, ys, txs, tys, speeds, pauses, ranges, alive


@needs_ext
class TestBackendParity:
    def test_advance_bitwise_identical(self):
        for seed in range(5):
            a = random_arrays(200, seed)
            b = tuple(arr.copy() for arr in a)
            fa = _kernels_py.advance_moving(*a[:6], 0.1)
            fb = _speedups.advance_moving(*b[:6], 0.1)
            assert fa == fb
            for x, y in zip(a[:6], b[:6]):
                assert np.array_equal(x, y)  # exact, not approximate

    def test_scan_bitwise_identical(self):
        for seed in range(5):
            xs, ys, _, _, _, _, ranges, alive = random_arrays(200, seed + 50)
            for q in (2, 3):
                ia, ra = _kernels_py.scan_receivers(
                    xs, ys, ranges, alive, 3, 1.5, 100.0, q, 0.01, True)
                ib, rb = _speedups.scan_receivers(
                    xs, ys, ranges, alive, 3, 1.5, 100.0, q, 0.01, True)
                assert ia == ib
                assert ra == rb  # list equality: exact float match

    def test_scan_without_rss(self):
        xs, ys, _, _, _, _, ranges, alive = random_arrays(100, 7)
        ia, ra = _kernels_py.scan_receivers(xs, ys, ranges, alive, 0,
                                            1.0, 1.0, 2, 0.01, False)
        ib, rb = _speedups.scan_receivers(xs, ys, ranges, alive, 0,
                                          1.0, 1.0, 2, 0.01, False)
        assert ia == ib and ra is None and rb is None


class TestKernelSemantics:
    def test_matches_scalar_advance_when_cruising(self):
        # Nodes far from their targets: the batch move must equal the scalar
        # Random Waypoint step exactly.
        cfg = base_config()
        xs, ys, txs, tys, speeds, pauses, _, _ = random_arrays(50, 11)
        txs = txs + 1000.0  # guarantee no arrivals within dt
        expect = []
        for i in range(50):
            state = WaypointState(Position(float(xs[i]), float(ys[i])),
                                  Position(float(txs[i]), float(tys[i])),
                                  float(speeds[i]), 0.0)
            out = mobility.advance(state, 0.1, cfg, random.Random(0))
            expect.append((out.position.x, out.position.y))
        flagged = kernels.active.advance_moving(
            xs, ys, txs, tys, speeds, np.zeros(50), 0.1)
        assert flagged == []
        for i, (ex, ey) in enumerate(expect):
            assert xs[i] == ex and ys[i] == ey

    def test_flags_paused_and_arriving(self):
        xs = np.array([0.0, 0.0, 0.0])
        ys = np.zeros(3)
        txs = np.array([100.0, 0.4, 100.0])
        tys = np.zeros(3)
        speeds = np.array([5.0, 5.0, 5.0])
        pauses = np.array([0.0, 0.0, 3.0])
        flagged = kernels.active.advance_moving(xs, ys, txs, tys, speeds,
                                                pauses, 0.1)
        assert flagged == [1, 2]  # node 1 arrives, node 2 is paused
        assert xs[0] == pytest.approx(0.5)
        assert xs[1] == 0.0  # untouched, caller handles it

    def test_scan_excludes_dead_and_out_of_range(self):
        xs = np.array([0.0, 10.0, 10.0, 200.0])
        ys = np.zeros(4)
        ranges = np.array([50.0, 50.0, 50.0, 50.0])
        alive = np.array([1, 1, 0, 1], dtype=np.uint8)
        idx, rss = kernels.active.scan_receivers(xs, ys, ranges, alive, 0,
                                                 1.0, 100.0, 2, 0.01, True)
        assert idx == [1]
        assert rss == [pytest.approx(1.0)]

    def test_scan_respects_mutual_range(self):
        xs = np.array([0.0, 30.0])
        ys = np.zeros(2)
        ranges = np.array([50.0, 20.0])  # the weaker radio rules
        alive = np.ones(2, dtype=np.uint8)
        idx, _ = kernels.active.scan_receivers(xs, ys, ranges, alive, 0,
                                               1.0, 1.0, 2, 0.01, False)
        assert idx == []

    def test_scan_clamps_colocated(self):
        xs = np.array([5.0, 5.0])
        ys = np.array([5.0, 5.0])
        ranges = np.array([50.0, 50.0])
        alive = np.ones(2, dtype=np.uint8)
        idx, rss = kernels.active.scan_receivers(xs, ys, ranges, alive, 0,
                                                 1.0, 1.0, 2, 0.01, True)
        assert idx == [1]
        assert rss[0] == pytest.approx(1.0 / 0.01 ** 2)

    def test_backend_registry(self):
        assert "pure-python" in kernels.available_backends()
        with pytest.raises(ValueError):
            kernels.use("fortran")
