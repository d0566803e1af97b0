"""Shared helpers: controlled-geometry simulations for engine-level tests."""

from dbmfsim.engine import Simulation


def place_static(sim: Simulation, coords) -> None:
    """Pin the first len(coords) nodes at fixed positions for the whole run.

    A huge pause keeps the waypoint logic from ever drawing a new leg, so the
    nodes are exactly stationary and consume no RNG.
    """
    for i, (x, y) in enumerate(coords):
        sim.xs[i] = x
        sim.ys[i] = y
        sim.txs[i] = x
        sim.tys[i] = y
        sim.pauses[i] = 1e18


def set_course(sim: Simulation, node: int, position, target, speed) -> None:
    """Send one node on a straight constant-speed leg (no pause)."""
    sim.xs[node], sim.ys[node] = position
    sim.txs[node], sim.tys[node] = target
    sim.speeds[node] = speed
    sim.pauses[node] = 0.0
