"""Node kinematics (Random Waypoint) and the radio propagation model.

Received power follows the free-space relation rec = K * P / d^q with q in
{2, 3}; the inverse recovers distance from a received-power sample, which is
what the link-life estimator feeds on.  Distances use sqrt(dx*dx + dy*dy)
rather than hypot so the compiled batch kernels produce bit-identical floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Friis blows up at zero range; co-located nodes are treated as this far apart.
MIN_DISTANCE_M = 0.01


class ZeroDistanceError(ValueError):
    pass


class NonPositivePowerError(ValueError):
    pass


@dataclass(frozen=True)
class Position:
    x: float
    y: float


@dataclass
class WaypointState:
    """One node's Random Waypoint state: where it is, where it is headed."""

    position: Position
    target: Position
    speed: float            # m/s, fixed per leg
    pause_remaining: float  # seconds left of the current pause (0 = moving)


@dataclass(frozen=True)
class RadioParams:
    trans_pow: float  # transmit power, arbitrary linear unit
    k_const: float    # absorbs antenna gains / wavelength
    q_exp: int        # 2 or 3
    rad_rng: float    # radio range, meters


def euclidean(a: Position, b: Position) -> float:
    dx = b.x - a.x
    dy = b.y - a.y
    return math.sqrt(dx * dx + dy * dy)


def init_positions(cfg, rng) -> list[WaypointState]:
    """Uniform initial placement over the area, per-node draw order fixed.

    Draws exactly six uniforms per node (x, y, target x, target y, speed,
    initial pause) so the RNG stream layout is part of the determinism
    contract.  Starting mid-pause, not only mid-leg, keeps the ensemble
    close to the Random Waypoint steady state from the first tick.
    """
    states = []
    for _ in range(cfg.node_count):
        x = rng.uniform(0.0, cfg.area_width)
        y = rng.uniform(0.0, cfg.area_height)
        tx = rng.uniform(0.0, cfg.area_width)
        ty = rng.uniform(0.0, cfg.area_height)
        speed = rng.uniform(cfg.speed_min, cfg.speed_max)
        pause = rng.uniform(0.0, cfg.pause_time) if cfg.pause_time > 0 else 0.0
        states.append(WaypointState(Position(x, y), Position(tx, ty), speed, pause))
    return states


def advance(state: WaypointState, dt: float, cfg, rng) -> WaypointState:
    """Move one node forward dt seconds of Random Waypoint motion.

    Handles multiple leg/pause transitions within dt.  Targets are drawn
    inside the area, so positions never leave it.  Retarget draw order is
    (target x, target y, speed), matching init_positions' suffix.
    """
    if dt <= 0:
        raise ValueError("advance: dt must be > 0")
    x, y = state.position.x, state.position.y
    tx, ty = state.target.x, state.target.y
    speed = state.speed
    pause = state.pause_remaining
    remaining = dt

    while remaining > 0.0:
        if pause > 0.0:
            if pause >= remaining:
                pause -= remaining
                remaining = 0.0
            else:
                remaining -= pause
                pause = 0.0
            continue
        dx = tx - x
        dy = ty - y
        dist = math.sqrt(dx * dx + dy * dy)
        if dist == 0.0:
            # Pause over (or degenerate target): pick the next leg.
            tx = rng.uniform(0.0, cfg.area_width)
            ty = rng.uniform(0.0, cfg.area_height)
            speed = rng.uniform(cfg.speed_min, cfg.speed_max)
            continue
        step = speed * remaining
        if step >= dist:
            # Arrive exactly at the waypoint, then start the pause.
            x, y = tx, ty
            remaining -= dist / speed
            pause = cfg.pause_time
        else:
            x += dx / dist * step
            y += dy / dist * step
            remaining = 0.0

    return WaypointState(Position(x, y), Position(tx, ty), speed, pause)


def rss_at(radio: RadioParams, distance: float) -> float:
    """Received power at `distance` from a transmitter described by `radio`."""
    if distance <= 0.0:
        raise ZeroDistanceError(f"distance must be > 0, got {distance}")
    d2 = distance * distance
    if radio.q_exp == 2:
        return radio.k_const * radio.trans_pow / d2
    return radio.k_const * radio.trans_pow / (d2 * distance)


def distance_from_rss(radio: RadioParams, rec_pow: float) -> float:
    """Exact inverse of rss_at: distance implied by a received-power sample."""
    if rec_pow <= 0.0:
        raise NonPositivePowerError(f"received power must be > 0, got {rec_pow}")
    ratio = radio.k_const * radio.trans_pow / rec_pow
    if radio.q_exp == 2:
        return math.sqrt(ratio)
    return ratio ** (1.0 / 3.0)


def in_range(a: Position, b: Position, radio_a: RadioParams, radio_b: RadioParams) -> bool:
    """Bidirectional link rule: both radios must span the distance (boundary inclusive)."""
    dx = b.x - a.x
    dy = b.y - a.y
    limit = min(radio_a.rad_rng, radio_b.rad_rng)
    return dx * dx + dy * dy <= limit * limit
