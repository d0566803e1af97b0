"""Link-lifetime estimation and fuzzy fusion.

A link's future is judged from three angles and fused into one crisp grade:

* mobility: the trend of Friis-derived distances over the last few Hello
  samples predicts when the pair drifts out of range (LP seconds, squashed
  into LPM in [0, 1));
* energy: how long both endpoints can stay operational (>= 40% battery) for
  the remaining transfer (LE seconds, squashed into LPE);
* congestion: the forwarding endpoint's reverse drop ratio DPR (1 = lossless).

LPM/LPE/DPR are mapped onto labels a < b < c < d via fixed crisp ranges and
combined through two 4x4 rule tables: (LPM, LPE) -> TM, then (TM, DPR) ->
link life.  A route is only as good as its worst link, so the route grade is
the minimum link label along it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .mobility import RadioParams, distance_from_rss
from .model import FuzzyLabel, label_min

# Relative mobility below this (m/s) counts as "not receding": the link is
# not predicted to break by motion, so LP saturates at the cap.
REL_MOB_EPS = 1e-6

# A Hello gap longer than this many intervals invalidates the sample history.
GAP_FACTOR = 1.5

# Largest double below 1.0; squash clamps here so its range stays [0, 1).
_SQUASH_MAX = math.nextafter(1.0, 0.0)

# Crisp-range breakpoints per scale; intervals are [lo, hi) with the last one
# closed at 1.0.  LPE uses its own, coarser-bottom split.
SCALE_BREAKPOINTS = {
    "lpm_scale": (0.25, 0.50, 0.75),
    "lpe_scale": (0.40, 0.60, 0.80),
    "dpr_scale": (0.25, 0.50, 0.75),
    "link_life_scale": (0.25, 0.50, 0.75),
}

_A, _B, _C, _D = FuzzyLabel.A, FuzzyLabel.B, FuzzyLabel.C, FuzzyLabel.D

# Rule table 1: rows = LPE label, columns = LPM label, cell = TM.
TM_TABLE = (
    (_A, _A, _A, _A),
    (_A, _B, _C, _C),
    (_B, _C, _C, _D),
    (_C, _C, _D, _D),
)

# Rule table 2: rows = DPR label, columns = TM label, cell = link life.
# Transcribed independently of TM_TABLE even though the matrices coincide.
LINK_LIFE_TABLE = (
    (_A, _A, _A, _A),
    (_A, _B, _C, _C),
    (_B, _C, _C, _D),
    (_C, _C, _D, _D),
)


class CapacityExceededError(ValueError):
    """Aggregate rate over a node's capacity; admission must reject the path."""


@dataclass
class RssWindow:
    """Sliding window of (timestamp, received power) Hello samples.

    Holds at most `capacity` samples at `intv` spacing.  A gap longer than
    GAP_FACTOR * intv means Hellos were missed and the kinematic history is
    stale, so the window restarts from scratch.
    """

    capacity: int
    intv: float
    samples: list = field(default_factory=list)

    def add(self, timestamp: float, rec_pow: float) -> None:
        if self.samples:
            last_t = self.samples[-1][0]
            if timestamp <= last_t:
                raise ValueError("RSS samples must have strictly increasing timestamps")
            if timestamp - last_t > GAP_FACTOR * self.intv:
                self.samples.clear()
        self.samples.append((timestamp, rec_pow))
        if len(self.samples) > self.capacity:
            del self.samples[0]

    def __len__(self) -> int:
        return len(self.samples)


@dataclass
class MobilityEstimate:
    distances: list          # meters, one per window sample
    current_distance: float  # meters
    avg_rel_mob: float       # m/s; positive = receding
    lp: float                # predicted seconds until out of range
    lpm: float               # squashed grade in [0, 1)


@dataclass
class EnergyProfile:
    """One node's battery and capacity description; engine-owned, mutable."""

    initial_energy: float   # J
    consumed_energy: float  # J, cumulative
    recv_cost: float        # J per received packet
    send_cost: float        # J per sent packet
    max_arrival: float      # packets/s capacity
    max_departure: float    # packets/s capacity

    @property
    def remaining(self) -> float:
        return self.initial_energy - self.consumed_energy


@dataclass
class TrafficState:
    """Per-node traffic bookkeeping: committed path rates plus raw counters."""

    max_arrival: float                 # caps of the owning node
    max_departure: float
    per_path_arrival: list = field(default_factory=list)
    per_path_departure: list = field(default_factory=list)
    arrived_total: int = 0
    departed_total: int = 0
    dropped_total: int = 0


@dataclass
class EnergyEstimate:
    trans_rate: float       # J/s spent transmitting
    recv_rate: float        # J/s worst-case reception budget
    per_packet_time: float  # s per packet
    active_time: float      # s the node must stay busy for the transfer
    total_consumption: float  # J projected for the whole transfer
    operational: bool       # keeps >= 40% battery throughout
    le: float               # s, min active time of the pair (0 if either fails)
    lpe: float              # squashed grade in [0, 1)


@dataclass
class LinkLifeEstimate:
    lpm: float
    lpe: float
    dpr: float
    tm: FuzzyLabel
    link_life: FuzzyLabel


def relative_mobility(window: RssWindow, radio: RadioParams) -> tuple[float, float]:
    """Average recession speed (m/s) and current distance from RSS history.

    Successive distance differences over the window telescope to the endpoint
    slope, so only the first and last samples enter the quotient:
    (d_last - d_first) / ((m - 1) * intv).
    """
    m = len(window.samples)
    if m < 2:
        raise ValueError(f"relative_mobility needs >= 2 samples, have {m}")
    d_first = distance_from_rss(radio, window.samples[0][1])
    d_last = distance_from_rss(radio, window.samples[-1][1])
    avg = (d_last - d_first) / ((m - 1) * window.intv)
    return avg, d_last


def link_prediction(rad_rng: float, current_distance: float,
                    avg_rel_mob: float, lp_cap: float) -> float:
    """Seconds until the pair is predicted to leave radio range.

    Static or approaching pairs are not threatened by mobility, so LP
    saturates at lp_cap; a pair already at/near the boundary gets 0.
    """
    if current_distance < 0:
        raise ValueError("current_distance must be >= 0")
    if avg_rel_mob <= REL_MOB_EPS:
        return lp_cap
    lp = (rad_rng - current_distance) / avg_rel_mob
    if lp < 0.0:
        return 0.0
    return min(lp, lp_cap)


def squash(x: float) -> float:
    """Map [0, inf) onto [0, 1): (1 - e^-x) / (1 + e^-x), i.e. tanh(x/2).

    Clamped one ulp below 1.0 so the half-open range holds even where the
    quotient rounds to exactly 1 (x above ~38).
    """
    if x < 0.0:
        raise ValueError(f"squash input must be >= 0, got {x}")
    e = math.exp(-x)
    value = (1.0 - e) / (1.0 + e)
    return value if value < 1.0 else _SQUASH_MAX


def aggregate_rates(traffic: TrafficState) -> tuple[float, float]:
    """Total committed arrival/departure rates across all participating paths.

    Raises CapacityExceededError when a total breaks the node's capacity
    inequality; admission control rejects the newest path in that case.
    """
    data_arr = math.fsum(traffic.per_path_arrival)
    data_dept = math.fsum(traffic.per_path_departure)
    if data_arr > traffic.max_arrival:
        raise CapacityExceededError(
            f"arrival rate {data_arr:g} exceeds capacity {traffic.max_arrival:g}")
    if data_dept > traffic.max_departure:
        raise CapacityExceededError(
            f"departure rate {data_dept:g} exceeds capacity {traffic.max_departure:g}")
    return data_arr, data_dept


def transmission_energy_rate(profile: EnergyProfile, data_dept: float) -> float:
    """J/s spent forwarding at the given departure rate."""
    if data_dept < 0:
        raise ValueError("data_dept must be >= 0")
    return profile.send_cost * data_dept


def reception_energy_rate(profile: EnergyProfile) -> float:
    """Worst-case J/s reception budget (arrivals at full capacity)."""
    return profile.recv_cost * profile.max_arrival


def active_time(total_packets: int, per_packet_time: float) -> float:
    """Seconds the node must stay busy to move total_packets."""
    if total_packets < 0 or per_packet_time < 0:
        raise ValueError("active_time inputs must be >= 0")
    return total_packets * per_packet_time


def total_energy_consumption(active_time_s: float, trans_rate: float,
                             recv_rate: float) -> float:
    """Projected J drained over the whole transfer."""
    if active_time_s < 0 or trans_rate < 0 or recv_rate < 0:
        raise ValueError("total_energy_consumption inputs must be >= 0")
    return active_time_s * (trans_rate + recv_rate)


def is_operational(profile: EnergyProfile, projected_consumption: float) -> bool:
    """True iff the node keeps at least 40% of its initial battery after the
    projected transfer: 0.6*initial - consumed - projected >= 0."""
    return (0.6 * profile.initial_energy
            - profile.consumed_energy
            - projected_consumption) >= 0.0


def link_energy_duration(at_j: float, op_j: bool, at_k: float, op_k: bool) -> float:
    """Seconds both endpoints stay active; 0 if either fails the 40% rule."""
    if at_j < 0 or at_k < 0:
        raise ValueError("active times must be >= 0")
    if op_j and op_k:
        return min(at_j, at_k)
    return 0.0


def drop_ratio(arrived_total: int, departed_plus_queued: int) -> float:
    """Reverse drop ratio: 1 = nothing dropped, 0 = everything dropped.

    No arrivals means no evidence of loss, scored as the optimistic 1.0
    (alternative: a neutral 0.5 prior, rejected to keep fresh nodes routable).
    """
    if departed_plus_queued > arrived_total:
        raise ValueError(
            f"departed+queued ({departed_plus_queued}) exceeds arrivals ({arrived_total})")
    if arrived_total == 0:
        return 1.0
    drops = arrived_total - departed_plus_queued
    return 1.0 - drops / arrived_total


def label_of(value: float, kind: str) -> FuzzyLabel:
    """Map a [0, 1] grade onto a label via the kind's crisp breakpoints."""
    try:
        b1, b2, b3 = SCALE_BREAKPOINTS[kind]
    except KeyError:
        raise ValueError(f"unknown scale kind {kind!r}") from None
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"value out of range [0, 1]: {value}")
    if value < b1:
        return FuzzyLabel.A
    if value < b2:
        return FuzzyLabel.B
    if value < b3:
        return FuzzyLabel.C
    return FuzzyLabel.D


def combine_tm(lpm_label: FuzzyLabel, lpe_label: FuzzyLabel) -> FuzzyLabel:
    return TM_TABLE[lpe_label][lpm_label]


def combine_link_life(tm: FuzzyLabel, dpr_label: FuzzyLabel) -> FuzzyLabel:
    return LINK_LIFE_TABLE[dpr_label][tm]


def estimate_link_life(lpm: float, lpe: float, dpr: float) -> LinkLifeEstimate:
    """Full fusion of the three grades into the link's crisp label."""
    tm = combine_tm(label_of(lpm, "lpm_scale"), label_of(lpe, "lpe_scale"))
    life = combine_link_life(tm, label_of(dpr, "dpr_scale"))
    return LinkLifeEstimate(lpm=lpm, lpe=lpe, dpr=dpr, tm=tm, link_life=life)


def route_life(link_labels) -> FuzzyLabel:
    """Route grade = weakest link grade (any broken link breaks the route)."""
    return label_min(link_labels)


def rule_tables_text() -> str:
    """Canonical text rendering of both rule tables, for fixture diffing."""
    out = []
    for title, rows_name, cols_name, table in (
        ("TM table", "lpe", "lpm", TM_TABLE),
        ("link-life table", "dpr", "tm", LINK_LIFE_TABLE),
    ):
        out.append(f"# {title}: rows={rows_name}, cols={cols_name} (a..d)")
        out.append(f"{rows_name}\\{cols_name} " + " ".join(l.letter for l in FuzzyLabel))
        for row_label in FuzzyLabel:
            cells = " ".join(table[row_label][col].letter for col in FuzzyLabel)
            out.append(f"{row_label.letter}       {cells}")
    return "\n".join(out) + "\n"
