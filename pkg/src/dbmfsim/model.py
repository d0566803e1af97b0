"""Core domain types: fuzzy labels, paths, flows and scenario configuration.

Everything in this module is an immutable value object once validated, so
configs and paths can be shared freely across concurrent simulation runs.
Scenario files are JSON documents whose keys are exactly the ScenarioConfig
field names (unknown keys are a hard error, so typos fail loudly).
"""

from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass, fields

PROTOCOLS = ("dbmf", "single_path", "mmre", "zd")

# Fields a scenario file may omit.
_CONFIG_DEFAULTS = {
    "lp_cap": 1000.0,
    "path_count": 3,
    "control_energy_fraction": 0.1,
}


class InvalidConfigError(ValueError):
    """Raised with the full list of violated constraints, not just the first.

    `violations` is a list of (field_name, constraint_description) pairs.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        msg = "; ".join(f"{name}: {constraint}" for name, constraint in self.violations)
        super().__init__(f"invalid scenario config: {msg}")


class FuzzyLabel(enum.IntEnum):
    """Crisp fuzzy grade with total order A < B < C < D (worst to best)."""

    A = 0
    B = 1
    C = 2
    D = 3

    @property
    def letter(self) -> str:
        return self.name.lower()

    @classmethod
    def from_letter(cls, letter: str) -> "FuzzyLabel":
        try:
            return cls[letter.upper()]
        except KeyError:
            raise ValueError(f"unknown fuzzy label {letter!r}") from None


def label_min(labels) -> FuzzyLabel:
    """Minimum label under A < B < C < D; the weakest link dominates."""
    labels = list(labels)
    if not labels:
        raise ValueError("label_min: empty label list")
    return min(labels)


@dataclass(frozen=True)
class Path:
    """A loop-free node sequence from source to destination (>= 2 nodes)."""

    nodes: tuple[int, ...]

    def __post_init__(self):
        nodes = tuple(self.nodes)
        object.__setattr__(self, "nodes", nodes)
        if len(nodes) < 2:
            raise ValueError("path needs at least a source and a destination")
        if len(set(nodes)) != len(nodes):
            raise ValueError(f"path repeats a node: {nodes}")

    @property
    def hop_count(self) -> int:
        return len(self.nodes) - 1

    def links(self) -> frozenset:
        """Undirected links as a frozenset of sorted node pairs."""
        return frozenset(
            (min(a, b), max(a, b)) for a, b in zip(self.nodes, self.nodes[1:])
        )

    def __iter__(self):
        return iter(self.nodes)


@dataclass(frozen=True)
class Flow:
    """One unidirectional CBR datagram stream."""

    src: int
    dst: int
    total_packets: int
    offered_rate: float  # packets/second
    packet_size: int     # bytes
    start_time: float    # seconds


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete description of one experiment; hashable run identity.

    Units are embedded in the field names or noted here: areas/ranges in
    meters, speeds in m/s, times in seconds, energies in joules, rates in
    packets per second.
    """

    node_count: int
    area_width: float
    area_height: float
    speed_min: float
    speed_max: float
    pause_time: float
    radio_range_min: float
    radio_range_max: float
    trans_pow: float               # transmit power, arbitrary linear unit
    friis_k: float                 # propagation constant, absorbs gains
    friis_q: int                   # path-loss exponent, 2 or 3
    hello_interval: float
    rss_window: int                # samples kept per neighbor
    sim_duration: float
    flows: tuple[Flow, ...]
    protocol: str
    queue_capacity: int
    energy_initial: float
    energy_recv_per_packet: float
    energy_send_per_packet: float
    max_arrival_rate: float
    max_departure_rate: float
    seed: int
    path_count: int = _CONFIG_DEFAULTS["path_count"]
    control_energy_fraction: float = _CONFIG_DEFAULTS["control_energy_fraction"]
    lp_cap: float = _CONFIG_DEFAULTS["lp_cap"]

    def __post_init__(self):
        object.__setattr__(self, "flows", tuple(self.flows))


def config_violations(cfg: ScenarioConfig) -> list[tuple[str, str]]:
    """Collect every violated invariant as (field, constraint) pairs."""
    bad = []

    def positive(name, value, strict=True):
        ok = value > 0 if strict else value >= 0
        if not ok:
            bad.append((name, "must be > 0" if strict else "must be >= 0"))

    if not isinstance(cfg.node_count, int) or cfg.node_count < 2:
        bad.append(("node_count", "must be an integer >= 2"))
    positive("area_width", cfg.area_width)
    positive("area_height", cfg.area_height)
    positive("speed_min", cfg.speed_min)
    positive("speed_max", cfg.speed_max)
    if cfg.speed_min > cfg.speed_max:
        bad.append(("speed_min", "must be <= speed_max"))
    positive("pause_time", cfg.pause_time, strict=False)
    positive("radio_range_min", cfg.radio_range_min)
    positive("radio_range_max", cfg.radio_range_max)
    if cfg.radio_range_min > cfg.radio_range_max:
        bad.append(("radio_range_min", "must be <= radio_range_max"))
    positive("trans_pow", cfg.trans_pow)
    positive("friis_k", cfg.friis_k)
    if cfg.friis_q not in (2, 3):
        bad.append(("friis_q", "must be 2 or 3"))
    positive("hello_interval", cfg.hello_interval)
    if not isinstance(cfg.rss_window, int) or cfg.rss_window < 2:
        bad.append(("rss_window", "must be an integer >= 2 (differencing needs two samples)"))
    positive("sim_duration", cfg.sim_duration)
    if cfg.protocol not in PROTOCOLS:
        bad.append(("protocol", f"must be one of {PROTOCOLS}"))
    if not isinstance(cfg.path_count, int) or cfg.path_count < 1:
        bad.append(("path_count", "must be an integer >= 1"))
    if not isinstance(cfg.queue_capacity, int) or cfg.queue_capacity < 1:
        bad.append(("queue_capacity", "must be an integer >= 1"))
    positive("energy_initial", cfg.energy_initial)
    positive("energy_recv_per_packet", cfg.energy_recv_per_packet)
    positive("energy_send_per_packet", cfg.energy_send_per_packet)
    if not 0.0 <= cfg.control_energy_fraction <= 1.0:
        bad.append(("control_energy_fraction", "must be within [0, 1]"))
    positive("max_arrival_rate", cfg.max_arrival_rate)
    positive("max_departure_rate", cfg.max_departure_rate)
    positive("lp_cap", cfg.lp_cap)
    if not isinstance(cfg.seed, int):
        bad.append(("seed", "must be an integer"))

    for i, flow in enumerate(cfg.flows):
        where = f"flows[{i}]"
        if flow.src == flow.dst:
            bad.append((where, "src and dst must differ"))
        for end, value in (("src", flow.src), ("dst", flow.dst)):
            if not isinstance(value, int) or not 0 <= value < cfg.node_count:
                bad.append((f"{where}.{end}", "must be a node index in [0, node_count)"))
        if not isinstance(flow.total_packets, int) or flow.total_packets < 1:
            bad.append((f"{where}.total_packets", "must be an integer >= 1"))
        if flow.offered_rate <= 0:
            bad.append((f"{where}.offered_rate", "must be > 0"))
        if not isinstance(flow.packet_size, int) or flow.packet_size < 1:
            bad.append((f"{where}.packet_size", "must be an integer >= 1"))
        if flow.start_time < 0:
            bad.append((f"{where}.start_time", "must be >= 0"))

    return bad


def validate_config(cfg: ScenarioConfig) -> ScenarioConfig:
    """Return cfg unchanged if every invariant holds, else raise with all violations."""
    violations = config_violations(cfg)
    if violations:
        raise InvalidConfigError(violations)
    return cfg


_FLOW_KEYS = {f.name for f in fields(Flow)}
_CONFIG_KEYS = {f.name for f in fields(ScenarioConfig)}


def _flow_from_dict(obj: dict, where: str) -> Flow:
    unknown = set(obj) - _FLOW_KEYS
    if unknown:
        raise InvalidConfigError(
            [(f"{where}.{k}", "unknown key") for k in sorted(unknown)]
        )
    missing = _FLOW_KEYS - set(obj)
    if missing:
        raise InvalidConfigError(
            [(f"{where}.{k}", "missing required key") for k in sorted(missing)]
        )
    return Flow(**obj)


def scenario_from_dict(obj: dict) -> ScenarioConfig:
    """Build and validate a ScenarioConfig from a parsed scenario document."""
    if not isinstance(obj, dict):
        raise InvalidConfigError([("document", "scenario must be a single JSON object")])
    unknown = set(obj) - _CONFIG_KEYS
    if unknown:
        raise InvalidConfigError([(k, "unknown key") for k in sorted(unknown)])
    missing = _CONFIG_KEYS - set(obj) - set(_CONFIG_DEFAULTS)
    if missing:
        raise InvalidConfigError([(k, "missing required key") for k in sorted(missing)])
    if not isinstance(obj.get("flows"), list):
        raise InvalidConfigError([("flows", "must be a list of flow objects")])
    kwargs = dict(obj)
    kwargs["flows"] = tuple(
        _flow_from_dict(f, f"flows[{i}]") for i, f in enumerate(obj["flows"])
    )
    return validate_config(ScenarioConfig(**kwargs))


def load_scenario(path) -> ScenarioConfig:
    """Load, parse and validate a scenario file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidConfigError([("document", f"not valid JSON: {exc}")]) from exc
    return scenario_from_dict(obj)


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    """Inverse of scenario_from_dict (flows become plain dicts)."""
    out = asdict(cfg)
    out["flows"] = list(out["flows"])
    return out
