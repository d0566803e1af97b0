"""Deterministic packet-level discrete-event simulation core.

One run is a single event loop over a (time, seq) heap: Hello/Ack neighbor
sensing feeds per-neighbor RSS windows, route discovery floods recorded
routes and annotates replies with fuzzy link labels, and data packets move
through bounded FIFO queues that drain at each node's departure-rate cap.
Drops come from exactly three places (full queues, broken/out-of-range
links, nodes below the 40% energy floor) plus packets that never found a
route.

Determinism contract: a fixed (config, seed) yields a byte-identical trace
and metrics regardless of wall clock, host, or kernel backend.  All
randomness flows through one seeded stream consumed in event order, event
ties break on a monotone sequence number, and dead nodes keep moving so the
RNG draw sequence never depends on protocol behavior.
"""

from __future__ import annotations

import heapq
import itertools
import math
import random
import time as _time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import kernels, linklife, mobility, report, routing
from .linklife import EnergyProfile, RssWindow, TrafficState
from .mobility import MIN_DISTANCE_M, Position, RadioParams, WaypointState
from .model import Path, ScenarioConfig, validate_config

# Link/delay model (the paper reports delays but defines no delay model).
LINK_BITRATE_BPS = 2_000_000
PROC_DELAY_S = 0.001          # fixed per-hop processing time
CONTROL_PACKET_BYTES = 64     # Hello/Ack/RREQ/RREP on-air size

MOBILITY_TICK_S = 0.1

# Plan lifecycle is on-demand: a plan serves until failure feedback retires
# its paths.  The one extra trigger is a DBMF plan standing on a worst-grade
# (a) path, which refreshes quickly (make-before-break).  Failed discovery
# backs off before retrying.
PLAN_TTL_FRAGILE_S = 0.5
DISCOVERY_RETRY_S = 0.3
PENDING_TTL_S = 1.0   # routeless packets wait this long before no_route
DELAY_SMOOTHING = 0.2

# Event kinds, in trace-name order.
(HELLO_BROADCAST, HELLO_ACK, MOBILITY_TICK, FLOW_PACKET_GEN, PACKET_HOP,
 QUEUE_SERVICE, ROUTE_REQUEST_HOP, ROUTE_REPLY_HOP, PLAN_REFRESH,
 STATS_SNAPSHOT, SIM_END) = range(11)

KIND_NAMES = ("HelloBroadcast", "HelloAck", "MobilityTick", "FlowPacketGen",
              "PacketHop", "QueueService", "RouteRequestHop", "RouteReplyHop",
              "PlanRefresh", "StatsSnapshot", "SimEnd")

DROP_REASONS = ("queue_overflow", "link_break", "node_dead", "no_route")


def data_hop_latency(packet_size: int) -> float:
    return packet_size * 8 / LINK_BITRATE_BPS + PROC_DELAY_S


def control_hop_latency() -> float:
    return CONTROL_PACKET_BYTES * 8 / LINK_BITRATE_BPS + PROC_DELAY_S


@dataclass
class PacketRecord:
    """Lifecycle of one data packet, from generation to its final status."""

    flow_idx: int
    seq: int
    src: int
    dst: int
    size: int
    created_at: float
    status: str = "in_flight"
    reason: str | None = None
    delivered_at: float | None = None
    path: tuple[int, ...] | None = None
    hop_index: int = 0  # position of the node currently holding the packet


@dataclass
class NodeRuntime:
    """Everything the engine tracks per node."""

    id: int
    radio: RadioParams
    energy: EnergyProfile
    traffic: TrafficState
    queue: deque = field(default_factory=deque)
    neighbors: dict = field(default_factory=dict)      # sender id -> RssWindow
    last_ack_from: dict = field(default_factory=dict)  # neighbor id -> time
    alive: bool = True
    service_scheduled: bool = False
    next_free: float = 0.0            # earliest next departure completion
    control_charged: float = 0.0      # energy ledger, control traffic
    data_charged: float = 0.0         # energy ledger, data traffic
    registered: dict = field(default_factory=dict)     # path key -> rate index

    def charge(self, amount: float, control: bool) -> None:
        self.energy.consumed_energy += amount
        if control:
            self.control_charged += amount
        else:
            self.data_charged += amount

    def register_path(self, key, rate: float) -> None:
        self.traffic.per_path_arrival.append(rate)
        self.traffic.per_path_departure.append(rate)
        self.registered[key] = len(self.traffic.per_path_arrival) - 1

    def unregister_path(self, key) -> None:
        idx = self.registered.pop(key, None)
        if idx is None:
            return
        self.traffic.per_path_arrival.pop(idx)
        self.traffic.per_path_departure.pop(idx)
        for k, v in self.registered.items():
            if v > idx:
                self.registered[k] = v - 1

    def dpr(self) -> float:
        return linklife.drop_ratio(
            self.traffic.arrived_total,
            self.traffic.departed_total + len(self.queue))


@dataclass
class PathState:
    """One selected path inside an active plan."""

    candidate: routing.RouteCandidate
    quota: int          # packets still owed to this path (redistribution math)
    weight: float       # share of the packet stream it should carry
    credit: float = 0.0
    failed: bool = False


@dataclass
class DiscoveryState:
    request_id: int
    started_at: float
    deadline: float
    candidates: list = field(default_factory=list)
    dst_routes: list = field(default_factory=list)
    reply_scheduled: bool = False


@dataclass
class FlowRuntime:
    idx: int
    flow: object
    generated: int = 0
    delivered: int = 0
    dropped: int = 0
    pending: deque = field(default_factory=deque)
    plan: routing.RoutePlan | None = None
    plan_version: int = 0
    paths: list = field(default_factory=list)          # list[PathState]
    discovery: DiscoveryState | None = None
    request_seq: int = 0
    next_discovery_ok: float = 0.0
    delay_est: dict = field(default_factory=dict)      # path nodes -> seconds

    def active_paths(self) -> list:
        return [ps for ps in self.paths if not ps.failed]

    def remaining_to_assign(self) -> int:
        return (self.flow.total_packets - self.generated) + len(self.pending)


class Simulation:
    """One deterministic run of a validated scenario."""

    def __init__(self, cfg: ScenarioConfig, collect_trace: bool = False):
        self.cfg = validate_config(cfg)
        self.rng = random.Random(cfg.seed)
        self.kernel = kernels.active
        self.now = 0.0
        self._heap = []
        self._seq = itertools.count()
        self._trace = [] if collect_trace else None

        n = cfg.node_count
        states = mobility.init_positions(cfg, self.rng)
        self.xs = np.array([s.position.x for s in states], dtype=np.float64)
        self.ys = np.array([s.position.y for s in states], dtype=np.float64)
        self.txs = np.array([s.target.x for s in states], dtype=np.float64)
        self.tys = np.array([s.target.y for s in states], dtype=np.float64)
        self.speeds = np.array([s.speed for s in states], dtype=np.float64)
        self.pauses = np.array([s.pause_remaining for s in states],
                               dtype=np.float64)
        self.ranges = np.array(
            [self.rng.uniform(cfg.radio_range_min, cfg.radio_range_max)
             for _ in range(n)], dtype=np.float64)
        self.alive_mask = np.ones(n, dtype=np.uint8)

        self.nodes = [
            NodeRuntime(
                id=i,
                radio=RadioParams(cfg.trans_pow, cfg.friis_k, cfg.friis_q,
                                  float(self.ranges[i])),
                energy=EnergyProfile(cfg.energy_initial, 0.0,
                                     cfg.energy_recv_per_packet,
                                     cfg.energy_send_per_packet,
                                     cfg.max_arrival_rate,
                                     cfg.max_departure_rate),
                traffic=TrafficState(cfg.max_arrival_rate,
                                     cfg.max_departure_rate),
            )
            for i in range(n)
        ]
        self.flows = [FlowRuntime(i, f) for i, f in enumerate(cfg.flows)]
        self.records: list[PacketRecord] = []
        self.drop_counts = dict.fromkeys(DROP_REASONS, 0)
        self._seen_rreq = set()
        self._ctrl_latency = control_hop_latency()
        # Network diameter in hops: bounded by the area diagonal at ~70% of
        # the weakest radio's reach per hop, and by the node count.
        diagonal = math.sqrt(cfg.area_width ** 2 + cfg.area_height ** 2)
        diameter = min(n, math.ceil(diagonal / (0.7 * cfg.radio_range_min)))
        self._collection_window = 2 * diameter * self._ctrl_latency
        self._per_packet_time = 1.0 / cfg.max_departure_rate

    # ------------------------------------------------------------------
    # scheduling / trace plumbing

    def schedule(self, t: float, kind: int, payload) -> None:
        heapq.heappush(self._heap, (t, next(self._seq), kind, payload))

    def _emit(self, seq: int, kind: int, fields: str) -> None:
        if self._trace is not None:
            self._trace.append(f"{self.now:.9f}|{seq}|{KIND_NAMES[kind]}|{fields}")

    # ------------------------------------------------------------------
    # geometry / energy helpers

    def _in_range(self, u: int, v: int) -> bool:
        dx = self.xs[u] - self.xs[v]
        dy = self.ys[u] - self.ys[v]
        limit = min(self.ranges[u], self.ranges[v])
        return dx * dx + dy * dy <= limit * limit

    def _distance(self, u: int, v: int) -> float:
        dx = self.xs[u] - self.xs[v]
        dy = self.ys[u] - self.ys[v]
        return float(np.sqrt(dx * dx + dy * dy))

    def check_link(self, u: int, v: int) -> tuple[bool, str | None]:
        """Transmission feasibility from u to v right now."""
        if not self.nodes[u].alive or not self.nodes[v].alive:
            return False, "node_dead"
        if not self._in_range(u, v):
            return False, "link_break"
        return True, None

    def _charge(self, node: NodeRuntime, amount: float, control: bool) -> None:
        node.charge(amount, control)
        if node.alive and node.energy.consumed_energy > 0.6 * node.energy.initial_energy:
            self._kill(node)

    def _kill(self, node: NodeRuntime) -> None:
        """Edge-triggered, permanent death at the 40% energy floor."""
        node.alive = False
        self.alive_mask[node.id] = 0
        flushed_paths = set()
        while node.queue:
            rec = node.queue.popleft()
            node.traffic.dropped_total += 1
            self._drop(rec, "node_dead")
            if rec.path is not None:
                flushed_paths.add((rec.flow_idx, rec.path))
        for flow_idx, path in sorted(flushed_paths):
            self._on_path_failure(self.flows[flow_idx], path)
        for fr in self.flows:
            if fr.flow.src == node.id:
                while fr.pending:
                    self._drop(fr.pending.popleft(), "node_dead")
                self._clear_plan(fr)

    def _drop(self, rec: PacketRecord, reason: str) -> None:
        assert rec.status == "in_flight"
        rec.status = "dropped"
        rec.reason = reason
        self.drop_counts[reason] += 1
        self.flows[rec.flow_idx].dropped += 1

    # ------------------------------------------------------------------
    # run loop

    def run(self) -> tuple:
        cfg = self.cfg
        self.schedule(MOBILITY_TICK_S, MOBILITY_TICK, 1)
        for i in range(cfg.node_count):
            stagger = cfg.hello_interval * i / cfg.node_count
            self.schedule(stagger, HELLO_BROADCAST, (i, 0))
        for fr in self.flows:
            self.schedule(fr.flow.start_time, FLOW_PACKET_GEN, (fr.idx, 0))
        self.schedule(cfg.sim_duration, STATS_SNAPSHOT, None)
        self.schedule(cfg.sim_duration, SIM_END, None)

        started = _time.perf_counter()
        handlers = {
            HELLO_BROADCAST: self._on_hello,
            HELLO_ACK: self._on_hello_ack,
            MOBILITY_TICK: self._on_mobility_tick,
            FLOW_PACKET_GEN: self._on_flow_gen,
            PACKET_HOP: self._on_packet_hop,
            QUEUE_SERVICE: self._on_queue_service,
            ROUTE_REQUEST_HOP: self._on_rreq_hop,
            ROUTE_REPLY_HOP: self._on_rrep_hop,
            PLAN_REFRESH: self._on_plan_refresh,
            STATS_SNAPSHOT: self._on_stats_snapshot,
        }
        while self._heap:
            t, seq, kind, payload = heapq.heappop(self._heap)
            if t > cfg.sim_duration:
                break
            self.now = t
            if kind == SIM_END:
                self._emit(seq, kind, "")
                break
            handlers[kind](seq, payload)
        wall = _time.perf_counter() - started

        metrics = report.build_report(
            protocol=cfg.protocol, node_count=cfg.node_count, seed=cfg.seed,
            records=self.records, drop_counts=self.drop_counts,
            sim_duration=cfg.sim_duration, wall_time=wall)
        trace = "\n".join(self._trace) + "\n" if self._trace is not None else None
        return metrics, trace

    # ------------------------------------------------------------------
    # mobility

    def _on_mobility_tick(self, seq: int, tick_index: int) -> None:
        flagged = self.kernel.advance_moving(
            self.xs, self.ys, self.txs, self.tys, self.speeds, self.pauses,
            MOBILITY_TICK_S)
        for i in flagged:
            state = WaypointState(
                Position(float(self.xs[i]), float(self.ys[i])),
                Position(float(self.txs[i]), float(self.tys[i])),
                float(self.speeds[i]), float(self.pauses[i]))
            state = mobility.advance(state, MOBILITY_TICK_S, self.cfg, self.rng)
            self.xs[i] = state.position.x
            self.ys[i] = state.position.y
            self.txs[i] = state.target.x
            self.tys[i] = state.target.y
            self.speeds[i] = state.speed
            self.pauses[i] = state.pause_remaining
        self._emit(seq, MOBILITY_TICK, f"tick={tick_index},retargeted={len(flagged)}")
        nxt = (tick_index + 1) * MOBILITY_TICK_S
        if nxt <= self.cfg.sim_duration:
            self.schedule(nxt, MOBILITY_TICK, tick_index + 1)

    # ------------------------------------------------------------------
    # neighbor sensing

    def _on_hello(self, seq: int, payload) -> None:
        i, k = payload
        node = self.nodes[i]
        if not node.alive:
            return  # dead nodes stop hello for good
        cfg = self.cfg
        energy_before = node.energy.remaining
        receivers, rss = self.kernel.scan_receivers(
            self.xs, self.ys, self.ranges, self.alive_mask, i,
            cfg.friis_k, cfg.trans_pow, cfg.friis_q, MIN_DISTANCE_M, True)
        self._charge(node, cfg.control_energy_fraction * cfg.energy_send_per_packet,
                     control=True)
        for j, rec_pow in zip(receivers, rss):
            other = self.nodes[j]
            window = other.neighbors.get(i)
            if window is None:
                window = RssWindow(cfg.rss_window, cfg.hello_interval)
                other.neighbors[i] = window
            window.add(self.now, rec_pow)
            self._charge(other, cfg.control_energy_fraction * cfg.energy_recv_per_packet,
                         control=True)
            self.schedule(self.now + self._ctrl_latency, HELLO_ACK, (j, i))
        self._emit(seq, HELLO_BROADCAST,
                   f"node={i},receivers={len(receivers)},energy_before={energy_before:.9f}")
        nxt = cfg.hello_interval * (k + 1 + i / cfg.node_count)
        if nxt <= cfg.sim_duration:
            self.schedule(nxt, HELLO_BROADCAST, (i, k + 1))

    def _on_hello_ack(self, seq: int, payload) -> None:
        j, i = payload  # j acknowledges i's hello
        sender = self.nodes[j]
        if not sender.alive:
            return
        cfg = self.cfg
        energy_before = sender.energy.remaining
        self._charge(sender, cfg.control_energy_fraction * cfg.energy_send_per_packet,
                     control=True)
        delivered = self.nodes[i].alive and self._in_range(j, i)
        if delivered:
            self._charge(self.nodes[i],
                         cfg.control_energy_fraction * cfg.energy_recv_per_packet,
                         control=True)
            self.nodes[i].last_ack_from[j] = self.now
        self._emit(seq, HELLO_ACK,
                   f"node={j},to={i},delivered={int(delivered)},energy_before={energy_before:.9f}")

    # ------------------------------------------------------------------
    # data plane

    def _on_flow_gen(self, seq: int, payload) -> None:
        flow_idx, pkt_seq = payload
        fr = self.flows[flow_idx]
        flow = fr.flow
        rec = PacketRecord(flow_idx, pkt_seq, flow.src, flow.dst,
                           flow.packet_size, self.now)
        self.records.append(rec)
        fr.generated += 1
        outcome = "assigned"
        if not self.nodes[flow.src].alive:
            self._drop(rec, "node_dead")
            outcome = "src_dead"
        elif fr.active_paths():
            self._assign_and_enqueue(fr, rec)
            outcome = "assigned" if rec.status != "dropped" else "queue_overflow"
        else:
            fr.pending.append(rec)
            self._ensure_discovery(fr)
            outcome = "pending"
        self._emit(seq, FLOW_PACKET_GEN,
                   f"flow={flow_idx},pkt={pkt_seq},outcome={outcome}")
        if pkt_seq + 1 < flow.total_packets:
            nxt = flow.start_time + (pkt_seq + 1) / flow.offered_rate
            self.schedule(nxt, FLOW_PACKET_GEN, (flow_idx, pkt_seq + 1))

    def _assign_and_enqueue(self, fr: FlowRuntime, rec: PacketRecord) -> None:
        """Weighted round-robin over the plan's active paths (stride credits)."""
        paths = fr.active_paths()
        chosen = None
        for ps in paths:
            ps.credit += ps.weight
            if chosen is None or ps.credit > chosen.credit:
                chosen = ps
        chosen.credit -= 1.0
        if chosen.quota > 0:
            chosen.quota -= 1
        rec.path = chosen.candidate.path.nodes
        rec.hop_index = 0
        self._enqueue_data(self.nodes[rec.path[0]], rec)

    def _enqueue_data(self, node: NodeRuntime, rec: PacketRecord) -> None:
        node.traffic.arrived_total += 1
        if len(node.queue) >= self.cfg.queue_capacity:
            node.traffic.dropped_total += 1
            self._drop(rec, "queue_overflow")
            return
        node.queue.append(rec)
        if not node.service_scheduled:
            node.service_scheduled = True
            self.schedule(max(self.now, node.next_free), QUEUE_SERVICE, node.id)

    def _on_queue_service(self, seq: int, node_id: int) -> None:
        node = self.nodes[node_id]
        node.service_scheduled = False
        if not node.alive or not node.queue:
            return
        rec = node.queue.popleft()
        energy_before = node.energy.remaining
        next_id = rec.path[rec.hop_index + 1]
        ok, reason = self.check_link(node_id, next_id)
        cfg = self.cfg
        node.next_free = self.now + self._per_packet_time
        if ok:
            self._charge(node, cfg.energy_send_per_packet, control=False)
            self._charge(self.nodes[next_id], cfg.energy_recv_per_packet,
                         control=False)
            node.traffic.departed_total += 1
            self.schedule(self.now + data_hop_latency(rec.size), PACKET_HOP,
                          (rec, next_id))
            outcome = "forwarded"
        else:
            # The sender keys up either way; the receiver is gone or out of
            # range, so the packet is lost on the air.
            self._charge(node, cfg.energy_send_per_packet, control=False)
            node.traffic.dropped_total += 1
            self._drop(rec, reason)
            self._on_path_failure(self.flows[rec.flow_idx], rec.path)
            outcome = reason
        self._emit(seq, QUEUE_SERVICE,
                   f"node={node_id},flow={rec.flow_idx},pkt={rec.seq},to={next_id},"
                   f"outcome={outcome},energy_before={energy_before:.9f}")
        if node.alive and node.queue:
            node.service_scheduled = True
            self.schedule(node.next_free, QUEUE_SERVICE, node_id)

    def _on_packet_hop(self, seq: int, payload) -> None:
        rec, arriving = payload
        if rec.status != "in_flight":
            return  # flushed while on the air (sender-side bookkeeping won)
        rec.hop_index += 1
        node = self.nodes[arriving]
        fr = self.flows[rec.flow_idx]
        if not node.alive:
            self._drop(rec, "node_dead")
            self._on_path_failure(fr, rec.path)
            outcome = "node_dead"
        elif arriving == rec.path[-1]:
            rec.status = "delivered"
            rec.delivered_at = self.now
            fr.delivered += 1
            node.traffic.arrived_total += 1
            node.traffic.departed_total += 1  # consumed, not a drop
            delay = self.now - rec.created_at
            old = fr.delay_est.get(rec.path)
            fr.delay_est[rec.path] = (delay if old is None else
                                      (1 - DELAY_SMOOTHING) * old + DELAY_SMOOTHING * delay)
            outcome = f"delivered,delay={delay:.9f}"
        else:
            before = self.drop_counts["queue_overflow"]
            self._enqueue_data(node, rec)
            outcome = ("relayed" if self.drop_counts["queue_overflow"] == before
                       else "queue_overflow")
        self._emit(seq, PACKET_HOP,
                   f"node={arriving},flow={rec.flow_idx},pkt={rec.seq},outcome={outcome}")

    # ------------------------------------------------------------------
    # discovery: recorded-route flood + annotated replies

    def _ensure_discovery(self, fr: FlowRuntime, force: bool = False) -> None:
        if fr.discovery is not None:
            return
        if not force and self.now < fr.next_discovery_ok:
            return
        if not self.nodes[fr.flow.src].alive:
            return
        fr.request_seq += 1
        rid = fr.request_seq
        deadline = self.now + 2 * self._collection_window
        fr.discovery = DiscoveryState(rid, self.now, deadline)
        self._seen_rreq.add((fr.idx, rid, fr.flow.src))
        self.schedule(self.now, ROUTE_REQUEST_HOP, (fr.idx, rid, (fr.flow.src,)))
        self.schedule(deadline, PLAN_REFRESH, ("deadline", fr.idx, rid))

    def _on_rreq_hop(self, seq: int, payload) -> None:
        flow_idx, rid, route = payload
        fr = self.flows[flow_idx]
        disc = fr.discovery
        if disc is None or disc.request_id != rid:
            return  # stale flood from a finished round
        u = route[-1]
        node = self.nodes[u]
        if not node.alive:
            return
        cfg = self.cfg
        receivers, _ = self.kernel.scan_receivers(
            self.xs, self.ys, self.ranges, self.alive_mask, u,
            cfg.friis_k, cfg.trans_pow, cfg.friis_q, MIN_DISTANCE_M, False)
        self._charge(node, cfg.control_energy_fraction * cfg.energy_send_per_packet,
                     control=True)
        dst = fr.flow.dst
        forwarded = 0
        for j in receivers:
            if j in route:
                continue
            self._charge(self.nodes[j],
                         cfg.control_energy_fraction * cfg.energy_recv_per_packet,
                         control=True)
            if j == dst:
                disc.dst_routes.append(route + (j,))
                if not disc.reply_scheduled:
                    disc.reply_scheduled = True
                    self.schedule(self.now + self._collection_window,
                                  ROUTE_REPLY_HOP, ("dispatch", flow_idx, rid))
            elif (flow_idx, rid, j) not in self._seen_rreq:
                self._seen_rreq.add((flow_idx, rid, j))
                self.schedule(self.now + self._ctrl_latency, ROUTE_REQUEST_HOP,
                              (flow_idx, rid, route + (j,)))
                forwarded += 1
        self._emit(seq, ROUTE_REQUEST_HOP,
                   f"flow={flow_idx},req={rid},node={u},hops={len(route) - 1},"
                   f"forwarded={forwarded}")

    def _node_annotation(self, node: NodeRuntime, fr: FlowRuntime) -> tuple:
        """(active_time, operational, dpr, residual) for reply labeling.

        Operability is the prospective admission check: current committed
        rates plus this flow at its full offered rate, worst-case reception,
        projected over the time the node must stay active for the remaining
        packets.  A node already over its rate caps counts as non-operational.
        """
        flow = fr.flow
        remaining = flow.total_packets - fr.delivered - fr.dropped
        at = linklife.active_time(remaining, self._per_packet_time)
        traffic = node.traffic
        cur_arr = sum(traffic.per_path_arrival)
        cur_dept = sum(traffic.per_path_departure)
        over = (cur_arr + flow.offered_rate > traffic.max_arrival
                or cur_dept + flow.offered_rate > traffic.max_departure)
        trans = linklife.transmission_energy_rate(node.energy,
                                                  cur_dept + flow.offered_rate)
        recv = linklife.reception_energy_rate(node.energy)
        projected = linklife.total_energy_consumption(at, trans, recv)
        op = (not over) and linklife.is_operational(node.energy, projected)
        return at, op, node.dpr(), node.energy.remaining

    def _link_lpm(self, holder: NodeRuntime, other_id: int) -> float:
        """Mobility grade of link (holder, other) from holder's RSS window.

        Fewer than two fresh samples means the kinematics are unknown and the
        link is graded worst until two Hellos accumulate.
        """
        window = holder.neighbors.get(other_id)
        if window is None or len(window) < 2:
            return 0.0
        avg, cur = linklife.relative_mobility(window, holder.radio)
        rlim = min(holder.radio.rad_rng, self.nodes[other_id].radio.rad_rng)
        lp = linklife.link_prediction(rlim, cur, avg, self.cfg.lp_cap)
        return linklife.squash(lp)

    def _on_rrep_hop(self, seq: int, payload) -> None:
        if payload[0] == "dispatch":
            self._dispatch_replies(seq, payload[1], payload[2])
            return
        flow_idx, rid, route, pos, labels, attached, started = payload
        fr = self.flows[flow_idx]
        disc = fr.discovery
        if disc is None or disc.request_id != rid:
            return
        x = route[pos]
        node = self.nodes[x]
        if not node.alive:
            return  # reply lost
        cfg = self.cfg
        self._charge(node, cfg.control_energy_fraction * cfg.energy_recv_per_packet,
                     control=True)
        at_w, op_w, dpr_w, residual_w, w = attached
        at_x, op_x, dpr_x, residual_x = self._node_annotation(node, fr)
        lpm = self._link_lpm(node, w)
        le = linklife.link_energy_duration(at_x, op_x, at_w, op_w)
        lpe = linklife.squash(le)
        est = linklife.estimate_link_life(lpm, lpe, dpr_w)
        labels = labels + ((est.link_life, min(residual_w, residual_x)),)
        self._emit(seq, ROUTE_REPLY_HOP,
                   f"flow={flow_idx},req={rid},node={x},from={w},"
                   f"lpm={lpm:.9f},lpe={lpe:.9f},dpr={dpr_w:.9f},le={le:.9f},"
                   f"label={est.link_life.letter}")
        if pos == 0:
            link_labels = tuple(lab for lab, _ in reversed(labels))
            min_residual = min(res for _, res in labels)
            candidate = routing.make_candidate(
                Path(route), link_labels,
                delay_estimate=self.now - started,
                discovered_at=self.now,
                min_residual_energy=min_residual)
            disc.candidates.append(candidate)
            return
        nxt = route[pos - 1]
        ok, _ = self.check_link(x, nxt)
        if not ok:
            return  # reply lost mid-way; the route is simply not offered
        self._charge(node, cfg.control_energy_fraction * cfg.energy_send_per_packet,
                     control=True)
        self.schedule(self.now + self._ctrl_latency, ROUTE_REPLY_HOP,
                      (flow_idx, rid, route, pos - 1, labels,
                       self._node_annotation(node, fr) + (x,), started))

    def _dispatch_replies(self, seq: int, flow_idx: int, rid: int) -> None:
        fr = self.flows[flow_idx]
        disc = fr.discovery
        if disc is None or disc.request_id != rid:
            return
        launched = 0
        for route in disc.dst_routes:
            dst_node = self.nodes[route[-1]]
            if not dst_node.alive:
                continue
            prev = route[-2]
            ok, _ = self.check_link(route[-1], prev)
            if not ok:
                continue
            self._charge(dst_node,
                         self.cfg.control_energy_fraction * self.cfg.energy_send_per_packet,
                         control=True)
            attached = self._node_annotation(dst_node, fr) + (route[-1],)
            self.schedule(self.now + self._ctrl_latency, ROUTE_REPLY_HOP,
                          (flow_idx, rid, route, len(route) - 2, (), attached,
                           self.now))
            launched += 1
        self._emit(seq, ROUTE_REPLY_HOP,
                   f"flow={flow_idx},req={rid},dispatch={launched},"
                   f"collected={len(disc.dst_routes)}")

    # ------------------------------------------------------------------
    # plans

    def _clear_plan(self, fr: FlowRuntime) -> None:
        for ps in fr.paths:
            key = (fr.idx, ps.candidate.path.nodes)
            for node_id in ps.candidate.path.nodes:
                self.nodes[node_id].unregister_path(key)
        fr.paths = []
        fr.plan = None
        fr.plan_version += 1

    def _install_plan(self, fr: FlowRuntime, plan: routing.RoutePlan) -> None:
        self._clear_plan(fr)
        fr.plan = plan
        fr.plan_version += 1
        total = sum(plan.partitions)
        fr.paths = []
        for candidate, quota in zip(plan.selected, plan.partitions):
            weight = quota / total if total > 0 else 1.0 / len(plan.selected)
            fr.paths.append(PathState(candidate, quota, weight))
            share = fr.flow.offered_rate * weight
            key = (fr.idx, candidate.path.nodes)
            for node_id in candidate.path.nodes:
                self.nodes[node_id].register_path(key, share)
        fragile = (self.cfg.protocol == "dbmf"
                   and any(c.route_life == 0 for c in plan.selected))
        if fragile:
            self.schedule(self.now + PLAN_TTL_FRAGILE_S, PLAN_REFRESH,
                          ("ttl", fr.idx, fr.plan_version))
        # Pending packets ride the fresh plan immediately.
        while fr.pending and fr.active_paths():
            self._assign_and_enqueue(fr, fr.pending.popleft())

    def _current_delay(self, fr: FlowRuntime, candidate: routing.RouteCandidate) -> float:
        return fr.delay_est.get(candidate.path.nodes, candidate.delay_estimate)

    def _flow_finished(self, fr: FlowRuntime) -> bool:
        return fr.delivered + fr.dropped >= fr.flow.total_packets

    def _on_plan_refresh(self, seq: int, payload) -> None:
        what, flow_idx, token = payload
        fr = self.flows[flow_idx]
        if what == "ttl":
            if fr.plan is None or token != fr.plan_version or self._flow_finished(fr):
                return
            self._emit(seq, PLAN_REFRESH, f"flow={flow_idx},what=ttl")
            self._ensure_discovery(fr, force=True)
            return
        if what == "retry":
            # A failed round left buffered packets behind; try again.
            if fr.pending and token == fr.request_seq:
                self._ensure_discovery(fr)
            return
        # Discovery deadline: turn collected candidates into a plan.
        disc = fr.discovery
        if disc is None or disc.request_id != token:
            return
        fr.discovery = None
        candidates = []
        for c in disc.candidates:
            candidates.append(routing.RouteCandidate(
                c.path, c.link_labels, c.route_life,
                self._current_delay(fr, c), c.discovered_at,
                c.min_residual_energy))
        if not candidates:
            # Keep young pending packets buffered for the next round; only
            # packets that waited out their grace period drop here.
            dropped = 0
            while fr.pending and self.now - fr.pending[0].created_at > PENDING_TTL_S:
                self._drop(fr.pending.popleft(), "no_route")
                dropped += 1
            fr.next_discovery_ok = self.now + DISCOVERY_RETRY_S
            if fr.pending and not self._flow_finished(fr):
                self.schedule(fr.next_discovery_ok, PLAN_REFRESH,
                              ("retry", flow_idx, fr.request_seq))
            self._emit(seq, PLAN_REFRESH,
                       f"flow={flow_idx},what=no_route,dropped={dropped},"
                       f"held={len(fr.pending)}")
            return
        plan = routing.build_plan(self.cfg.protocol, fr.flow, candidates,
                                  fr.remaining_to_assign(), self.cfg.path_count)
        self._install_plan(fr, plan)
        paths_txt = ";".join(
            "-".join(map(str, ps.candidate.path.nodes)) + f":{ps.quota}"
            for ps in fr.paths)
        self._emit(seq, PLAN_REFRESH,
                   f"flow={flow_idx},what=plan,cands={len(candidates)},"
                   f"paths={paths_txt}")

    def _on_path_failure(self, fr: FlowRuntime, path_nodes) -> None:
        ps = next((p for p in fr.paths
                   if p.candidate.path.nodes == tuple(path_nodes)), None)
        if ps is None or ps.failed:
            return
        ps.failed = True
        key = (fr.idx, ps.candidate.path.nodes)
        for node_id in ps.candidate.path.nodes:
            self.nodes[node_id].unregister_path(key)
        survivors = fr.active_paths()
        unsent = ps.quota + sum(
            1 for rec in self.nodes[fr.flow.src].queue
            if rec.flow_idx == fr.idx and rec.path == ps.candidate.path.nodes
            and rec.hop_index == 0)
        protocol = self.cfg.protocol
        if survivors:
            if protocol == "zd":
                extra = routing.equal_partition(unsent, len(survivors))
            else:
                extra = routing.partition(
                    unsent, [self._current_delay(fr, p.candidate) for p in survivors])
            total_quota = 0
            for p, add in zip(survivors, extra):
                p.quota += add
                total_quota += p.quota
            for p in survivors:
                p.weight = (p.quota / total_quota if total_quota > 0
                            else 1.0 / len(survivors))
                p.credit = 0.0
            self._reassign_queued(fr, ps.candidate.path.nodes)
        elif protocol == "mmre" and fr.plan is not None:
            failed_nodes = {p.candidate.path.nodes for p in fr.paths}
            spare = next((c for c in fr.plan.candidates
                          if c.path.nodes not in failed_nodes), None)
            if spare is not None:
                fr.paths.append(PathState(spare, unsent, 1.0))
                key = (fr.idx, spare.path.nodes)
                for node_id in spare.path.nodes:
                    self.nodes[node_id].register_path(key, fr.flow.offered_rate)
                self._reassign_queued(fr, ps.candidate.path.nodes)
            else:
                self._rescue_queued(fr, ps.candidate.path.nodes)
                self._clear_plan(fr)
                self._ensure_discovery(fr, force=True)
        else:
            self._rescue_queued(fr, ps.candidate.path.nodes)
            self._clear_plan(fr)
            self._ensure_discovery(fr, force=True)

    def _rescue_queued(self, fr: FlowRuntime, dead_path: tuple) -> None:
        """Pull the dead path's untransmitted packets out of the source queue.

        They go back to the pending buffer (age-ordered) and ride the next
        plan; only packets already on the air are committed to the old path.
        """
        queue = self.nodes[fr.flow.src].queue
        rescued = [rec for rec in queue
                   if rec.flow_idx == fr.idx and rec.path == dead_path
                   and rec.hop_index == 0]
        if not rescued:
            return
        rescued_ids = {id(rec) for rec in rescued}
        kept = [rec for rec in queue if id(rec) not in rescued_ids]
        queue.clear()
        queue.extend(kept)
        # Undo the arrival accounting: for the source's drop ratio these
        # packets were never handed to the dead route.
        self.nodes[fr.flow.src].traffic.arrived_total -= len(rescued)
        for rec in rescued:
            rec.path = None
        merged = sorted(list(fr.pending) + rescued, key=lambda r: r.created_at)
        fr.pending = deque(merged)

    def _reassign_queued(self, fr: FlowRuntime, dead_path: tuple) -> None:
        """Packets still queued at the source move to surviving paths."""
        queue = self.nodes[fr.flow.src].queue
        for rec in queue:
            if (rec.flow_idx == fr.idx and rec.path == dead_path
                    and rec.hop_index == 0 and fr.active_paths()):
                paths = fr.active_paths()
                chosen = None
                for p in paths:
                    p.credit += p.weight
                    if chosen is None or p.credit > chosen.credit:
                        chosen = p
                chosen.credit -= 1.0
                if chosen.quota > 0:
                    chosen.quota -= 1
                rec.path = chosen.candidate.path.nodes

    # ------------------------------------------------------------------
    # reporting

    def _on_stats_snapshot(self, seq: int, payload) -> None:
        parts = []
        for node in self.nodes:
            parts.append(
                f"{node.id}:arr={node.traffic.arrived_total},"
                f"dep={node.traffic.departed_total},"
                f"drop={node.traffic.dropped_total},q={len(node.queue)},"
                f"alive={int(node.alive)},energy={node.energy.remaining:.9f}")
        self._emit(seq, STATS_SNAPSHOT, ";".join(parts))


def run(cfg: ScenarioConfig, collect_trace: bool = False) -> tuple:
    """Run one scenario to completion; returns (MetricsReport, trace or None)."""
    return Simulation(cfg, collect_trace=collect_trace).run()
