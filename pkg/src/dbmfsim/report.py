"""Run metrics (delivery ratio, mean delay, drop rate) and CSV export.

The CSV schema is fixed and byte-stable: floats print as 6-decimal
fixed-point and rows sort by (protocol, node_count, seed), so repeated runs
of the same matrix produce identical files regardless of worker scheduling.
Wall time is tracked on the report but deliberately kept out of the CSV.
"""

from __future__ import annotations

from dataclasses import dataclass

CSV_HEADER = ("protocol,node_count,seed,pdr,avg_delay_ms,drop_rate_pps,"
              "generated,delivered,dropped,"
              "drops_queue,drops_link,drops_dead,drops_noroute")

_REASON_COLUMNS = ("queue_overflow", "link_break", "node_dead", "no_route")


class NoTrafficError(ValueError):
    pass


class NoDeliveriesError(ValueError):
    pass


@dataclass(frozen=True)
class MetricsReport:
    protocol: str
    node_count: int
    seed: int
    pdr: float            # percent delivered
    avg_delay: float      # milliseconds, over delivered packets
    drop_rate: float      # packets/second, network-wide
    generated: int
    delivered: int
    dropped: int
    drops_by_reason: tuple[tuple[str, int], ...]
    wall_time: float      # seconds of host time; not exported to CSV


def compute_pdr(records) -> float:
    """Percentage of generated packets that reached their destination."""
    generated = len(records)
    if generated == 0:
        raise NoTrafficError("no packets generated")
    delivered = sum(1 for r in records if r.status == "delivered")
    return 100.0 * delivered / generated


def compute_avg_delay(records) -> float:
    """Mean source-to-destination delay in ms, delivered packets only."""
    delays = [r.delivered_at - r.created_at
              for r in records if r.status == "delivered"]
    if not delays:
        raise NoDeliveriesError("no packets delivered")
    return 1000.0 * sum(delays) / len(delays)


def compute_drop_rate(records, sim_duration: float) -> float:
    """Network-wide dropped packets per second of simulated time."""
    if sim_duration <= 0:
        raise ValueError("sim_duration must be > 0")
    dropped = sum(1 for r in records if r.status == "dropped")
    return dropped / sim_duration


def build_report(protocol: str, node_count: int, seed: int, records,
                 drop_counts: dict, sim_duration: float,
                 wall_time: float) -> MetricsReport:
    """Aggregate one run's packet records into a MetricsReport.

    Zero-traffic and zero-delivery runs are reported as 0.0 (the metric
    functions themselves raise, for callers who need the distinction).
    """
    generated = len(records)
    delivered = sum(1 for r in records if r.status == "delivered")
    dropped = sum(1 for r in records if r.status == "dropped")
    pdr = compute_pdr(records) if generated else 0.0
    avg_delay = compute_avg_delay(records) if delivered else 0.0
    return MetricsReport(
        protocol=protocol, node_count=node_count, seed=seed,
        pdr=pdr, avg_delay=avg_delay,
        drop_rate=compute_drop_rate(records, sim_duration),
        generated=generated, delivered=delivered, dropped=dropped,
        drops_by_reason=tuple((r, drop_counts.get(r, 0)) for r in _REASON_COLUMNS),
        wall_time=wall_time)


def csv_row(rep: MetricsReport) -> str:
    reasons = dict(rep.drops_by_reason)
    return (f"{rep.protocol},{rep.node_count},{rep.seed},"
            f"{rep.pdr:.6f},{rep.avg_delay:.6f},{rep.drop_rate:.6f},"
            f"{rep.generated},{rep.delivered},{rep.dropped},"
            f"{reasons['queue_overflow']},{reasons['link_break']},"
            f"{reasons['node_dead']},{reasons['no_route']}")


def to_csv(reports) -> str:
    """Header plus one sorted row per run; byte-stable for a given input set."""
    rows = sorted(reports, key=lambda r: (r.protocol, r.node_count, r.seed))
    return "\n".join([CSV_HEADER] + [csv_row(r) for r in rows]) + "\n"
