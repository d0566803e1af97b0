"""Route selection and load partitioning.

Discovery (engine-driven) hands this module a list of candidate routes with
per-link labels, delay estimates and node telemetry; the strategy functions
turn those into a RoutePlan: which paths carry traffic and how many packets
each gets.  Strategies are pure so they can be unit-tested without an engine.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .model import FuzzyLabel, Flow, Path, label_min


class NoRouteFoundError(Exception):
    """Destination unreachable: no reply survived the discovery round."""


@dataclass(frozen=True)
class RouteCandidate:
    """One discovered route with everything ranking needs."""

    path: Path
    link_labels: tuple[FuzzyLabel, ...]  # one per hop, source side first
    route_life: FuzzyLabel
    delay_estimate: float                # seconds, one-way
    discovered_at: float
    min_residual_energy: float = float("inf")  # J, over all path nodes

    def __post_init__(self):
        if len(self.link_labels) != self.path.hop_count:
            raise ValueError("need exactly one link label per hop")
        if self.route_life != label_min(self.link_labels):
            raise ValueError("route_life must be the minimum link label")
        if self.delay_estimate <= 0:
            raise ValueError("delay_estimate must be > 0")


def make_candidate(path: Path, link_labels, delay_estimate: float,
                   discovered_at: float, min_residual_energy: float = float("inf")
                   ) -> RouteCandidate:
    labels = tuple(link_labels)
    return RouteCandidate(path, labels, label_min(labels), delay_estimate,
                          discovered_at, min_residual_energy)


@dataclass(frozen=True)
class RoutePlan:
    """Selected paths plus the packet split assigned to each.

    partitions[i] packets go to selected[i]; they sum exactly to the packet
    budget the plan was built for.  pd is the common packets*delay product of
    the ideal (pre-integerization) split, 0 when it does not apply.
    """

    flow: Flow
    candidates: tuple[RouteCandidate, ...]  # full ranked list
    selected: tuple[RouteCandidate, ...]
    partitions: tuple[int, ...]
    pd: float
    needs_rediscovery: bool = False


def select_link_disjoint(paths: list[Path]) -> list[Path]:
    """Greedy in input order: keep a path iff it shares no undirected link
    with anything already kept.  Nodes may repeat, links may not."""
    kept = []
    used_links = set()
    for path in paths:
        links = path.links()
        if links & used_links:
            continue
        kept.append(path)
        used_links |= links
    return kept


def select_node_disjoint(paths: list[Path]) -> list[Path]:
    """Greedy in input order on internal nodes (endpoints are always shared)."""
    kept = []
    used_nodes = set()
    for path in paths:
        interior = set(path.nodes[1:-1])
        if interior & used_nodes:
            continue
        kept.append(path)
        used_nodes |= interior
    return kept


def _rank_key(candidate: RouteCandidate):
    return (-candidate.route_life, candidate.path.hop_count,
            candidate.delay_estimate, candidate.path.nodes)


def rank(candidates: list[RouteCandidate]) -> list[RouteCandidate]:
    """Descending route life; ties by fewer hops, smaller delay, node list.

    The key chain is total up to identical node lists, and the sort is
    stable, so fully identical candidates keep their input order.
    """
    return sorted(candidates, key=_rank_key)


def partition(total_packets: int, delays: list[float]) -> list[int]:
    """Split total_packets across paths inversely to their delay.

    Ideal share_i = total * (1/delay_i) / sum(1/delay_j); integerized by
    largest remainder so the counts sum exactly to total and each count is
    within 1 of its ideal share.
    """
    if not delays:
        raise ValueError("partition: empty path set")
    if total_packets < 0:
        raise ValueError("partition: total_packets must be >= 0")
    for d in delays:
        if d <= 0:
            raise ValueError(f"partition: delays must be > 0, got {d}")
    weights = [1.0 / d for d in delays]
    weight_sum = sum(weights)
    ideals = [total_packets * w / weight_sum for w in weights]
    counts = [int(x) for x in ideals]
    shortfall = total_packets - sum(counts)
    # Hand the leftover packets to the largest fractional remainders.
    order = sorted(range(len(ideals)),
                   key=lambda i: (counts[i] - ideals[i], i))
    for i in order[:shortfall]:
        counts[i] += 1
    return counts


def equal_partition(total_packets: int, ways: int) -> list[int]:
    """Even split with largest-remainder rounding (zd's policy)."""
    return partition(total_packets, [1.0] * ways)


def redistribute_on_failure(plan: RoutePlan, failed: Path,
                            unsent: dict) -> RoutePlan:
    """Drop `failed` from the plan and hand its unsent quota to survivors.

    The failed path's unsent packets are re-partitioned over the surviving
    paths by current delay estimates and added to their (unsent) quotas.
    With no survivors the plan empties and flags rediscovery.
    """
    survivors = [c for c in plan.selected if c.path != failed]
    if not survivors:
        return replace(plan, selected=(), partitions=(), pd=0.0,
                       needs_rediscovery=True)
    failed_quota = unsent.get(failed, 0)
    extra = partition(failed_quota, [c.delay_estimate for c in survivors])
    quotas = [unsent.get(c.path, 0) + e for c, e in zip(survivors, extra)]
    return replace(plan, selected=tuple(survivors), partitions=tuple(quotas),
                   pd=0.0, needs_rediscovery=False)


def _ideal_pd(total: int, delays) -> float:
    inv = sum(1.0 / d for d in delays)
    return total / inv if inv > 0 else 0.0


def strategy_dbmf(flow: Flow, candidates: list[RouteCandidate],
                  total_packets: int, path_count: int) -> RoutePlan:
    """Rank by fuzzy route life, keep the best link-disjoint paths, split
    the load inversely to delay."""
    if not candidates:
        raise NoRouteFoundError(f"no route {flow.src}->{flow.dst}")
    ranked = rank(candidates)
    by_path = {c.path: c for c in ranked}
    disjoint = select_link_disjoint([c.path for c in ranked])
    selected = [by_path[p] for p in disjoint[:path_count]]
    delays = [c.delay_estimate for c in selected]
    counts = partition(total_packets, delays)
    return RoutePlan(flow, tuple(ranked), tuple(selected), tuple(counts),
                     _ideal_pd(total_packets, delays))


def strategy_single_path(flow: Flow, candidates: list[RouteCandidate],
                         total_packets: int, path_count: int) -> RoutePlan:
    """Fewest-hop single path carries everything (AODV-like baseline)."""
    if not candidates:
        raise NoRouteFoundError(f"no route {flow.src}->{flow.dst}")
    ranked = sorted(candidates,
                    key=lambda c: (c.path.hop_count, c.delay_estimate,
                                   c.path.nodes))
    best = ranked[0]
    return RoutePlan(flow, tuple(ranked), (best,), (total_packets,),
                     total_packets * best.delay_estimate)


def strategy_mmre(flow: Flow, candidates: list[RouteCandidate],
                  total_packets: int, path_count: int) -> RoutePlan:
    """Single track on the path with the largest minimum residual energy.

    Remaining ranked candidates are kept as ready spares: on a break the
    engine promotes the next one instead of rediscovering.
    """
    if not candidates:
        raise NoRouteFoundError(f"no route {flow.src}->{flow.dst}")
    ranked = sorted(candidates, key=lambda c: -c.min_residual_energy)
    best = ranked[0]
    return RoutePlan(flow, tuple(ranked), (best,), (total_packets,),
                     total_packets * best.delay_estimate)


def strategy_zd(flow: Flow, candidates: list[RouteCandidate],
                total_packets: int, path_count: int) -> RoutePlan:
    """Node-disjoint multipath with an equal split (zone-disjoint analogue)."""
    if not candidates:
        raise NoRouteFoundError(f"no route {flow.src}->{flow.dst}")
    by_path = {c.path: c for c in candidates}
    disjoint = select_node_disjoint([c.path for c in candidates])
    selected = [by_path[p] for p in disjoint[:path_count]]
    counts = equal_partition(total_packets, len(selected))
    return RoutePlan(flow, tuple(candidates), tuple(selected), tuple(counts),
                     0.0)


STRATEGIES = {
    "dbmf": strategy_dbmf,
    "single_path": strategy_single_path,
    "mmre": strategy_mmre,
    "zd": strategy_zd,
}


def build_plan(protocol: str, flow: Flow, candidates: list[RouteCandidate],
               total_packets: int, path_count: int) -> RoutePlan:
    return STRATEGIES[protocol](flow, candidates, total_packets, path_count)
