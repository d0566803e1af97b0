"""Exploration harness for the comparison-family scenario parameters.

Runs the size x protocol x seed family used by the acceptance suite and
prints per-cell metrics plus the sign-test verdicts, so parameter choices
can be judged before freezing them in the tests.
"""

import argparse
import math
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor

from dbmfsim import engine, mobility
from dbmfsim.model import Flow, ScenarioConfig

PROTOCOLS = ("dbmf", "mmre", "zd")

# Flow sources sit near a ring of anchor points around the center (so the
# central region is shared); each destination is then the node whose actual
# distance from that source is closest to SEPARATION_M, pinning the initial
# hop geometry (direct link plus relay lens) regardless of density.
SRC_ANCHORS = ((250.0, 310.0), (310.0, 250.0), (250.0, 190.0), (190.0, 250.0),
               (292.0, 292.0), (292.0, 208.0), (208.0, 208.0), (208.0, 292.0))
SEPARATION_M = 45.0


def _nearest(states, point, used):
    best, best_d = None, float("inf")
    for i, s in enumerate(states):
        if i in used:
            continue
        d = (s.position.x - point[0]) ** 2 + (s.position.y - point[1]) ** 2
        if d < best_d:
            best, best_d = i, d
    return best


def _at_separation(states, src, used, target):
    sx, sy = states[src].position.x, states[src].position.y
    best, best_err = None, float("inf")
    for i, s in enumerate(states):
        if i == src or i in used:
            continue
        d = math.sqrt((s.position.x - sx) ** 2 + (s.position.y - sy) ** 2)
        err = abs(d - target)
        if err < best_err:
            best, best_err = i, err
    return best


RING_PAIRS = (((250.0, 315.0), (250.0, 260.0)),
              ((315.0, 250.0), (260.0, 250.0)),
              ((250.0, 185.0), (250.0, 240.0)),
              ((185.0, 250.0), (240.0, 250.0)))


def anchored_flows(cfg_proto, n_flows, size, rate, stagger, start=3.0,
                   geometry="pin45"):
    """Short staggered bursts between position-anchored endpoints.

    Positions replay deterministically from the seed.  Endpoint nodes are
    distinct within a flow but may repeat across flows (a node can source
    one burst and terminate another).
    """
    states = mobility.init_positions(cfg_proto, random.Random(cfg_proto.seed))
    flows = []
    for k in range(n_flows):
        used = set()
        if geometry == "ring55":
            a, b = RING_PAIRS[k % len(RING_PAIRS)]
            src = _nearest(states, a, used)
            used.add(src)
            dst = _nearest(states, b, used)
        else:
            anchor = SRC_ANCHORS[k % len(SRC_ANCHORS)]
            src = _nearest(states, anchor, used)
            used.add(src)
            dst = _at_separation(states, src, used, SEPARATION_M)
        flows.append(Flow(src, dst, size, rate, 512, start + k * stagger))
    return tuple(flows)


def family_config(node_count, protocol, seed, *, rate=25.0, flows=16,
                  flow_size=100, stagger=1.8, duration=36.0, queue=30,
                  energy=400.0, s=3, hello=0.5, pause=15.0, geometry="pin45",
                  max_dept=50.0):
    base = ScenarioConfig(
        node_count=node_count, area_width=500.0, area_height=500.0,
        speed_min=10.0, speed_max=10.0, pause_time=pause,
        radio_range_min=50.0, radio_range_max=50.0,
        trans_pow=100.0, friis_k=1.0, friis_q=2,
        hello_interval=hello, rss_window=4, sim_duration=duration,
        flows=(Flow(0, node_count - 1, flow_size, rate, 512, 3.0),),
        protocol=protocol, queue_capacity=queue,
        energy_initial=energy, energy_recv_per_packet=0.01,
        energy_send_per_packet=0.02,
        max_arrival_rate=1.2 * max_dept, max_departure_rate=max_dept,
        seed=seed, path_count=s)
    from dataclasses import replace
    return replace(base, flows=anchored_flows(base, flows, flow_size, rate,
                                              stagger, geometry=geometry))


def _run(cfg):
    metrics, _ = engine.run(cfg)
    return metrics


def sign_test_p(wins, losses):
    n = wins + losses
    if n == 0:
        return 1.0
    return sum(math.comb(n, k) for k in range(wins, n + 1)) / 2.0 ** n


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[20, 50, 100])
    ap.add_argument("--seeds", type=int, nargs="+", default=list(range(1, 11)))
    ap.add_argument("--rate", type=float, default=25.0)
    ap.add_argument("--flows", type=int, default=16)
    ap.add_argument("--duration", type=float, default=36.0)
    ap.add_argument("--flow-size", type=int, default=100)
    ap.add_argument("--stagger", type=float, default=1.8)
    ap.add_argument("--queue", type=int, default=30)
    ap.add_argument("--energy", type=float, default=400.0)
    ap.add_argument("--paths", type=int, default=3)
    ap.add_argument("--hello", type=float, default=0.5)
    ap.add_argument("--pause", type=float, default=15.0)
    ap.add_argument("--geometry", default="pin45", choices=["pin45", "ring55"])
    ap.add_argument("--max-dept", type=float, default=50.0)
    ap.add_argument("--pend", type=float, default=None,
                    help="override engine.PENDING_TTL_S")
    ap.add_argument("--parallelism", type=int, default=8)
    args = ap.parse_args()
    if args.pend is not None:
        engine.PENDING_TTL_S = args.pend

    cells = [(p, n, s) for p in PROTOCOLS for n in args.sizes
             for s in args.seeds]
    cfgs = [family_config(n, p, s, rate=args.rate, flows=args.flows,
                          flow_size=args.flow_size, stagger=args.stagger,
                          duration=args.duration, queue=args.queue,
                          energy=args.energy, s=args.paths, hello=args.hello,
                          pause=args.pause, geometry=args.geometry,
                          max_dept=args.max_dept)
            for p, n, s in cells]
    t0 = time.perf_counter()
    with ProcessPoolExecutor(max_workers=args.parallelism) as pool:
        results = dict(zip(cells, pool.map(_run, cfgs)))
    wall = time.perf_counter() - t0

    print(f"\n{len(cells)} runs in {wall:.1f}s")
    for n in args.sizes:
        print(f"\n== size {n}")
        for p in PROTOCOLS:
            ms = [results[(p, n, s)] for s in args.seeds]
            pdr = sum(m.pdr for m in ms) / len(ms)
            delays = [m.avg_delay for m in ms if m.delivered > 0]
            delay = sum(delays) / len(delays) if delays else float("nan")
            dr = sum(m.drop_rate for m in ms) / len(ms)
            reasons = {}
            for m in ms:
                for name, count in m.drops_by_reason:
                    reasons[name] = reasons.get(name, 0) + count
            print(f"  {p:12s} pdr={pdr:6.2f}%  delay={delay:8.2f}ms  "
                  f"drop={dr:6.3f}/s  "
                  f"q={reasons['queue_overflow']} l={reasons['link_break']} "
                  f"d={reasons['node_dead']} n={reasons['no_route']}")

    print("\n== per-seed pairs at the largest size")
    hi = args.sizes[-1]
    for rival in ("mmre", "zd"):
        rows = []
        for s in args.seeds:
            a, b = results[("dbmf", hi, s)], results[(rival, hi, s)]
            rows.append(f"s{s}:{a.pdr - b.pdr:+.2f}/{a.avg_delay - b.avg_delay:+.0f}")
        print(f"  vs {rival:5s} (dPDR%/dDelay ms): " + "  ".join(rows))

    print("\n== per-seed aggregates over sizes (acceptance pairing)")
    for rival in ("mmre", "zd"):
        for metric in ("pdr", "delay"):
            wins = losses = 0
            for s in args.seeds:
                da = [getattr(results[("dbmf", n, s)], "avg_delay" if metric == "delay" else "pdr")
                      for n in args.sizes
                      if metric == "pdr" or (results[("dbmf", n, s)].delivered and results[(rival, n, s)].delivered)]
                db = [getattr(results[(rival, n, s)], "avg_delay" if metric == "delay" else "pdr")
                      for n in args.sizes
                      if metric == "pdr" or (results[("dbmf", n, s)].delivered and results[(rival, n, s)].delivered)]
                if not da:
                    continue
                va, vb = sum(da) / len(da), sum(db) / len(db)
                if va == vb:
                    continue
                better = va > vb if metric == "pdr" else va < vb
                wins += 1 if better else 0
                losses += 0 if better else 1
            p = sign_test_p(wins, losses)
            print(f"  {metric:5s} vs {rival:5s}: wins={wins} losses={losses} p={p:.4f}")

    for metric in ("pdr", "delay", "growth"):
        print(f"\n== {metric}")
        for rival in ("mmre", "zd"):
            wins = losses = 0
            means = {"dbmf": [], rival: []}
            if metric == "growth":
                lo, hi = args.sizes[0], args.sizes[-1]
                for s in args.seeds:
                    g_d = (results[("dbmf", hi, s)].drop_rate
                           - results[("dbmf", lo, s)].drop_rate)
                    g_r = (results[(rival, hi, s)].drop_rate
                           - results[(rival, lo, s)].drop_rate)
                    means["dbmf"].append(g_d)
                    means[rival].append(g_r)
                    if g_d < g_r:
                        wins += 1
                    elif g_d > g_r:
                        losses += 1
            else:
                for n in args.sizes:
                    for s in args.seeds:
                        a, b = results[("dbmf", n, s)], results[(rival, n, s)]
                        if metric == "pdr":
                            va, vb = a.pdr, b.pdr
                            better = va > vb
                        else:
                            if a.delivered == 0 or b.delivered == 0:
                                continue
                            va, vb = a.avg_delay, b.avg_delay
                            better = va < vb
                        means["dbmf"].append(va)
                        means[rival].append(vb)
                        if va == vb:
                            continue
                        wins += 1 if better else 0
                        losses += 0 if better else 1
            mean_d = sum(means["dbmf"]) / max(len(means["dbmf"]), 1)
            mean_r = sum(means[rival]) / max(len(means[rival]), 1)
            p = sign_test_p(wins, losses)
            print(f"  dbmf vs {rival:5s}: mean {mean_d:8.3f} vs {mean_r:8.3f}  "
                  f"wins={wins} losses={losses}  p={p:.4f}")


if __name__ == "__main__":
    sys.exit(main())
