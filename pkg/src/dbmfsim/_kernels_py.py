"""Pure-Python batch kernels; reference semantics for dbmfsim._speedups.

Every expression here is kept in the exact shape of the Cython version
(sqrt of squared components, fixed multiply/divide order) so both backends
produce bit-identical doubles and traces.
"""

from math import sqrt

BACKEND = "pure-python"


def advance_moving(xs, ys, txs, tys, speeds, pauses, dt):
    """Advance all plainly-moving nodes in place by dt.

    Returns the indices whose update needs the scalar Random Waypoint logic
    (paused, arriving within dt, or sitting on the target): those transitions
    may consume RNG draws and are handled by the caller.
    """
    flagged = []
    n = len(xs)
    for i in range(n):
        if pauses[i] > 0.0:
            flagged.append(i)
            continue
        dx = txs[i] - xs[i]
        dy = tys[i] - ys[i]
        dist = sqrt(dx * dx + dy * dy)
        step = speeds[i] * dt
        if step >= dist:
            flagged.append(i)
        else:
            xs[i] += dx / dist * step
            ys[i] += dy / dist * step
    return flagged


def scan_receivers(xs, ys, ranges, alive, sender, k_const, trans_pow, q_exp,
                   min_dist, want_rss):
    """All alive nodes within mutual radio range of `sender`, ascending index.

    When want_rss is true, also returns the received power of a transmission
    from `sender` at each receiver (distance clamped to min_dist).
    """
    idx = []
    rss = [] if want_rss else None
    n = len(xs)
    sx = xs[sender]
    sy = ys[sender]
    sr = ranges[sender]
    for j in range(n):
        if j == sender or not alive[j]:
            continue
        limit = sr if sr < ranges[j] else ranges[j]
        dx = xs[j] - sx
        dy = ys[j] - sy
        d2 = dx * dx + dy * dy
        if d2 > limit * limit:
            continue
        idx.append(j)
        if want_rss:
            d = sqrt(d2)
            if d < min_dist:
                d = min_dist
            if q_exp == 2:
                rss.append(k_const * trans_pow / (d * d))
            else:
                rss.append(k_const * trans_pow / (d * d * d))
    return idx, rss
