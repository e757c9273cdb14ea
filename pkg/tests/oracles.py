"""Independent brute-force oracles the implementation is checked against.

Deliberately naive O(n^2) re-derivations written straight from the routing
rules, sharing no code with hybsim.topology.
"""

import math

DIRECT = "DIRECT"
ISOLATED = "ISOLATED"


def brute_force_rows(points, bs, m_halfwidth, n_extent, k, radio_range,
                     alive=None):
    """Recompute every neighbour row by exhaustive pairwise scan.

    ``points`` maps node id -> (x, y); ``bs`` is an (x, y) pair. Returns
    id -> tuple of neighbour ids, or the DIRECT / ISOLATED marker strings.
    """
    alive = set(points) if alive is None else set(alive)
    rows = {}
    for u in alive:
        ux, uy = points[u]
        du = math.hypot(ux - bs[0], uy - bs[1])
        cands = []
        for v in alive:
            if v == u:
                continue
            vx, vy = points[v]
            if abs(vx - ux) > m_halfwidth:
                continue
            if n_extent is not None and abs(vy - uy) > n_extent:
                continue
            dv = math.hypot(vx - bs[0], vy - bs[1])
            if not dv < du:
                continue
            if math.hypot(vx - ux, vy - uy) > radio_range:
                continue
            cands.append((dv, v))
        cands.sort()
        if cands:
            rows[u] = tuple(v for _, v in cands[:k])
        elif du <= radio_range:
            rows[u] = DIRECT
        else:
            rows[u] = ISOLATED
    return rows


def replay_energy_ledger(initial, charges):
    """Replay a node's charge list against a zero-clamped battery."""
    residual = initial
    for amount in charges:
        residual = max(0.0, residual - amount)
    return residual
