"""Shared builders for module and acceptance tests."""

import numpy as np

from compass_consensus.geometry import Hyperrectangle
from compass_consensus.graphs import SignedDigraph, SwitchingSignal


def random_query(rng, allow_degenerate=True):
    """Box, point-on-box, and direction sampled clear of the tolerance band.

    Coordinates sit exactly on facets or at least 20% of a side away from
    them; direction components are exactly zero or at least 0.01 in
    magnitude, so closed-form verdicts and the numeric probe cannot disagree
    inside any tolerance band.
    """
    d = int(rng.integers(1, 4))
    lo = rng.uniform(-2, 2, size=d)
    sides = rng.uniform(0.2, 3.0, size=d)
    if allow_degenerate:
        sides[rng.random(d) < 0.15] = 0.0
    box = Hyperrectangle(lo, lo + sides)
    x = np.empty(d)
    for k in range(d):
        u = rng.random()
        if sides[k] == 0.0 or u < 0.3:
            x[k] = box.lo[k]
        elif u < 0.6:
            x[k] = box.hi[k]
        else:
            x[k] = box.lo[k] + sides[k] * rng.uniform(0.2, 0.8)
    v = np.zeros(d)
    for k in range(d):
        u = rng.random()
        if u < 0.25:
            v[k] = 0.0
        else:
            v[k] = rng.choice([-1.0, 1.0]) * rng.uniform(0.01, 2.0)
    return box, x, v


def cyclic_signal(names, dwell, horizon, tau_d=None):
    """Round-robin switching through ``names`` every ``dwell`` seconds."""
    pieces = []
    t, k = 0.0, 0
    while t < horizon - 1e-9:
        pieces.append((t, names[k % len(names)]))
        t += dwell
        k += 1
    return SwitchingSignal(pieces, tau_d=tau_d or dwell, horizon_end=horizon)


def triangle_family_5():
    """Three graphs on 5 nodes, none quasi-strongly connected, whose union is
    strongly connected: mutual triangles on {1,2,3} and {3,4,5} plus cross
    links {5-1, 2-4, 1-4}."""
    g1 = SignedDigraph(5, [(1, 2), (2, 1), (2, 3), (3, 2), (1, 3), (3, 1)])
    g2 = SignedDigraph(5, [(3, 4), (4, 3), (4, 5), (5, 4), (3, 5), (5, 3)])
    g3 = SignedDigraph(5, [(5, 1), (1, 5), (2, 4), (4, 2), (1, 4), (4, 1)])
    return {"g1": g1, "g2": g2, "g3": g3}


def split_family_5():
    """Three graphs on 5 nodes that all keep {1,2} and {3,4,5} disconnected."""
    g1 = SignedDigraph(5, [(1, 2), (2, 1), (3, 4), (4, 3)])
    g2 = SignedDigraph(5, [(1, 2), (2, 1), (4, 5), (5, 4)])
    g3 = SignedDigraph(5, [(3, 5), (5, 3)])
    return {"g1": g1, "g2": g2, "g3": g3}


def signed_ring_family_4():
    """Two half-rings on 4 nodes with one antagonistic arc each; the union is
    the structurally balanced directed ring 1->2->3->4->1."""
    g1 = SignedDigraph(4, [(1, 2, -1), (3, 4, 1)])
    g2 = SignedDigraph(4, [(2, 3, 1), (4, 1, -1)])
    return {"g1": g1, "g2": g2}
