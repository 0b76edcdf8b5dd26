"""Signed directed graphs, switching signals, and joint-connectivity checks.

Nodes are numbered 1..n. An arc (j, i, sign) means node j influences node i;
sign -1 marks an antagonistic interaction. A switching signal is a
piecewise-constant map from time to an index of a finite graph family; its
uniform joint connectivity over windows of a given length is decided exactly
by evaluating the union graph at window starts where the union can change
(piece boundaries, piece boundaries shifted by the window length, and a grid
of the minimum piece duration).
"""

from __future__ import annotations

import bisect
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping

from .errors import DomainError, InsufficientHorizonError


@dataclass(frozen=True)
class SignedDigraph:
    """Directed graph on nodes 1..n with +/-1 signed arcs."""

    n: int
    arcs: frozenset[tuple[int, int, int]]
    allow_self_loops: bool = False

    def __init__(
        self,
        n: int,
        arcs: Iterable[tuple[int, int] | tuple[int, int, int]] = (),
        allow_self_loops: bool = False,
    ):
        if n < 1:
            raise DomainError("graph needs at least one node")
        norm: dict[tuple[int, int], int] = {}
        for arc in arcs:
            if len(arc) == 2:
                j, i, s = arc[0], arc[1], 1
            else:
                j, i, s = arc
            j, i, s = int(j), int(i), int(s)
            if s not in (1, -1):
                raise DomainError(f"arc ({j},{i}) sign must be +1 or -1, got {s}")
            if not (1 <= j <= n and 1 <= i <= n):
                raise DomainError(f"arc ({j},{i}) has node outside 1..{n}")
            if j == i and not allow_self_loops:
                raise DomainError(f"self-loop ({j},{i}) not allowed for this graph")
            if norm.get((j, i), s) != s:
                raise DomainError(f"arc ({j},{i}) appears with conflicting signs")
            norm[(j, i)] = s
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "allow_self_loops", allow_self_loops)
        object.__setattr__(
            self, "arcs", frozenset((j, i, s) for (j, i), s in norm.items())
        )

    def neighbors(self, i: int) -> list[int]:
        """In-neighbors of node i: all j with an arc (j, i)."""
        return sorted(j for (j, tgt, _s) in self.arcs if tgt == i)

    def sign(self, j: int, i: int) -> int:
        for (src, tgt, s) in self.arcs:
            if src == j and tgt == i:
                return s
        raise DomainError(f"no arc ({j},{i})")

    def has_arc(self, j: int, i: int) -> bool:
        return any(src == j and tgt == i for (src, tgt, _s) in self.arcs)

    def out_adjacency(self) -> list[list[int]]:
        """Successor lists indexed 0..n-1 (self-loops dropped)."""
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for (j, i, _s) in self.arcs:
            if j != i:
                adj[j - 1].append(i - 1)
        return adj

    def unsigned(self) -> "SignedDigraph":
        return SignedDigraph(
            self.n,
            ((j, i, 1) for (j, i, _s) in self.arcs),
            allow_self_loops=self.allow_self_loops,
        )


def _reachable_from(adj: list[list[int]], root: int) -> int:
    """Count of nodes reachable from root (root included) by BFS."""
    seen = [False] * len(adj)
    seen[root] = True
    queue = deque([root])
    count = 1
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if not seen[w]:
                seen[w] = True
                count += 1
                queue.append(w)
    return count


def is_quasi_strongly_connected(g: SignedDigraph) -> bool:
    """True iff some node has a directed path to every other node."""
    adj = g.out_adjacency()
    return any(_reachable_from(adj, r) == g.n for r in range(g.n))


def is_strongly_connected(g: SignedDigraph) -> bool:
    """True iff every node is reachable from every other node."""
    if g.n == 1:
        return True
    adj = g.out_adjacency()
    if _reachable_from(adj, 0) != g.n:
        return False
    radj: list[list[int]] = [[] for _ in range(g.n)]
    for u, outs in enumerate(adj):
        for w in outs:
            radj[w].append(u)
    return _reachable_from(radj, 0) == g.n


# Simple presets. Ring and chain are directed; star and complete use mutual arcs.


def ring_graph(n: int, sign: int = 1) -> SignedDigraph:
    return SignedDigraph(n, ((i, i % n + 1, sign) for i in range(1, n + 1)))


def chain_graph(n: int, sign: int = 1) -> SignedDigraph:
    return SignedDigraph(n, ((i, i + 1, sign) for i in range(1, n)))


def star_graph(n: int, center: int = 1, sign: int = 1) -> SignedDigraph:
    arcs = []
    for i in range(1, n + 1):
        if i != center:
            arcs.append((center, i, sign))
            arcs.append((i, center, sign))
    return SignedDigraph(n, arcs)


def complete_graph(n: int, sign: int = 1) -> SignedDigraph:
    return SignedDigraph(
        n, ((j, i, sign) for j in range(1, n + 1) for i in range(1, n + 1) if j != i)
    )


class ConnectivityMode(Enum):
    QUASI_STRONG = "QuasiStrong"
    STRONG = "Strong"

    def test(self, g: SignedDigraph) -> bool:
        if self is ConnectivityMode.QUASI_STRONG:
            return is_quasi_strongly_connected(g)
        return is_strongly_connected(g)


@dataclass(frozen=True)
class SwitchingSignal:
    """Piecewise-constant family index over time.

    ``pieces`` is a list of (start_time, index); piece l is active on
    [start_l, start_{l+1}) and the last piece runs to ``horizon_end``. A
    periodic signal repeats with period ``horizon_end - pieces[0].start``.
    """

    pieces: tuple[tuple[float, Any], ...]
    tau_d: float
    horizon_end: float
    periodic: bool = False

    def __init__(
        self,
        pieces: Iterable[tuple[float, Any]],
        tau_d: float,
        horizon_end: float,
        periodic: bool = False,
    ):
        pieces = tuple((float(t), idx) for t, idx in pieces)
        if not pieces:
            raise DomainError("signal needs at least one piece")
        if tau_d <= 0:
            raise DomainError("dwell time tau_d must be positive")
        if horizon_end <= pieces[-1][0]:
            raise DomainError("horizon_end must exceed the last piece start")
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "tau_d", float(tau_d))
        object.__setattr__(self, "horizon_end", float(horizon_end))
        object.__setattr__(self, "periodic", bool(periodic))

    @property
    def t0(self) -> float:
        return self.pieces[0][0]

    @property
    def period(self) -> float:
        return self.horizon_end - self.t0

    def start_times(self) -> list[float]:
        return [t for t, _ in self.pieces]

    def wrap(self, t: float) -> float:
        """Map t into [t0, horizon_end) for periodic signals."""
        if not self.periodic or t < self.horizon_end:
            return t
        return self.t0 + (t - self.t0) % self.period

    def active_index(self, t: float) -> Any:
        """Family index active at time t (right-continuous)."""
        if t < self.t0:
            raise DomainError(f"t={t} precedes the signal start {self.t0}")
        t = self.wrap(t)
        starts = self.start_times()
        pos = bisect.bisect_right(starts, t) - 1
        return self.pieces[pos][1]

    def switch_times_until(self, t_end: float) -> list[float]:
        """All switching instants in (t0, t_end), tiling periodically if needed."""
        if t_end > self.horizon_end and not self.periodic:
            raise DomainError("t_end exceeds the horizon of an aperiodic signal")
        times: set[float] = set()
        offset = 0.0
        while self.t0 + offset < t_end:
            for t, _ in self.pieces:
                shifted = t + offset
                if self.t0 < shifted < t_end:
                    times.add(shifted)
            if not self.periodic:
                break
            # The wrap back to the first piece is a switching instant too.
            offset += self.period
            wrap = self.t0 + offset
            if self.t0 < wrap < t_end:
                times.add(wrap)
        return sorted(times)


@dataclass(frozen=True)
class DwellViolation:
    """A switching-signal defect: pieces out of order or switched too fast."""

    index: int
    gap: float
    required: float

    def __str__(self) -> str:
        return (
            f"piece {self.index}: gap {self.gap:g} below dwell time {self.required:g}"
        )


def validate_switching_signal(signal: SwitchingSignal) -> list[DwellViolation]:
    """Empty list iff piece times are strictly increasing with gaps >= tau_d.

    For periodic signals the wrap-around gap (horizon_end back to the first
    piece) is checked as well.
    """
    violations = []
    starts = signal.start_times()
    for idx in range(1, len(starts)):
        gap = starts[idx] - starts[idx - 1]
        if gap < signal.tau_d:
            violations.append(DwellViolation(idx, gap, signal.tau_d))
    if signal.periodic:
        wrap_gap = signal.horizon_end - starts[-1]
        if wrap_gap < signal.tau_d:
            violations.append(DwellViolation(len(starts), wrap_gap, signal.tau_d))
    return violations


def _pieces_overlapping(
    signal: SwitchingSignal, t1: float, t2: float
) -> list[Any]:
    """Indices of pieces active at some point of [t1, t2), tiling if periodic."""
    idxs: list[Any] = []
    if signal.periodic:
        # Tile piece list far enough to cover [t1, t2).
        tiled: list[tuple[float, Any]] = []
        offset = 0.0
        while signal.t0 + offset < t2:
            tiled.extend((t + offset, p) for t, p in signal.pieces)
            offset += signal.period
        pieces = tiled
        ends = [t for t, _ in pieces[1:]] + [signal.t0 + offset]
    else:
        pieces = list(signal.pieces)
        ends = [t for t, _ in pieces[1:]] + [signal.horizon_end]
    for (start, p), end in zip(pieces, ends):
        if start < t2 and end > t1:
            idxs.append(p)
    return idxs


def union_graph(
    signal: SwitchingSignal,
    family: Mapping[Any, SignedDigraph],
    t1: float,
    t2: float,
) -> SignedDigraph:
    """Union of the arc sets of all graphs active on [t1, t2), signs dropped.

    Connectivity of the joint graph does not depend on arc signs, so an arc
    present under either sign is present (with sign +1) in the union.
    """
    if not t1 < t2:
        raise DomainError("need t1 < t2")
    if t1 < signal.t0 or (not signal.periodic and t2 > signal.horizon_end):
        raise DomainError(
            f"[{t1}, {t2}) outside signal horizon [{signal.t0}, {signal.horizon_end}]"
        )
    ns = {family[p].n for p in _pieces_overlapping(signal, t1, t2)}
    if len(ns) > 1:
        raise DomainError("family graphs disagree on node count")
    n = ns.pop()
    arcs = set()
    loops = False
    for p in _pieces_overlapping(signal, t1, t2):
        g = family[p]
        loops = loops or g.allow_self_loops
        arcs.update((j, i, 1) for (j, i, _s) in g.arcs)
    return SignedDigraph(n, arcs, allow_self_loops=loops)


@dataclass(frozen=True)
class ConnectivityVerdict:
    """Outcome of a uniform joint connectivity check."""

    ok: bool
    mode: ConnectivityMode
    window: float
    scope: str
    windows_checked: int
    witness: tuple[float, float] | None = None
    checked_windows: tuple[tuple[float, float, bool], ...] = field(default=())

    def __bool__(self) -> bool:
        return self.ok


def check_uniform_joint_connectivity(
    signal: SwitchingSignal,
    family: Mapping[Any, SignedDigraph],
    T: float,
    mode: ConnectivityMode = ConnectivityMode.QUASI_STRONG,
) -> ConnectivityVerdict:
    """Decide whether every length-T window's union graph is connected.

    Window starts are discretized to piece boundaries, piece boundaries
    shifted left by T, and a grid of the minimum piece duration; this is exact
    because the union over [t, t+T) only changes when t or t+T crosses a
    switching instant. For a periodic signal one period of starts suffices and
    the verdict extends to all times; for an aperiodic finite signal the
    verdict is scoped to the supplied horizon.
    """
    if T <= 0:
        raise DomainError("window length T must be positive")
    t0 = signal.t0
    if signal.periodic:
        last_start = t0 + signal.period
        scope = "global (periodic extension)"
    else:
        if signal.horizon_end - t0 < T:
            raise InsufficientHorizonError(
                f"window T={T} exceeds horizon {signal.horizon_end - t0}"
            )
        last_start = signal.horizon_end - T
        scope = f"horizon [{t0}, {signal.horizon_end})"

    starts = signal.start_times()
    durations = [b - a for a, b in zip(starts, starts[1:])]
    durations.append(signal.horizon_end - starts[-1])
    delta = min(durations)

    candidates = {t0, last_start}
    boundary_points = list(starts)
    if signal.periodic:
        boundary_points += [s + signal.period for s in starts]
    for s in boundary_points:
        for c in (s, s - T):
            if t0 <= c <= last_start:
                candidates.add(c)
    grid = t0
    while grid <= last_start:
        candidates.add(grid)
        grid += delta

    checked = []
    witness = None
    for start in sorted(candidates):
        g = union_graph(signal, family, start, start + T)
        ok = mode.test(g)
        checked.append((start, start + T, ok))
        if not ok and witness is None:
            witness = (start, start + T)
    return ConnectivityVerdict(
        ok=witness is None,
        mode=mode,
        window=T,
        scope=scope,
        windows_checked=len(checked),
        witness=witness,
        checked_windows=tuple(checked),
    )


# JSON exchange format: graph {n, arcs: [[j, i, sign], ...]},
# signal {tau_d, pieces: [[t, index], ...], horizon_end, periodic}.


def graph_to_json(g: SignedDigraph) -> dict:
    return {
        "n": g.n,
        "arcs": sorted([j, i, s] for (j, i, s) in g.arcs),
        "allow_self_loops": g.allow_self_loops,
    }


def graph_from_json(obj: Mapping) -> SignedDigraph:
    try:
        return SignedDigraph(
            int(obj["n"]),
            [tuple(a) for a in obj["arcs"]],
            allow_self_loops=bool(obj.get("allow_self_loops", False)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"bad graph object: {exc}") from exc


def signal_to_json(signal: SwitchingSignal) -> dict:
    return {
        "tau_d": signal.tau_d,
        "pieces": [[t, p] for t, p in signal.pieces],
        "horizon_end": signal.horizon_end,
        "periodic": signal.periodic,
    }


def signal_from_json(obj: Mapping) -> SwitchingSignal:
    try:
        return SwitchingSignal(
            [(float(t), p) for t, p in obj["pieces"]],
            tau_d=float(obj["tau_d"]),
            horizon_end=float(obj["horizon_end"]),
            periodic=bool(obj.get("periodic", False)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"bad signal object: {exc}") from exc
