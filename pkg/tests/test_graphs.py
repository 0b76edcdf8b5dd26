import numpy as np
import pytest

from compass_consensus.errors import DomainError, InsufficientHorizonError
from compass_consensus.graphs import (
    ConnectivityMode,
    SignedDigraph,
    SwitchingSignal,
    chain_graph,
    check_uniform_joint_connectivity,
    complete_graph,
    graph_from_json,
    graph_to_json,
    is_quasi_strongly_connected,
    is_strongly_connected,
    ring_graph,
    signal_from_json,
    signal_to_json,
    star_graph,
    union_graph,
    validate_switching_signal,
)


def closure_oracle(g: SignedDigraph) -> np.ndarray:
    """Boolean transitive closure by repeated matrix squaring (independent path)."""
    n = g.n
    reach = np.eye(n, dtype=bool)
    for (j, i, _s) in g.arcs:
        if j != i:
            reach[j - 1, i - 1] = True
    for _ in range(n):
        reach = reach | (reach @ reach)
    return reach


def oracle_qsc(g):
    return bool(closure_oracle(g).all(axis=1).any())


def oracle_sc(g):
    return bool(closure_oracle(g).all())


class TestSignedDigraph:
    def test_neighbors_and_signs(self):
        g = SignedDigraph(3, [(1, 2, 1), (3, 2, -1)])
        assert g.neighbors(2) == [1, 3]
        assert g.sign(3, 2) == -1
        assert g.has_arc(1, 2) and not g.has_arc(2, 1)

    def test_conflicting_signs_rejected(self):
        with pytest.raises(DomainError):
            SignedDigraph(2, [(1, 2, 1), (1, 2, -1)])

    def test_self_loop_needs_flag(self):
        with pytest.raises(DomainError):
            SignedDigraph(2, [(1, 1)])
        g = SignedDigraph(2, [(1, 1)], allow_self_loops=True)
        assert g.has_arc(1, 1)

    def test_node_range_checked(self):
        with pytest.raises(DomainError):
            SignedDigraph(2, [(1, 3)])


class TestConnectivity:
    def test_chain_is_quasi_strong_only(self):
        g = chain_graph(3)
        assert is_quasi_strongly_connected(g)
        assert not is_strongly_connected(g)

    def test_isolated_nodes(self):
        g = SignedDigraph(2, [])
        assert not is_quasi_strongly_connected(g)

    def test_ring_strong(self):
        g = ring_graph(4)
        assert is_strongly_connected(g)
        assert is_quasi_strongly_connected(g)

    def test_single_node_vacuous(self):
        g = SignedDigraph(1, [])
        assert is_strongly_connected(g)
        assert is_quasi_strongly_connected(g)

    def test_presets_connected(self):
        assert is_strongly_connected(complete_graph(5))
        assert is_strongly_connected(star_graph(5))

    def test_strong_implies_quasi_strong_random(self):
        rng = np.random.default_rng(5)
        for _ in range(300):
            n = int(rng.integers(1, 8))
            arcs = [
                (j, i)
                for j in range(1, n + 1)
                for i in range(1, n + 1)
                if j != i and rng.random() < 0.3
            ]
            g = SignedDigraph(n, arcs)
            if is_strongly_connected(g):
                assert is_quasi_strongly_connected(g)

    def test_against_closure_oracle(self):
        rng = np.random.default_rng(99)
        for _ in range(500):
            n = int(rng.integers(1, 8))
            arcs = [
                (j, i)
                for j in range(1, n + 1)
                for i in range(1, n + 1)
                if j != i and rng.random() < 0.35
            ]
            g = SignedDigraph(n, arcs)
            assert is_quasi_strongly_connected(g) == oracle_qsc(g)
            assert is_strongly_connected(g) == oracle_sc(g)


def alternating_signal(horizon=4.0, dwell=1.0):
    pieces = []
    t, k = 0.0, 0
    while t < horizon - 1e-12:
        pieces.append((t, "a" if k % 2 == 0 else "b"))
        t += dwell
        k += 1
    return SwitchingSignal(pieces, tau_d=dwell, horizon_end=horizon)


ALT_FAMILY = {
    "a": SignedDigraph(2, [(1, 2)]),
    "b": SignedDigraph(2, [(2, 1)]),
}


class TestUnionGraph:
    def test_union_of_alternation(self):
        sig = alternating_signal()
        g = union_graph(sig, ALT_FAMILY, 0.0, 2.0)
        assert g.has_arc(1, 2) and g.has_arc(2, 1)

    def test_window_inside_one_piece(self):
        sig = alternating_signal()
        g = union_graph(sig, ALT_FAMILY, 0.1, 0.9)
        assert g.has_arc(1, 2) and not g.has_arc(2, 1)

    def test_empty_family_union(self):
        sig = SwitchingSignal([(0.0, "e")], tau_d=1.0, horizon_end=2.0)
        g = union_graph(sig, {"e": SignedDigraph(3, [])}, 0.0, 2.0)
        assert len(g.arcs) == 0

    def test_signs_dropped(self):
        fam = {"a": SignedDigraph(2, [(1, 2, -1)]), "b": SignedDigraph(2, [(1, 2, 1)])}
        sig = alternating_signal()
        g = union_graph(sig, fam, 0.0, 4.0)
        assert g.arcs == frozenset({(1, 2, 1)})

    def test_outside_horizon(self):
        sig = alternating_signal()
        with pytest.raises(DomainError):
            union_graph(sig, ALT_FAMILY, 0.0, 5.0)

    def test_monotone_in_window(self):
        sig = alternating_signal(horizon=8.0)
        rng = np.random.default_rng(2)
        for _ in range(100):
            a = rng.uniform(0, 7)
            b = rng.uniform(a + 0.01, 8)
            inner = union_graph(sig, ALT_FAMILY, a, b)
            a2 = rng.uniform(0, a)
            b2 = rng.uniform(b, 8)
            outer = union_graph(sig, ALT_FAMILY, a2, b2)
            assert inner.arcs <= outer.arcs


class TestSwitchingSignalValidation:
    def test_clean_signal(self):
        sig = SwitchingSignal([(0, "a"), (1, "b"), (2, "a")], tau_d=0.5, horizon_end=3)
        assert validate_switching_signal(sig) == []

    def test_dwell_violation(self):
        sig = SwitchingSignal([(0, "a"), (0.3, "b")], tau_d=0.5, horizon_end=1)
        bad = validate_switching_signal(sig)
        assert len(bad) == 1 and bad[0].index == 1

    def test_single_piece(self):
        sig = SwitchingSignal([(0, "a")], tau_d=0.5, horizon_end=1)
        assert validate_switching_signal(sig) == []

    def test_periodic_wrap_gap(self):
        sig = SwitchingSignal(
            [(0, "a"), (1, "b")], tau_d=0.5, horizon_end=1.2, periodic=True
        )
        bad = validate_switching_signal(sig)
        assert len(bad) == 1 and bad[0].index == 2

    def test_active_index_lookup(self):
        sig = alternating_signal()
        assert sig.active_index(0.0) == "a"
        assert sig.active_index(0.999) == "a"
        assert sig.active_index(1.0) == "b"
        assert sig.active_index(3.5) == "b"


class TestUniformJointConnectivity:
    def test_alternation_strong_at_t2(self):
        sig = alternating_signal(horizon=6.0)
        v = check_uniform_joint_connectivity(sig, ALT_FAMILY, 2.0, ConnectivityMode.STRONG)
        assert v.ok and v.witness is None

    def test_alternation_fails_inside_one_piece(self):
        sig = alternating_signal(horizon=6.0)
        v = check_uniform_joint_connectivity(sig, ALT_FAMILY, 0.5, ConnectivityMode.STRONG)
        assert not v.ok
        start, end = v.witness
        g = union_graph(sig, ALT_FAMILY, start, end)
        assert not is_strongly_connected(g)

    def test_static_quasi_strong(self):
        fam = {"c": chain_graph(3)}
        sig = SwitchingSignal([(0.0, "c")], tau_d=1.0, horizon_end=10.0)
        for T in (0.5, 2.0, 9.0):
            v = check_uniform_joint_connectivity(sig, fam, T, ConnectivityMode.QUASI_STRONG)
            assert v.ok

    def test_bigger_window_implied(self):
        sig = alternating_signal(horizon=8.0)
        vT = check_uniform_joint_connectivity(sig, ALT_FAMILY, 2.0, ConnectivityMode.STRONG)
        vT2 = check_uniform_joint_connectivity(sig, ALT_FAMILY, 3.0, ConnectivityMode.STRONG)
        assert vT.ok and vT2.ok

    def test_insufficient_horizon(self):
        sig = alternating_signal(horizon=4.0)
        with pytest.raises(InsufficientHorizonError):
            check_uniform_joint_connectivity(sig, ALT_FAMILY, 5.0, ConnectivityMode.STRONG)

    def test_periodic_extends_globally(self):
        sig = SwitchingSignal(
            [(0.0, "a"), (1.0, "b")], tau_d=1.0, horizon_end=2.0, periodic=True
        )
        v = check_uniform_joint_connectivity(sig, ALT_FAMILY, 2.0, ConnectivityMode.STRONG)
        assert v.ok and "periodic" in v.scope

    def test_periodic_window_longer_than_period(self):
        fam = {
            "a": SignedDigraph(3, [(1, 2)]),
            "b": SignedDigraph(3, [(2, 3)]),
            "c": SignedDigraph(3, [(3, 1)]),
        }
        sig = SwitchingSignal(
            [(0.0, "a"), (1.0, "b"), (2.0, "c")],
            tau_d=1.0,
            horizon_end=3.0,
            periodic=True,
        )
        ok3 = check_uniform_joint_connectivity(sig, fam, 3.0, ConnectivityMode.STRONG)
        assert ok3.ok
        bad2 = check_uniform_joint_connectivity(sig, fam, 1.5, ConnectivityMode.STRONG)
        assert not bad2.ok


class TestJsonRoundTrip:
    def test_graph(self):
        g = SignedDigraph(3, [(1, 2, -1), (2, 3, 1)])
        assert graph_from_json(graph_to_json(g)) == g

    def test_signal(self):
        sig = alternating_signal()
        back = signal_from_json(signal_to_json(sig))
        assert back == sig

    def test_bad_graph_object(self):
        with pytest.raises(DomainError):
            graph_from_json({"n": 2})
