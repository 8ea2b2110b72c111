from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from flowsim.errors import InvalidParameterError, NoRouteError
from flowsim.flowcore import (
    DROP,
    Drop,
    FlowEntry,
    FlowHeader,
    FlowTable,
    Forward,
    Packet,
    PacketKind,
    all_merge_sets,
    chk_ft,
    def_ft,
    dump_table,
    install_tables,
    map_network,
    merge_networks,
    merge_set_for,
    permitted_links,
)
from flowsim.radio import DEFAULT_RADIO, link_matrix
from flowsim.topology import Scenario, from_positions, place_random

GOLDEN = Path(__file__).parent / "golden"


def five_node_tree():
    # AP 0; sensors 1 (8,0) and 2 (-8,0) hang off the AP; 3 (16,0) and 4 (8,8) hang off 1
    return from_positions([(20.0, 20.0)], [(28.0, 20.0), (12.0, 20.0), (36.0, 20.0), (28.0, 28.0)], side=50.0)


def data(src, dst, net=0):
    return Packet(PacketKind.DATA, src, dst, 125, net)


class TestChkFt:
    def test_direct_match(self):
        t = FlowTable(1, [FlowEntry(FlowHeader(dst=0), Forward(7), 10)])
        assert chk_ft(t, data(1, 0)) == Forward(7)

    def test_miss_drops(self):
        t = FlowTable(1, [FlowEntry(FlowHeader(dst=0), Forward(7), 10)])
        assert chk_ft(t, data(1, 5)) == DROP

    def test_empty_table_drops(self):
        assert isinstance(chk_ft(FlowTable(3), data(3, 0)), Drop)

    def test_priority_wins(self):
        t = FlowTable(1, [FlowEntry(FlowHeader(dst=0), Forward(5), 5), FlowEntry(FlowHeader(dst=0), Forward(9), 9)])
        assert chk_ft(t, data(1, 0)) == Forward(9)

    def test_specificity_breaks_priority_ties(self):
        t = FlowTable(
            1,
            [FlowEntry(FlowHeader(dst=0), Forward(2), 5), FlowEntry(FlowHeader(src=1, dst=0), Forward(3), 5)],
        )
        assert chk_ft(t, data(1, 0)) == Forward(3)

    def test_install_order_breaks_remaining_ties(self):
        t = FlowTable(1)
        t.install(FlowEntry(FlowHeader(dst=0), Forward(2), 5))
        t.install(FlowEntry(FlowHeader(dst=0), Forward(3), 5))
        assert chk_ft(t, data(1, 0)) == Forward(2)

    def test_wildcard_bucket_competes_with_exact(self):
        t = FlowTable(1, [FlowEntry(FlowHeader(dst=0), Forward(2), 1), FlowEntry(FlowHeader(), Forward(4), 3)])
        assert chk_ft(t, data(1, 0)) == Forward(4)

    def test_scope_must_match(self):
        t = FlowTable(1, [FlowEntry(FlowHeader(dst=0, network_scope=2), Forward(2), 5)])
        assert chk_ft(t, data(1, 0, net=1)) == DROP
        assert chk_ft(t, data(1, 0, net=2)) == Forward(2)

    def test_counters_by_kind(self):
        e = FlowEntry(FlowHeader(dst=0), Forward(2), 5)
        t = FlowTable(1, [e])
        chk_ft(t, data(1, 0))
        chk_ft(t, Packet(PacketKind.CONTROL, 1, 0, 20))
        chk_ft(t, Packet(PacketKind.ACK, 1, 0, 125))
        assert (e.counters.control_pkts, e.counters.data_pkts) == (1, 2)

    def test_hop_trace_starts_at_src(self):
        assert data(4, 0).hop_trace == [4]


class TestMapNetwork:
    def test_fully_connected_three_sensors(self):
        t = from_positions([(5.0, 5.0)], [(6.0, 5.0), (5.0, 6.0), (4.0, 4.0)], side=10.0)
        m = map_network(t, DEFAULT_RADIO, {0})
        assert m.mapped == {1, 2, 3}
        assert max(m.depth.values()) <= 2

    def test_foreign_relay_needs_merge(self):
        # sensor 2 of network 3 only reaches the AP through sensor 1 of network 0
        t = from_positions([(0.0, 0.0)], [(8.0, 0.0), (16.0, 0.0)], network_ids=[0, 3], side=20.0)
        assert 2 in map_network(t, DEFAULT_RADIO, merge_set_for(1)).unmapped
        merged = map_network(t, DEFAULT_RADIO, merge_set_for(4))
        assert 2 in merged.mapped
        assert merged.path_to_root(2) == [2, 1, 0]

    def test_cut_off_nodes_stay_unmapped(self):
        sensors = [(5.0 + i, 5.0) for i in range(3)] + [(90.0, 90.0), (92.0, 90.0), (95.0, 95.0)]
        t = from_positions([(0.0, 0.0)], sensors, network_ids=[2] * 6, side=100.0)
        m = map_network(t, DEFAULT_RADIO, {2})
        assert m.unmapped == {4, 5, 6}

    def test_empty_merge_set_rejected(self):
        with pytest.raises(InvalidParameterError):
            map_network(five_node_tree(), DEFAULT_RADIO, set())

    def test_bfs_tree_shape(self):
        m = map_network(five_node_tree(), DEFAULT_RADIO, {0})
        assert m.parent == {1: 0, 2: 0, 3: 1, 4: 1}
        assert m.children[1] == [3, 4]
        assert m.subtree(0) == [1, 3, 4, 2]

    def test_unmapped_path_raises(self):
        t = from_positions([(0.0, 0.0)], [(50.0, 50.0)], side=60.0)
        with pytest.raises(NoRouteError):
            map_network(t, DEFAULT_RADIO, {0}).path_to_root(1)

    def test_no_gateway_gateway_links(self):
        t = place_random(20, 4, 30, seed=1, scenario=Scenario.MULTICAST)
        adj = permitted_links(t, DEFAULT_RADIO, {0, 1, 2, 3})
        gws = [g.id for g in t.gateways]
        assert not adj[np.ix_(gws, gws)].any()


class TestDefFt:
    def test_leaf_has_upstream_and_drop(self):
        tab = def_ft(map_network(five_node_tree(), DEFAULT_RADIO, {0}), 3)
        assert len(tab) == 2
        up, miss = tab.entries
        assert up.action == Forward(1) and up.header.dst == 0
        assert miss.action == DROP and miss.header == FlowHeader()

    def test_root_child_with_two_children(self):
        tab = def_ft(map_network(five_node_tree(), DEFAULT_RADIO, {0}), 1)
        assert len(tab) == 4
        assert chk_ft(tab, data(0, 3)) == Forward(3)
        assert chk_ft(tab, data(0, 4)) == Forward(4)
        assert chk_ft(tab, data(3, 0)) == Forward(0)
        assert chk_ft(tab, data(3, 2)) == DROP

    def test_gateway_has_no_upstream(self):
        tab = def_ft(map_network(five_node_tree(), DEFAULT_RADIO, {0}), 0)
        assert len(tab) == 5
        assert all(e.action != Forward(0) for e in tab.entries)

    def test_unmapped_raises(self):
        t = from_positions([(0.0, 0.0)], [(50.0, 50.0)], side=60.0)
        with pytest.raises(NoRouteError):
            def_ft(map_network(t, DEFAULT_RADIO, {0}), 1)

    def test_counters_start_at_zero(self):
        for tab in install_tables(map_network(five_node_tree(), DEFAULT_RADIO, {0})).values():
            assert all(e.counters.control_pkts == e.counters.data_pkts == 0 for e in tab.entries)

    def test_dump_golden(self):
        cmap = map_network(five_node_tree(), DEFAULT_RADIO, {0})
        tab = def_ft(cmap, 1)
        chk_ft(tab, data(3, 0))
        chk_ft(tab, data(4, 0))
        chk_ft(tab, Packet(PacketKind.CONTROL, 0, 4, 20))
        chk_ft(tab, data(3, 2))
        assert dump_table(tab) == (GOLDEN / "flow_table_node1.txt").read_text()


def _walk(tables, pkt, limit=64):
    node = pkt.src
    for _ in range(limit):
        if node == pkt.dst:
            return pkt.hop_trace
        action = chk_ft(tables[node], pkt)
        if isinstance(action, Drop):
            return None
        node = action.next_hop
        assert node not in pkt.hop_trace
        pkt.hop_trace.append(node)
    raise AssertionError("no convergence")


topologies = st.builds(
    lambda n, g, seed, side: place_random(n, g, side, seed, Scenario.MULTICAST if g > 1 else Scenario.INTER_NETWORK),
    st.integers(0, 25),
    st.integers(1, 4),
    st.integers(0, 2**32),
    st.sampled_from([20.0, 35.0, 50.0]),
)


class TestProperties:
    @given(topologies, st.integers(1, 4))
    def test_tree_edges_are_links_and_parents_unique(self, topo, group):
        m = map_network(topo, DEFAULT_RADIO, merge_set_for(group))
        links = link_matrix(DEFAULT_RADIO, topo)
        for child, parent in m.parent.items():
            assert links[child, parent]
            assert m.depth[child] == m.depth[parent] + 1
        seen = [c for kids in m.children.values() for c in kids]
        assert len(seen) == len(set(seen)) == len(m.parent)

    @given(topologies, st.integers(1, 4), st.integers(1, 4))
    def test_merge_monotone(self, topo, ga, gb):
        a = map_network(topo, DEFAULT_RADIO, merge_set_for(ga))
        b = map_network(topo, DEFAULT_RADIO, {gb - 1})
        merged = merge_networks(a, b)
        assert merged.mapped >= a.mapped | b.mapped

    @given(topologies)
    def test_merge_with_self_is_identity(self, topo):
        a = map_network(topo, DEFAULT_RADIO, {0})
        assert merge_networks(a, a).mapped == a.mapped

    @given(topologies, st.integers(1, 4))
    def test_tables_route_both_ways(self, topo, group):
        m = map_network(topo, DEFAULT_RADIO, merge_set_for(group))
        tables = install_tables(m)
        for s in m.mapped:
            net = topo[s].network_id
            up = _walk(tables, data(s, m.root[s], net))
            assert up == m.path_to_root(s)
            down = _walk(tables, data(m.root[s], s, net))
            assert down == list(reversed(m.path_to_root(s)))


def test_merge_requires_same_topology():
    a = map_network(place_random(5, 1, 20, seed=1), DEFAULT_RADIO, {0})
    b = map_network(place_random(5, 1, 20, seed=2), DEFAULT_RADIO, {0})
    with pytest.raises(InvalidParameterError):
        merge_networks(a, b)


def test_all_merge_sets_count():
    assert len(all_merge_sets(4)) == 15
    assert merge_set_for(3) == {0, 1, 2}
