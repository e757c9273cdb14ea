"""Route discovery and data forwarding tests for the two baselines."""

import pytest

from hybsim.engine import BS, Engine
from hybsim.metrics import collect
from hybsim.radio import deduct
from hybsim.scenario import Scenario

from test_engine import write_points


def make_engine(tmp_path, points, protocol, bs=(0.0, 0.0), **kw):
    sc = Scenario(placement=write_points(tmp_path, points),
                  node_count=len(points), bs_location=bs,
                  protocol=protocol, **kw)
    return Engine(sc)


def lines(engine, kind, outcome=None):
    out = []
    for raw in engine.log_lines:
        parts = raw.split()
        if parts[1] == kind and (outcome is None or parts[5] == outcome):
            out.append(parts)
    return out


# 0 at 600 m needs 1 at 300 m to relay toward the sink at the origin
LINE2 = {0: (600.0, 0.0), 1: (300.0, 0.0)}
LINE3 = {0: (900.0, 0.0), 1: (600.0, 0.0), 2: (300.0, 0.0)}


@pytest.mark.parametrize("protocol", ["aodv", "dsr"])
class TestDiscoveryAndDelivery:
    def test_two_hop_delivery(self, tmp_path, protocol):
        e = make_engine(tmp_path, LINE2, protocol)
        e.protocol.on_sense(0, "ev0", 0.0)
        e.drain()
        assert e.delivered == 1
        assert e.delivered_paths == [("ev0", [0, 1])]
        assert lines(e, "DELIVER")[0][5] == "hops=1"

    def test_flood_suppression(self, tmp_path, protocol):
        # every node rebroadcasts a given route request at most once
        e = make_engine(tmp_path, LINE3, protocol)
        e.protocol.on_sense(0, "ev0", 0.0)
        e.drain()
        sent = lines(e, "RREQ", "SENT")
        pairs = [(p[2], p[4]) for p in sent]
        assert len(pairs) == len(set(pairs))
        assert {p[2] for p in sent if p[4] == "rq0.1"} == {"0", "1", "2"}

    def test_route_reused_without_new_flood(self, tmp_path, protocol):
        e = make_engine(tmp_path, LINE2, protocol)
        e.protocol.on_sense(0, "ev0", 0.0)
        e.drain()
        floods = len(lines(e, "RREQ", "SENT"))
        e.protocol.on_sense(0, "ev1", e.now + 1.0)
        e.drain()
        assert len(lines(e, "RREQ", "SENT")) == floods
        assert e.delivered == 2

    def test_unreachable_origin_drops_no_route(self, tmp_path, protocol):
        e = make_engine(tmp_path, {0: (600.0, 0.0)}, protocol)
        e.protocol.on_sense(0, "ev0", 0.0)
        e.drain()
        assert e.dropped["NO_ROUTE"] == 1
        # initial flood plus the configured number of retries
        assert len(lines(e, "RREQ", "SENT")) == 1 + e.sc.discovery_retries

    def test_dead_next_hop_exhausts_retries(self, tmp_path, protocol):
        e = make_engine(tmp_path, LINE2, protocol)
        e.protocol.on_sense(0, "ev0", 0.0)
        e.drain()
        assert e.delivered == 1
        e.nodes[1].energy = deduct(e.nodes[1].energy, 100.0)
        e.protocol.on_sense(0, "ev1", e.now + 1.0)
        e.drain()
        assert e.dropped["CONGESTION"] == 1

    def test_loop_free_paths(self, tmp_path, protocol):
        e = make_engine(tmp_path, LINE3, protocol)
        e.protocol.on_sense(0, "ev0", 0.0)
        e.drain()
        for _, path in e.delivered_paths:
            assert len(path) == len(set(path))

    def test_sink_origin_degenerate_delivery(self, tmp_path, protocol):
        e = make_engine(tmp_path, LINE2, protocol)
        e.protocol.on_sense(BS, "ev0", 0.0)
        e.drain()
        assert e.delivered == 1
        assert lines(e, "DELIVER")[0][5] == "hops=0"


class TestAodvState:
    def test_routes_point_toward_sink(self, tmp_path):
        e = make_engine(tmp_path, LINE3, "aodv")
        e.protocol.on_sense(0, "ev0", 0.0)
        e.drain()
        st = e.protocol.states
        assert st[2].route[0] == BS
        assert st[1].route == (2, 2)
        assert st[0].route == (1, 3)

    def test_reverse_routes_recorded(self, tmp_path):
        e = make_engine(tmp_path, LINE3, "aodv")
        e.protocol.on_sense(0, "ev0", 0.0)
        e.drain()
        assert e.protocol.states[1].reverse[0] == 0
        assert e.protocol.states[2].reverse[0] == 1

    def test_give_up_invalidates_route(self, tmp_path):
        e = make_engine(tmp_path, LINE2, "aodv")
        e.protocol.on_sense(0, "ev0", 0.0)
        e.drain()
        assert e.protocol.states[0].route is not None
        e.nodes[1].energy = deduct(e.nodes[1].energy, 100.0)
        e.protocol.on_sense(0, "ev1", e.now + 1.0)
        e.drain()
        assert e.protocol.states[0].route is None


class TestDsrState:
    def test_reply_path_fills_caches(self, tmp_path):
        e = make_engine(tmp_path, LINE3, "dsr")
        e.protocol.on_sense(0, "ev0", 0.0)
        e.drain()
        st = e.protocol.states
        assert (0, 1, 2, BS) in st[0].cache
        assert (1, 2, BS) in st[1].cache
        assert (2, BS) in st[2].cache

    def test_shortest_cached_route_preferred(self, tmp_path):
        e = make_engine(tmp_path, LINE3, "dsr")
        e.protocol._cache(0, (0, 1, 2, BS))
        e.protocol._cache(0, (0, 2, BS))
        assert e.protocol._best_route(0) == (0, 2, BS)

    def test_give_up_purges_routes_through_dead_hop(self, tmp_path):
        e = make_engine(tmp_path, LINE2, "dsr")
        e.protocol.on_sense(0, "ev0", 0.0)
        e.drain()
        assert e.protocol._best_route(0) is not None
        e.nodes[1].energy = deduct(e.nodes[1].energy, 100.0)
        e.protocol.on_sense(0, "ev1", e.now + 1.0)
        e.drain()
        assert e.protocol._best_route(0) is None

    def test_delivered_path_matches_source_route(self, tmp_path):
        e = make_engine(tmp_path, LINE3, "dsr")
        e.protocol.on_sense(0, "ev0", 0.0)
        e.drain()
        assert e.delivered_paths == [("ev0", [0, 1, 2])]


class TestPacketConservation:
    @pytest.mark.parametrize("protocol", ["aodv", "dsr"])
    def test_full_run_accounts_for_every_packet(self, tmp_path, protocol):
        sc = Scenario(protocol=protocol, node_count=30, sim_time=10.0, seed=5)
        e = Engine(sc)
        log = e.run()
        report = collect(log)
        assert report.generated == e.generated
        assert report.delivered + report.dropped_total() == report.generated
