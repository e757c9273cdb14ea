"""Unit tests for the hybrid protocol's per-node state machine."""

import pytest

from hybsim.hyb import (ASLEEP, CONGESTION, DROP, DUPLICATE, FORWARD,
                        NO_ROUTE, SEND_DIRECT, DataPacket, DedupBuffer,
                        HybContext, HybNodeState, best_neighbour, note_forward,
                        on_busy_channel, on_receive, on_sense,
                        single_hop_feasible)
from hybsim.radio import EnergyCoefficients, EnergyState, RadioParams, tx_energy
from hybsim.topology import DIRECT, ISOLATED, Location

BS = Location(0.0, 0.0)
# a west-east line: 1 and 2 are relays between 3 and the base station
POINTS = {1: Location(300.0, 0.0), 2: Location(320.0, 40.0),
          3: Location(600.0, 0.0), 4: Location(900.0, 0.0)}


def make_ctx(dead=(), wait_t=0.1):
    return HybContext(
        bs_location=BS, radio=RadioParams(),
        energy_coeff=EnergyCoefficients(),
        location_of=POINTS.__getitem__,
        alive=lambda v: v not in dead, wait_t=wait_t)


def make_state(node, row, residual=10.0):
    st = HybNodeState(id=node, location=POINTS[node],
                      energy=EnergyState(residual=residual, initial=10.0))
    st.set_row(row)
    return st


def make_packet(origin, event_id="ev0", created_at=0.0):
    return DataPacket(event_id=event_id, origin=origin, created_at=created_at)


class TestDedupBuffer:
    def test_fresh_id_absent(self):
        buf = DedupBuffer(ttl=5.0)
        assert not buf.contains("ev0", 0.0)

    def test_recorded_id_present_until_ttl(self):
        buf = DedupBuffer(ttl=5.0)
        buf.record("ev0", 1.0)
        assert buf.contains("ev0", 5.9)
        assert buf.contains("ev0", 6.0)
        assert not buf.contains("ev0", 6.1)

    def test_rerecord_extends(self):
        buf = DedupBuffer(ttl=5.0)
        buf.record("ev0", 0.0)
        buf.record("ev0", 4.0)
        assert buf.contains("ev0", 8.0)


class TestSingleHopFeasible:
    def test_in_range_with_energy(self):
        assert single_hop_feasible(make_state(1, DIRECT), make_ctx())

    def test_out_of_range(self):
        assert not single_hop_feasible(make_state(3, (1, 2)), make_ctx())

    def test_battery_must_cover_the_send(self):
        ctx = make_ctx()
        cost = tx_energy(ctx.energy_coeff, 4096, POINTS[1].dist(BS))
        thr = 1e-6
        rich = HybNodeState(id=1, location=POINTS[1],
                            energy=EnergyState(residual=thr + cost,
                                               threshold=thr, initial=10.0))
        poor = HybNodeState(id=1, location=POINTS[1],
                            energy=EnergyState(residual=thr + cost * 0.99,
                                               threshold=thr, initial=10.0))
        assert single_hop_feasible(rich, ctx)
        assert not single_hop_feasible(poor, ctx)


class TestBestNeighbour:
    def test_least_used_wins(self):
        st = make_state(3, (1, 2))
        st.use_count[1] = 2
        assert best_neighbour(st, make_packet(3), make_ctx()) == 2

    def test_tie_broken_by_row_order(self):
        st = make_state(3, (1, 2))
        assert best_neighbour(st, make_packet(3), make_ctx()) == 1

    def test_visited_skipped(self):
        st = make_state(3, (1, 2))
        pkt = make_packet(3)
        pkt.visited.append(1)
        assert best_neighbour(st, pkt, make_ctx()) == 2

    def test_excluded_skipped(self):
        st = make_state(3, (1, 2))
        assert best_neighbour(st, make_packet(3), make_ctx(), exclude={1}) == 2

    def test_dead_skipped(self):
        st = make_state(3, (1, 2))
        assert best_neighbour(st, make_packet(3), make_ctx(dead=(1,))) == 2

    def test_out_of_link_range_skipped(self):
        # 4 -> 1 is 600 m, far beyond the radio range
        st = make_state(4, (1,))
        assert best_neighbour(st, make_packet(4), make_ctx()) is None

    def test_marker_rows_have_no_neighbour(self):
        assert best_neighbour(make_state(3, DIRECT), make_packet(3),
                              make_ctx()) is None
        assert best_neighbour(make_state(3, ISOLATED), make_packet(3),
                              make_ctx()) is None


class TestOnSense:
    def test_direct_when_feasible(self):
        action = on_sense(make_state(1, DIRECT), make_packet(1), make_ctx(), 0.0)
        assert action.kind == SEND_DIRECT

    def test_forward_when_out_of_bs_range(self):
        action = on_sense(make_state(3, (1, 2)), make_packet(3), make_ctx(), 0.0)
        assert action.kind == FORWARD
        assert action.neighbour == 1

    def test_asleep_gate(self):
        st = make_state(1, DIRECT, residual=0.0)
        action = on_sense(st, make_packet(1), make_ctx(), 0.0)
        assert (action.kind, action.reason) == (DROP, ASLEEP)

    def test_duplicate_within_ttl(self):
        st = make_state(1, DIRECT)
        assert on_sense(st, make_packet(1), make_ctx(), 0.0).kind == SEND_DIRECT
        dup = on_sense(st, make_packet(1), make_ctx(), 3.0)
        assert (dup.kind, dup.reason) == (DROP, DUPLICATE)

    def test_same_event_after_ttl_is_fresh(self):
        st = make_state(1, DIRECT)
        on_sense(st, make_packet(1), make_ctx(), 0.0)
        assert on_sense(st, make_packet(1), make_ctx(), 10.0).kind == SEND_DIRECT

    def test_no_route(self):
        action = on_sense(make_state(3, ISOLATED), make_packet(3),
                          make_ctx(), 0.0)
        assert (action.kind, action.reason) == (DROP, NO_ROUTE)


class TestOnReceive:
    def test_appends_self_to_path(self):
        st = make_state(1, DIRECT)
        pkt = make_packet(3)
        action = on_receive(st, pkt, make_ctx(), 0.0)
        assert action.kind == SEND_DIRECT
        assert pkt.visited == [3, 1]
        assert pkt.hops == 1

    def test_duplicate_does_not_extend_path(self):
        st = make_state(1, DIRECT)
        st.dedup.record("ev0", 0.0)
        pkt = make_packet(3)
        action = on_receive(st, pkt, make_ctx(), 1.0)
        assert (action.kind, action.reason) == (DROP, DUPLICATE)
        assert pkt.visited == [3]


class TestOnBusyChannel:
    def test_moves_to_next_candidate(self):
        st = make_state(3, (1, 2))
        action = on_busy_channel(st, make_packet(3), make_ctx(), {1}, 0.01)
        assert action.kind == FORWARD
        assert action.neighbour == 2

    def test_congestion_after_wait_budget(self):
        st = make_state(3, (1, 2))
        pkt = make_packet(3, created_at=0.0)
        action = on_busy_channel(st, pkt, make_ctx(wait_t=0.1), {1}, 0.1)
        assert (action.kind, action.reason) == (DROP, CONGESTION)

    def test_no_route_when_candidates_exhausted(self):
        st = make_state(3, (1, 2))
        action = on_busy_channel(st, make_packet(3), make_ctx(), {1, 2}, 0.01)
        assert (action.kind, action.reason) == (DROP, NO_ROUTE)


class TestUseCount:
    def test_note_forward_increments(self):
        st = make_state(3, (1, 2))
        note_forward(st, 1)
        note_forward(st, 1)
        note_forward(st, 2)
        assert st.use_count == {1: 2, 2: 1}

    def test_set_row_keeps_counts_for_surviving_entries(self):
        st = make_state(3, (1, 2))
        note_forward(st, 1)
        st.set_row((1,))
        assert st.use_count == {1: 1}

    def test_alternation_balances_load(self):
        st = make_state(3, (1, 2))
        ctx = make_ctx()
        for k in range(6):
            pkt = make_packet(3, event_id=f"ev{k}", created_at=float(k))
            action = on_sense(st, pkt, ctx, float(k))
            assert action.kind == FORWARD
            note_forward(st, action.neighbour)
        assert st.use_count == {1: 3, 2: 3}


class TestDataPacket:
    def test_origin_seeds_path(self):
        pkt = make_packet(3)
        assert pkt.visited == [3]
        assert pkt.hops == 0
