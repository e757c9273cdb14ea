"""Simplified on-demand baselines over the same radio/MAC substrate.

Both baselines discover routes by flooding a route request, get a reply
from the sink, and then unicast data with bounded retransmission. The
AODV-like variant keeps hop-by-hop routing state (next hop toward the
sink, reverse paths toward requesters); the DSR-like variant carries full
source routes in the reply and in every data packet, and lets nodes on
the reply path snoop routes into a cache. Sequence-number subtleties,
HELLO beacons and route-error propagation are deliberately absent: the
baselines only need to produce realistic control traffic, hop counts and
retransmissions for comparison.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

from .hyb import ASLEEP, CONGESTION, NO_ROUTE
from . import engine as eng
from .engine import (BS, BUSY, COLLISION, DATA, NO_RX, OK, RREP, RREQ,
                     PacketCtx)


@dataclass
class AodvNodeState:
    route: Optional[Tuple[object, int]] = None   # (next hop, transmissions to sink)
    pending: List[PacketCtx] = field(default_factory=list)
    disc_active: bool = False
    disc_attempts: int = 0
    rreq_counter: int = 0
    seen: Set[Tuple[int, int]] = field(default_factory=set)
    reverse: Dict[int, object] = field(default_factory=dict)


class _BaseRunner:
    """Shared discovery/retransmission scaffolding for both baselines."""

    def __init__(self, engine_: "eng.Engine"):
        self.e = engine_
        self.sink_seen: Set[Tuple[int, int]] = set()

    def configure(self, now: float) -> None:
        pass  # on-demand protocols have no configuration phase

    def on_node_died(self, node, now) -> None:
        pass

    def on_delivered(self, ctx: PacketCtx, now: float) -> None:
        pass  # no residual reporting in the baselines

    # ---------------------------------------------------------------- data

    def _data_result(self, node, ctx, trans, outcome, now) -> None:
        e = self.e
        if outcome == OK:
            if trans.rx == BS:
                e.deliver(ctx, node, now)
            else:
                self.on_data_received(trans.rx, ctx, now)
            return
        # BUSY / COLLISION / NO_RX: bounded retransmission with backoff
        ctx.retry_count += 1
        if ctx.retry_count <= e.sc.data_retries:
            delay = e.sc.retry_backoff * (2 ** (ctx.retry_count - 1))
            retry = now + delay + e.jitter(1e-3)
            e.schedule(retry, lambda: self._send_data(node, ctx, retry))
        else:
            self._give_up(node, ctx, now)

    def _transmit_data(self, node, rx, ctx, now) -> None:
        e = self.e
        if e.nodes[node].asleep:
            e.drop(ctx, ASLEEP, node, now)
            return
        own = e.transmitting(node)
        if own is not None:
            retry = own.end + eng.RETRY_GAP + e.jitter(1e-3)
            e.schedule(retry, lambda: self._transmit_data(node, rx, ctx, retry))
            return
        e.send_unicast(DATA, node, rx, ctx.packet.payload_bits, now,
                       event_id=ctx.packet.event_id, pkt=ctx,
                       on_result=lambda trans, outcome, t,
                       node=node, ctx=ctx: self._data_result(node, ctx, trans, outcome, t))

    # ------------------------------------------------------------- control

    def _send_ctrl_unicast(self, kind, frm, to, now, payload, on_result) -> None:
        """Unicast a control frame, deferring while ``frm`` holds the channel."""
        e = self.e
        if frm != BS and e.nodes[frm].asleep:
            return
        own = e.transmitting(frm)
        if own is not None:
            retry = own.end + eng.RETRY_GAP + e.jitter(1e-3)
            e.schedule(retry, lambda: self._send_ctrl_unicast(
                kind, frm, to, retry, payload, on_result))
            return
        e.send_unicast(kind, frm, to, e.sc.control_bits, now,
                       payload=payload, on_result=on_result)

    # subclass hooks
    def _send_data(self, node, ctx, now) -> None:
        raise NotImplementedError

    def _give_up(self, node, ctx, now) -> None:
        raise NotImplementedError

    def on_data_received(self, node, ctx, now) -> None:
        raise NotImplementedError


class AodvRunner(_BaseRunner):
    """Hop-by-hop on-demand routing with route request flooding."""

    def __init__(self, engine_: "eng.Engine"):
        super().__init__(engine_)
        self.states: Dict[int, AodvNodeState] = {
            n: AodvNodeState() for n in engine_.nodes}

    # ---------------------------------------------------------------- origin

    def on_sense(self, node, event_id: str, now: float) -> None:
        e = self.e
        ctx = e.new_packet(event_id, node, now)
        if node == BS:
            e.deliver(ctx, node, now)
            return
        if e.nodes[node].asleep:
            e.drop(ctx, ASLEEP, node, now)
            return
        st = self.states[node]
        if st.route is not None:
            self._send_data(node, ctx, now)
        else:
            st.pending.append(ctx)
            self._ensure_discovery(node, now)

    def _send_data(self, node, ctx, now) -> None:
        st = self.states[node]
        if st.route is None:
            if node == ctx.packet.origin:
                st.pending.append(ctx)
                self._ensure_discovery(node, now)
            else:
                self.e.drop(ctx, NO_ROUTE, node, now)
            return
        self._transmit_data(node, st.route[0], ctx, now)

    def _give_up(self, node, ctx, now) -> None:
        self.states[node].route = None  # the link is deemed broken
        self.e.drop(ctx, CONGESTION, node, now)

    def on_data_received(self, node, ctx, now) -> None:
        if node in ctx.packet.visited:
            self.e.drop(ctx, NO_ROUTE, node, now)  # routing loop guard
            return
        ctx.packet.visited.append(node)
        ctx.retry_count = 0
        self._send_data(node, ctx, now)

    # ------------------------------------------------------------ discovery

    def _ensure_discovery(self, node, now) -> None:
        st = self.states[node]
        if st.disc_active:
            return
        st.disc_active = True
        self._flood(node, now)

    def _flood(self, node, now) -> None:
        e = self.e
        st = self.states[node]
        st.disc_attempts += 1
        st.rreq_counter += 1
        rreq_id = st.rreq_counter
        st.seen.add((node, rreq_id))
        e.send_broadcast(RREQ, node, e.sc.control_bits, now,
                         payload={"origin": node, "rreq_id": rreq_id},
                         event_id=f"rq{node}.{rreq_id}")
        deadline = now + e.sc.discovery_timeout
        e.schedule(deadline, lambda: self._discovery_timeout(node, deadline))

    def _discovery_timeout(self, node, now) -> None:
        st = self.states[node]
        if not st.disc_active:
            return
        if st.route is not None:
            self._route_available(node, now)
            return
        if st.disc_attempts <= self.e.sc.discovery_retries:
            self._flood(node, now)
            return
        st.disc_active = False
        st.disc_attempts = 0
        for ctx in st.pending:
            self.e.drop(ctx, NO_ROUTE, node, now)
        st.pending = []

    def _route_available(self, node, now) -> None:
        """Flush queued packets once a route to the sink exists."""
        st = self.states[node]
        if st.route is None:
            return
        st.disc_active = False
        st.disc_attempts = 0
        pending, st.pending = st.pending, []
        for ctx in pending:
            self._send_data(node, ctx, now)

    def on_broadcast_received(self, node, trans, now) -> None:
        origin = trans.payload["origin"]
        rreq_id = trans.payload["rreq_id"]
        key = (origin, rreq_id)
        if node == BS:
            if key in self.sink_seen:
                return
            self.sink_seen.add(key)
            self._send_rrep(BS, trans.tx, origin, 0, now)
            return
        st = self.states[node]
        if key in st.seen:
            return
        st.seen.add(key)
        st.reverse[origin] = trans.tx
        retry = now + self.e.jitter(5e-3)
        self.e.schedule(retry, lambda: self.e.send_broadcast(
            RREQ, node, self.e.sc.control_bits, retry, payload=trans.payload,
            event_id=f"rq{origin}.{rreq_id}"))

    def _send_rrep(self, frm, to, origin, route_len, now) -> None:
        self._send_ctrl_unicast(
            RREP, frm, to, now,
            payload={"origin": origin, "route_len": route_len},
            on_result=lambda trans, outcome, t: self._rrep_result(trans, outcome, t))

    def _rrep_result(self, trans, outcome, now) -> None:
        if outcome != OK:
            return  # a lost reply is recovered by the discovery retry
        node = trans.rx
        origin = trans.payload["origin"]
        st = self.states[node]
        my_len = trans.payload["route_len"] + 1
        if st.route is None or my_len < st.route[1]:
            st.route = (trans.tx, my_len)
        self._route_available(node, now)
        if node != origin:
            nxt = st.reverse.get(origin)
            if nxt is not None:
                self._send_rrep(node, nxt, origin, my_len, now)


@dataclass
class DsrNodeState:
    cache: List[Tuple[object, ...]] = field(default_factory=list)  # path to sink
    pending: List[PacketCtx] = field(default_factory=list)
    disc_active: bool = False
    disc_attempts: int = 0
    rreq_counter: int = 0
    seen: Set[Tuple[int, int]] = field(default_factory=set)


class DsrRunner(_BaseRunner):
    """Source routing: replies carry the full path, data carries it too."""

    def __init__(self, engine_: "eng.Engine"):
        super().__init__(engine_)
        self.states: Dict[int, DsrNodeState] = {
            n: DsrNodeState() for n in engine_.nodes}

    # ---------------------------------------------------------------- cache

    def _best_route(self, node) -> Optional[Tuple[object, ...]]:
        best = None
        for route in self.states[node].cache:
            if best is None or len(route) < len(best):
                best = route
        return best

    def _cache(self, node, route: Tuple[object, ...]) -> None:
        st = self.states[node]
        if route not in st.cache:
            st.cache.append(route)

    def _purge(self, node, bad) -> None:
        st = self.states[node]
        st.cache = [r for r in st.cache if bad not in r]

    # ---------------------------------------------------------------- origin

    def on_sense(self, node, event_id: str, now: float) -> None:
        e = self.e
        ctx = e.new_packet(event_id, node, now)
        if node == BS:
            e.deliver(ctx, node, now)
            return
        if e.nodes[node].asleep:
            e.drop(ctx, ASLEEP, node, now)
            return
        route = self._best_route(node)
        if route is not None:
            ctx.route = [node] + list(route[1:])
            ctx.route_idx = 0
            self._send_data(node, ctx, now)
        else:
            st = self.states[node]
            st.pending.append(ctx)
            self._ensure_discovery(node, now)

    def _send_data(self, node, ctx, now) -> None:
        nxt = ctx.route[ctx.route_idx + 1]
        self._transmit_data(node, nxt, ctx, now)

    def _give_up(self, node, ctx, now) -> None:
        bad = ctx.route[ctx.route_idx + 1]
        self._purge(node, bad)
        self.e.drop(ctx, CONGESTION, node, now)

    def on_data_received(self, node, ctx, now) -> None:
        if node in ctx.packet.visited:
            self.e.drop(ctx, NO_ROUTE, node, now)
            return
        ctx.packet.visited.append(node)
        ctx.retry_count = 0
        ctx.route_idx += 1
        # forwarding is stateless; snoop the tail of the carried route
        self._cache(node, tuple(ctx.route[ctx.route_idx:]))
        self._send_data(node, ctx, now)

    # ------------------------------------------------------------ discovery

    def _ensure_discovery(self, node, now) -> None:
        st = self.states[node]
        if st.disc_active:
            return
        st.disc_active = True
        self._flood(node, now)

    def _flood(self, node, now) -> None:
        e = self.e
        st = self.states[node]
        st.disc_attempts += 1
        st.rreq_counter += 1
        rreq_id = st.rreq_counter
        st.seen.add((node, rreq_id))
        e.send_broadcast(RREQ, node, e.sc.control_bits, now,
                         payload={"origin": node, "rreq_id": rreq_id,
                                  "record": (node,)},
                         event_id=f"rq{node}.{rreq_id}")
        deadline = now + e.sc.discovery_timeout
        e.schedule(deadline, lambda: self._discovery_timeout(node, deadline))

    def _discovery_timeout(self, node, now) -> None:
        st = self.states[node]
        if not st.disc_active:
            return
        if self._best_route(node) is not None:
            self._route_available(node, now)
            return
        if st.disc_attempts <= self.e.sc.discovery_retries:
            self._flood(node, now)
            return
        st.disc_active = False
        st.disc_attempts = 0
        for ctx in st.pending:
            self.e.drop(ctx, NO_ROUTE, node, now)
        st.pending = []

    def _route_available(self, node, now) -> None:
        """Flush queued packets along the shortest cached route."""
        st = self.states[node]
        route = self._best_route(node)
        if route is None:
            return
        st.disc_active = False
        st.disc_attempts = 0
        pending, st.pending = st.pending, []
        for ctx in pending:
            ctx.route = list(route)
            ctx.route_idx = 0
            self._send_data(node, ctx, now)

    def on_broadcast_received(self, node, trans, now) -> None:
        origin = trans.payload["origin"]
        rreq_id = trans.payload["rreq_id"]
        record = trans.payload["record"]
        key = (origin, rreq_id)
        if node == BS:
            if key in self.sink_seen:
                return
            self.sink_seen.add(key)
            route = tuple(record) + (BS,)
            self._send_rrep(BS, record[-1], route, now)
            return
        st = self.states[node]
        if key in st.seen or node in record:
            return
        st.seen.add(key)
        payload = {"origin": origin, "rreq_id": rreq_id,
                   "record": tuple(record) + (node,)}
        retry = now + self.e.jitter(5e-3)
        self.e.schedule(retry, lambda: self.e.send_broadcast(
            RREQ, node, self.e.sc.control_bits, retry, payload=payload,
            event_id=f"rq{origin}.{rreq_id}"))

    def _send_rrep(self, frm, to, route: Tuple[object, ...], now) -> None:
        self._send_ctrl_unicast(
            RREP, frm, to, now, payload={"route": route},
            on_result=lambda trans, outcome, t: self._rrep_result(trans, outcome, t))

    def _rrep_result(self, trans, outcome, now) -> None:
        if outcome != OK:
            return
        node = trans.rx
        route = trans.payload["route"]
        idx = route.index(node)
        self._cache(node, route[idx:])
        self._route_available(node, now)
        if idx > 0:
            self._send_rrep(node, route[idx - 1], route, now)
