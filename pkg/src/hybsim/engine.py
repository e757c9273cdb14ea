"""Deterministic discrete-event core: clock, channel, traffic, run loop.

The channel abstracts 802.11 DCF to instantaneous request/clear arbitration
plus airtime reservation: a unicast is granted only when its receiver is
idle and hears no ongoing transmission, broadcasts carrier-sense at the
transmitter and collide per receiver. Frames that overlap in time at a
common receiver above the reception threshold are lost and counted as
collisions. Identical (scenario, seed) pairs replay to byte-identical
event logs.
"""

import hashlib
import heapq
import random
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Set, Tuple

from . import hyb, radio, topology
from .hyb import (ASLEEP, CONGESTION, DROP, DUPLICATE, FORWARD, NO_ROUTE,
                  SEND_DIRECT, Action, DataPacket, DedupBuffer, HybContext,
                  HybNodeState)
from .radio import (EnergyState, deduct, frame_airtime, is_alive,
                    link_feasible, received_power, rx_energy, tx_energy)
from .scenario import Scenario, ScenarioError
from .topology import (DIRECT, ISOLATED, Location, LocationTable,
                       NeighbourTable, compute_neighbour_table,
                       parse_location_file, refresh_table)

BS = "BS"          # base station pseudo-id in logs and addressing
BROADCAST = "*"

# frame kinds that appear in the event log and count as signals
DATA = "DATA"
RREQ = "RREQ"
RREP = "RREP"
REPORT = "REPORT"
CONFIG = "CONFIG"
FRAME_KINDS = (DATA, RREQ, RREP, REPORT, CONFIG)
COLL = "COLL"      # per-receiver collision record, not a transmitted frame

# arbitration results
GRANT = "GRANT"
BUSY = "BUSY"
COLLISION = "COLLISION"
NO_RX = "NO_RX"
OK = "OK"
SENT = "SENT"

RETRY_GAP = 1.6e-4  # s between successive channel grabs for one packet


def substream(seed: int, name: str) -> random.Random:
    """Independent deterministic RNG stream derived from the master seed."""
    digest = hashlib.sha256(f"{seed}:{name}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def place_nodes(scenario: Scenario, rng: Optional[random.Random] = None) -> LocationTable:
    """Node placement: location file when configured, else seeded uniform."""
    if scenario.placement != "uniform":
        with open(scenario.placement, "r", encoding="utf-8") as fh:
            locs = parse_location_file(fh.read())
        if not locs.entries:
            raise ScenarioError("location file holds no nodes")
    else:
        rng = rng or substream(scenario.seed, "placement")
        w, h = scenario.topology_size
        locs = LocationTable()
        for i in range(scenario.node_count):
            locs.entries[i] = Location(rng.uniform(0, w), rng.uniform(0, h))
    locs.base_station = scenario.bs()
    return locs


def generate_events(scenario: Scenario,
                    rng: Optional[random.Random] = None) -> List[Tuple[float, str, Location]]:
    """CBR event stream: one environmental event per 1/rate seconds at a
    uniformly random point; every node within sensing radius senses it."""
    rng = rng or substream(scenario.seed, "traffic")
    w, h = scenario.topology_size
    out = []
    count = int(scenario.sim_time * scenario.packet_rate)
    for k in range(count):
        t = k / scenario.packet_rate
        out.append((t, f"ev{k}", Location(rng.uniform(0, w), rng.uniform(0, h))))
    return out


@dataclass
class Transmission:
    kind: str
    tx: object                 # node id or BS
    rx: object                 # node id, BS or BROADCAST
    bits: int
    start: float
    end: float
    event_id: str = "-"
    pkt: Optional["PacketCtx"] = None
    payload: object = None
    cancelled: bool = False
    on_result: Optional[Callable] = None


@dataclass
class PacketCtx:
    """One originated packet intent and its bookkeeping."""

    pid: int
    packet: DataPacket
    terminal: bool = False
    attempted: Set[int] = field(default_factory=set)  # hyb: tried this hop
    tried_direct: bool = False
    retry_count: int = 0                              # baselines: per-hop retries
    route: Optional[List[object]] = None              # dsr source route
    route_idx: int = 0


@dataclass
class NodeRec:
    id: int
    location: Location
    energy: EnergyState
    charges: List[float] = field(default_factory=list)
    death_time: Optional[float] = None

    @property
    def asleep(self) -> bool:
        return not is_alive(self.energy)


class Engine:
    """Single run of one scenario under one protocol."""

    def __init__(self, scenario: Scenario):
        self.sc = scenario
        self.radio = scenario.radio_params()
        self.coeff = scenario.energy_coefficients()
        self.region = scenario.region_params()
        self.locs = place_nodes(scenario)
        self.bs_loc = self.locs.base_station
        self.rng_jitter = substream(scenario.seed, "jitter")

        self.nodes: Dict[int, NodeRec] = {}
        for i in sorted(self.locs.entries):
            self.nodes[i] = NodeRec(
                id=i, location=self.locs.entries[i],
                energy=EnergyState(residual=scenario.initial_energy,
                                   threshold=scenario.energy_threshold,
                                   initial=scenario.initial_energy))

        # static topology: cache pairwise reachability for the hot paths
        ids = sorted(self.nodes)
        self._in_range: Dict[object, List[int]] = {}
        self._bs_reach: Dict[int, bool] = {}
        for a in ids:
            la = self.nodes[a].location
            self._in_range[a] = [b for b in ids if b != a and link_feasible(
                self.radio, la.dist(self.nodes[b].location))]
            self._bs_reach[a] = link_feasible(self.radio, la.dist(self.bs_loc))
        self._in_range[BS] = [b for b in ids if self._bs_reach[b]]
        self._range_sets = {k: set(v) for k, v in self._in_range.items()}
        air_bits = max(scenario.payload_bits, scenario.control_bits)
        self._max_air = frame_airtime(self.radio, air_bits) + 1e-9

        self.now = 0.0
        self._heap: List[Tuple[float, int, Callable]] = []
        self._seq = 0
        self.log_lines: List[str] = []
        self.active: List[Transmission] = []
        self.recent: List[Transmission] = []

        self.generated = 0
        self.delivered = 0
        self.dropped: Dict[str, int] = {ASLEEP: 0, DUPLICATE: 0,
                                        NO_ROUTE: 0, CONGESTION: 0}
        self._pid = 0
        self.delivered_paths: List[Tuple[str, List[int]]] = []

        # base-station knowledge, fed by residual reports
        self.bs_known_residual: Dict[int, float] = {
            i: scenario.initial_energy for i in self.nodes}
        self.bs_dead: Set[int] = set()
        self.neighbour_table: Optional[NeighbourTable] = None

        if scenario.protocol == "hyb":
            self.protocol = HybRunner(self)
        else:
            from .baselines import AodvRunner, DsrRunner
            cls = AodvRunner if scenario.protocol == "aodv" else DsrRunner
            self.protocol = cls(self)

    # ------------------------------------------------------------------ clock

    def schedule(self, time: float, fn: Callable) -> None:
        if time < self.now - 1e-12:
            raise RuntimeError(f"event scheduled in the past: {time} < {self.now}")
        heapq.heappush(self._heap, (time, self._seq, fn))
        self._seq += 1

    def jitter(self, scale: float) -> float:
        return self.rng_jitter.uniform(0.0, scale)

    # ------------------------------------------------------------------ energy

    def charge(self, node: object, amount: float) -> None:
        if node == BS:
            return  # the sink is mains powered
        rec = self.nodes[node]
        was_alive = not rec.asleep
        rec.energy = deduct(rec.energy, amount)
        rec.charges.append(amount)
        if was_alive and rec.asleep:
            rec.death_time = self.now
            self.protocol.on_node_died(node, self.now)

    def alive(self, node: object) -> bool:
        if node == BS:
            return True
        return not self.nodes[node].asleep

    def loc(self, node: object) -> Location:
        return self.bs_loc if node == BS else self.nodes[node].location

    def dist(self, a: object, b: object) -> float:
        return self.loc(a).dist(self.loc(b))

    def audible(self, tx: object, at: object) -> bool:
        if at == BS:
            return True if tx == BS else self._bs_reach[tx]
        return at in self._range_sets[tx]

    # ------------------------------------------------------------------ log

    def log(self, time: float, kind: str, tx: object, rx: object,
            event_id: str, outcome: str) -> None:
        self.log_lines.append(
            f"{time:.6f} {kind} {tx} {rx} {event_id} {outcome}")

    # ------------------------------------------------------------------ channel

    def _prune_recent(self) -> None:
        # only transmissions that can still overlap a live frame matter
        horizon = self.now - self._max_air
        if self.recent and self.recent[0].end < horizon:
            self.recent = [t for t in self.recent if t.end >= horizon]

    def transmitting(self, node: object) -> Optional[Transmission]:
        for t in self.active:
            if t.tx == node and not t.cancelled:
                return t
        return None

    def arbitrate(self, tx: object, rx: object, now: float) -> str:
        """Receiver-side channel grab for a unicast starting at ``now``.

        BUSY when the receiver is transmitting or hears an earlier ongoing
        transmission; two same-instant grabs for one receiver are decided
        by received power. COLLISION is never returned here: interference
        between granted frames is resolved at frame end.
        """
        if rx != BS and self.nodes[rx].asleep:
            return NO_RX
        for t in self.active:
            if t.cancelled:
                continue
            if t.tx == rx:
                return BUSY
            if t.start < now and self.audible(t.tx, rx):
                return BUSY
        # same-instant contest on this receiver: higher power wins
        for t in list(self.active):
            if t.cancelled or t.rx != rx or t.start != now:
                continue
            p_old = received_power(self.radio, self.dist(t.tx, rx))
            p_new = received_power(self.radio, self.dist(tx, rx))
            if p_new > p_old:
                self._cancel(t)
            else:
                return BUSY
        return GRANT

    def _cancel(self, trans: Transmission) -> None:
        trans.cancelled = True
        self.active = [t for t in self.active if t is not trans]
        if trans.on_result is not None:
            trans.on_result(trans, BUSY, self.now)

    def _begin(self, trans: Transmission) -> None:
        assert self.transmitting(trans.tx) is None, \
            f"node {trans.tx} already holds the channel"
        self.active.append(trans)
        self.recent.append(trans)
        self.schedule(trans.end, lambda: self._frame_end(trans))

    def send_unicast(self, kind: str, tx: object, rx: object, bits: int,
                     now: float, event_id: str = "-",
                     pkt: Optional[PacketCtx] = None, payload=None,
                     on_result: Optional[Callable] = None) -> str:
        """Arbitrate and, on grant, occupy the channel for the frame airtime.

        ``on_result(trans, outcome, t)`` fires exactly once with GRANT-side
        outcomes OK / COLLISION / NO_RX, or immediately with BUSY / NO_RX
        when arbitration fails.
        """
        verdict = self.arbitrate(tx, rx, now)
        if verdict in (BUSY, NO_RX):
            if on_result is not None:
                on_result(None, verdict, now)
            return verdict
        air = frame_airtime(self.radio, bits)
        trans = Transmission(kind=kind, tx=tx, rx=rx, bits=bits,
                             start=now, end=now + air, event_id=event_id,
                             pkt=pkt, payload=payload, on_result=on_result)
        self._begin(trans)
        return GRANT

    def send_broadcast(self, kind: str, tx: object, bits: int, now: float,
                       payload=None, event_id: str = "-") -> None:
        """Carrier-sense broadcast: defers while the transmitter hears an
        ongoing transmission, then occupies the channel; copies are handed
        to the protocol per receiver at frame end."""
        if tx != BS and self.nodes[tx].asleep:
            return  # the node drained while the frame was pending
        busy_until = None
        for t in self.active:
            if t.cancelled:
                continue
            if t.tx == tx or self.audible(t.tx, tx):
                busy_until = max(busy_until or 0.0, t.end)
        if busy_until is not None:
            retry = busy_until + self.jitter(1e-3)
            self.schedule(retry, lambda: self.send_broadcast(
                kind, tx, bits, retry, payload=payload, event_id=event_id))
            return
        air = frame_airtime(self.radio, bits)
        trans = Transmission(kind=kind, tx=tx, rx=BROADCAST, bits=bits,
                             start=now, end=now + air, event_id=event_id,
                             payload=payload)
        self._begin(trans)

    def send_oob_control(self, kind: str, tx: object, rx: object,
                         now: float, outcome: str = OK) -> None:
        """Zero-airtime control frame (residual reports, configuration).

        Charged and counted as a signal but never contends for the channel.
        """
        bits = self.sc.control_bits
        self.charge(tx, tx_energy(self.coeff, bits, self.dist(tx, rx)))
        if rx != BS and not self.nodes[rx].asleep:
            self.charge(rx, rx_energy(self.coeff, bits))
        self.log(now, kind, tx, rx, "-", outcome)

    def _interfered(self, trans: Transmission, receiver: object) -> bool:
        for g in self.recent:
            if g is trans or g.cancelled:
                continue
            if g.start < trans.end and g.end > trans.start:
                if g.tx == receiver or self.audible(g.tx, receiver):
                    return True
        return False

    def _frame_end(self, trans: Transmission) -> None:
        if trans.cancelled:
            return
        self.active = [t for t in self.active if t is not trans]
        self._prune_recent()
        # transmit cost is charged on completion; a cancelled reservation
        # never put energy on the air
        cost_dist = (self.radio.radio_range if trans.rx == BROADCAST
                     else self.dist(trans.tx, trans.rx))
        self.charge(trans.tx, tx_energy(self.coeff, trans.bits, cost_dist))

        if trans.rx == BROADCAST:
            self.log(trans.start, trans.kind, trans.tx, BROADCAST,
                     trans.event_id, SENT)
            receivers = [n for n in self._in_range[trans.tx]
                         if not self.nodes[n].asleep]
            if self.audible(trans.tx, BS):
                receivers.append(BS)
            for r in receivers:
                if self._interfered(trans, r):
                    self.log(trans.start, COLL, trans.tx, r,
                             trans.event_id, COLLISION)
                    continue
                self.charge(r, rx_energy(self.coeff, trans.bits))
                self.protocol.on_broadcast_received(r, trans, trans.end)
            return

        r = trans.rx
        if r != BS and self.nodes[r].asleep:
            self.log(trans.start, trans.kind, trans.tx, r,
                     trans.event_id, NO_RX)
            if trans.on_result is not None:
                trans.on_result(trans, NO_RX, trans.end)
            return
        if self._interfered(trans, r):
            self.log(trans.start, trans.kind, trans.tx, r,
                     trans.event_id, COLLISION)
            if trans.on_result is not None:
                trans.on_result(trans, COLLISION, trans.end)
            return
        self.log(trans.start, trans.kind, trans.tx, r, trans.event_id, OK)
        self.charge(r, rx_energy(self.coeff, trans.bits))
        if trans.on_result is not None:
            trans.on_result(trans, OK, trans.end)

    # ------------------------------------------------------------------ packets

    def new_packet(self, event_id: str, origin: int, now: float) -> PacketCtx:
        self._pid += 1
        self.generated += 1
        pkt = DataPacket(event_id=event_id, origin=origin,
                         payload_bits=self.sc.payload_bits, created_at=now)
        return PacketCtx(pid=self._pid, packet=pkt)

    def drop(self, ctx: PacketCtx, reason: str, node: object, now: float) -> None:
        assert not ctx.terminal, "packet already resolved"
        ctx.terminal = True
        self.dropped[reason] += 1
        self.log(now, "DROP", node, "-", ctx.packet.event_id, reason)

    def deliver(self, ctx: PacketCtx, last_tx: object, now: float) -> None:
        assert not ctx.terminal, "packet already resolved"
        ctx.terminal = True
        self.delivered += 1
        self.delivered_paths.append((ctx.packet.event_id,
                                     list(ctx.packet.visited)))
        self.log(now, "DELIVER", last_tx, BS, ctx.packet.event_id,
                 f"hops={ctx.packet.hops}")
        self.protocol.on_delivered(ctx, now)

    # ------------------------------------------------------------------ run

    def run(self) -> str:
        """Execute the configured run and return the event log text."""
        self.protocol.configure(0.0)
        events = generate_events(self.sc)
        for t, event_id, where in events:
            sensors = [n for n in sorted(self.nodes)
                       if self.nodes[n].location.dist(where) <= self.sc.sensing_radius]
            for n in sensors:
                jit = self.jitter(1e-3)
                self.schedule(t + jit, self._make_sense(n, event_id))
        self.drain()
        return "".join(line + "\n" for line in self.log_lines)

    def drain(self) -> None:
        """Pop and execute queued events until the heap is empty."""
        while self._heap:
            time, _, fn = heapq.heappop(self._heap)
            if time < self.now - 1e-12:
                raise RuntimeError("queue time went backwards")
            self.now = max(self.now, time)
            fn()

    def _make_sense(self, node: int, event_id: str) -> Callable:
        return lambda: self.protocol.on_sense(node, event_id, self.now)


class HybRunner:
    """Engine adapter for the hybrid protocol state machine."""

    def __init__(self, engine: Engine):
        self.e = engine
        sc = engine.sc
        self.states: Dict[int, HybNodeState] = {}
        for i, rec in engine.nodes.items():
            self.states[i] = HybNodeState(
                id=i, location=rec.location, energy=rec.energy,
                dedup=DedupBuffer(ttl=sc.dedup_ttl))
        if sc.liveness == "ground_truth":
            alive = engine.alive
        else:
            alive = lambda v: engine.bs_known_residual.get(v, 0.0) >= sc.energy_threshold
        self.ctx = HybContext(
            bs_location=engine.bs_loc, radio=engine.radio,
            energy_coeff=engine.coeff,
            location_of=lambda v: engine.nodes[v].location,
            alive=alive, wait_t=sc.wait_t)

    def _sync(self, node: int) -> HybNodeState:
        st = self.states[node]
        st.energy = self.e.nodes[node].energy  # engine owns the battery
        return st

    # -------------------------------------------------------------- phases

    def configure(self, now: float) -> None:
        """Location upload, table computation, table dissemination."""
        e = self.e
        for n in sorted(e.nodes):
            e.send_oob_control(CONFIG, n, BS, now)
        alive = {n for n in e.nodes if not e.nodes[n].asleep}
        e.neighbour_table = compute_neighbour_table(e.locs, e.region, alive)
        for n in sorted(alive):
            self.states[n].set_row(e.neighbour_table.rows[n])
            e.send_oob_control(CONFIG, BS, n, now)
        e.schedule(now + e.sc.refresh_period, self._bs_refresh)

    def _bs_refresh(self) -> None:
        e = self.e
        now = e.now
        thr = e.sc.energy_threshold
        dead = {n for n, r in e.bs_known_residual.items() if r < thr}
        dead &= set(e.neighbour_table.rows)
        e.bs_dead |= dead
        e.neighbour_table = refresh_table(
            e.neighbour_table, e.locs, e.region, dead)
        for n in sorted(e.neighbour_table.rows):
            self.states[n].set_row(e.neighbour_table.rows[n])
            if not e.nodes[n].asleep:
                e.send_oob_control(CONFIG, BS, n, now)
        if e._heap:  # keep refreshing only while work remains
            e.schedule(now + e.sc.refresh_period, self._bs_refresh)

    # -------------------------------------------------------------- traffic

    def on_sense(self, node: int, event_id: str, now: float) -> None:
        st = self._sync(node)
        ctx = self.e.new_packet(event_id, node, now)
        action = hyb.on_sense(st, ctx.packet, self.ctx, now)
        self._act(node, ctx, action, now)

    def _act(self, node: int, ctx: PacketCtx, action: Action, now: float) -> None:
        e = self.e
        if action.kind == DROP:
            e.drop(ctx, action.reason, node, now)
            return
        if action.kind == SEND_DIRECT:
            ctx.tried_direct = True
            rx = BS
        else:
            v = action.neighbour
            hyb.note_forward(self.states[node], v)
            ctx.attempted.add(v)
            rx = v
        self._transmit(node, ctx, rx, now)

    def _transmit(self, node: int, ctx: PacketCtx, rx, now: float) -> None:
        e = self.e
        if e.nodes[node].asleep:
            e.drop(ctx, ASLEEP, node, now)
            return
        own = e.transmitting(node)
        if own is not None:
            retry = own.end + RETRY_GAP
            e.schedule(retry, lambda: self._transmit(node, ctx, rx, retry))
            return
        e.send_unicast(DATA, node, rx, ctx.packet.payload_bits, now,
                       event_id=ctx.packet.event_id, pkt=ctx,
                       on_result=lambda trans, outcome, t,
                       node=node, ctx=ctx: self._result(node, ctx, trans, outcome, t))

    def _result(self, node: int, ctx: PacketCtx, trans, outcome: str,
                now: float) -> None:
        e = self.e
        if outcome == OK:
            if trans.rx == BS:
                e.deliver(ctx, node, now)
            else:
                self._relay(trans.rx, ctx, now)
            return
        if outcome == COLLISION:
            # the model never retransmits a frame lost on the air
            e.drop(ctx, CONGESTION, node, now)
            return
        # BUSY / NO_RX: move on to the next candidate
        st = self._sync(node)
        exclude = set(ctx.attempted)
        action = hyb.on_busy_channel(st, ctx.packet, self.ctx, exclude, now)
        if action.kind == DROP:
            e.drop(ctx, action.reason, node, now)
            return
        retry = now + RETRY_GAP
        e.schedule(retry, lambda: self._act(node, ctx, action, retry))

    def _relay(self, node: int, ctx: PacketCtx, now: float) -> None:
        st = self._sync(node)
        ctx.attempted = set()
        ctx.tried_direct = False
        action = hyb.on_receive(st, ctx.packet, self.ctx, now)
        self._act(node, ctx, action, now)

    # -------------------------------------------------------------- reports

    def on_delivered(self, ctx: PacketCtx, now: float) -> None:
        e = self.e
        for n in ctx.packet.visited:
            if e.nodes[n].asleep:
                continue
            e.send_oob_control(REPORT, n, BS, now)
            e.bs_known_residual[n] = e.nodes[n].energy.residual

    def on_broadcast_received(self, node, trans, now) -> None:
        pass  # the hybrid protocol never broadcasts

    def on_node_died(self, node: int, now: float) -> None:
        pass  # the base station only learns of deaths through reports
