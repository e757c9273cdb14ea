"""Per-node state machine of the hybrid single-hop/multi-hop protocol.

A node that senses (or receives) fresh data first passes the energy gate,
then the duplicate buffer, then tries to deliver straight to the base
station if the link budget and its battery allow it; otherwise it forwards
to the least-used feasible neighbour from its base-station-computed row.
There are no retransmissions: a busy channel moves the packet to the next
candidate until candidates or the waiting budget run out.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Set, Tuple

from .radio import (EnergyState, RadioParams, EnergyCoefficients,
                    is_alive, link_feasible, tx_energy)
from .topology import DIRECT, ISOLATED, Location, Row

DEFAULT_DEDUP_TTL = 5.0   # s
DEFAULT_WAIT_T = 0.1      # s, waiting budget before a congested packet dies
DEFAULT_PAYLOAD_BITS = 4096  # 512-byte data packet

# Action kinds
SEND_DIRECT = "SEND_DIRECT"
FORWARD = "FORWARD"
DROP = "DROP"

# Drop reasons
ASLEEP = "ASLEEP"
DUPLICATE = "DUPLICATE"
NO_ROUTE = "NO_ROUTE"
CONGESTION = "CONGESTION"


@dataclass(frozen=True)
class Action:
    kind: str
    neighbour: Optional[int] = None
    reason: Optional[str] = None

    @classmethod
    def send_direct(cls) -> "Action":
        return cls(SEND_DIRECT)

    @classmethod
    def forward(cls, neighbour: int) -> "Action":
        return cls(FORWARD, neighbour=neighbour)

    @classmethod
    def drop(cls, reason: str) -> "Action":
        return cls(DROP, reason=reason)


@dataclass
class DataPacket:
    event_id: str
    origin: int
    payload_bits: int = DEFAULT_PAYLOAD_BITS
    visited: List[int] = field(default_factory=list)
    created_at: float = 0.0

    def __post_init__(self):
        if not self.visited:
            self.visited = [self.origin]
        assert self.origin in self.visited
        assert len(set(self.visited)) == len(self.visited)

    @property
    def hops(self) -> int:
        return len(self.visited) - 1


@dataclass
class DedupBuffer:
    ttl: float = DEFAULT_DEDUP_TTL
    entries: Dict[str, float] = field(default_factory=dict)

    def contains(self, event_id: str, now: float) -> bool:
        expiry = self.entries.get(event_id)
        return expiry is not None and expiry >= now

    def record(self, event_id: str, now: float) -> None:
        self.entries[event_id] = now + self.ttl
        # lazy purge keeps the buffer bounded on long runs
        if len(self.entries) > 4096:
            self.entries = {e: t for e, t in self.entries.items() if t >= now}


@dataclass
class HybNodeState:
    id: int
    location: Location
    energy: EnergyState
    row: Row = ISOLATED
    use_count: Dict[int, int] = field(default_factory=dict)
    dedup: DedupBuffer = field(default_factory=DedupBuffer)

    @property
    def asleep(self) -> bool:
        return not is_alive(self.energy)

    def set_row(self, row: Row) -> None:
        self.row = row
        if isinstance(row, str):
            self.use_count = {}
        else:
            self.use_count = {v: self.use_count.get(v, 0) for v in row}


@dataclass(frozen=True)
class HybContext:
    """Engine-side facts the state machine needs but does not own."""

    bs_location: Location
    radio: RadioParams
    energy_coeff: EnergyCoefficients
    location_of: Callable[[int], Location]
    alive: Callable[[int], bool]   # liveness oracle for neighbour selection
    wait_t: float = DEFAULT_WAIT_T


def single_hop_feasible(state: HybNodeState, ctx: HybContext,
                        payload_bits: int = DEFAULT_PAYLOAD_BITS) -> bool:
    """Direct delivery is on when the link closes and the battery covers it."""
    d = state.location.dist(ctx.bs_location)
    if not link_feasible(ctx.radio, d):
        return False
    cost = tx_energy(ctx.energy_coeff, payload_bits, d)
    return state.energy.residual >= state.energy.threshold + cost


def best_neighbour(state: HybNodeState, packet: DataPacket,
                   ctx: HybContext,
                   exclude: Set[int] = frozenset()) -> Optional[int]:
    """Least-used feasible candidate, ties broken by row position.

    Candidates already on the packet's path, already attempted for this
    packet (``exclude``), dead, or out of link range are skipped.
    """
    if isinstance(state.row, str):
        return None
    best: Optional[int] = None
    best_count = -1
    for v in state.row:  # row order encodes proximity to the base station
        if v in packet.visited or v in exclude:
            continue
        if not ctx.alive(v):
            continue
        if not link_feasible(ctx.radio, state.location.dist(ctx.location_of(v))):
            continue
        count = state.use_count.get(v, 0)
        if best is None or count < best_count:
            best, best_count = v, count
    return best


def _route(state: HybNodeState, packet: DataPacket, ctx: HybContext) -> Action:
    if single_hop_feasible(state, ctx, packet.payload_bits):
        return Action.send_direct()
    nxt = best_neighbour(state, packet, ctx)
    if nxt is None:
        return Action.drop(NO_ROUTE)
    return Action.forward(nxt)


def on_sense(state: HybNodeState, packet: DataPacket, ctx: HybContext,
             now: float) -> Action:
    """Handle a locally sensed event."""
    if state.asleep:
        return Action.drop(ASLEEP)
    if state.dedup.contains(packet.event_id, now):
        return Action.drop(DUPLICATE)
    state.dedup.record(packet.event_id, now)
    return _route(state, packet, ctx)


def on_receive(state: HybNodeState, packet: DataPacket, ctx: HybContext,
               now: float) -> Action:
    """Handle a data packet forwarded to this node.

    On the fresh path the node appends itself to the packet's route before
    choosing the next action, so the hop is recorded exactly once.
    """
    if state.asleep:
        return Action.drop(ASLEEP)
    if state.dedup.contains(packet.event_id, now):
        return Action.drop(DUPLICATE)
    state.dedup.record(packet.event_id, now)
    packet.visited.append(state.id)
    return _route(state, packet, ctx)


def on_busy_channel(state: HybNodeState, packet: DataPacket, ctx: HybContext,
                    attempted: Set[int], now: float) -> Action:
    """React to a failed channel grab: next candidate or give up.

    ``attempted`` holds every neighbour already tried for this packet; a
    candidate is never retried. Past the waiting budget the packet dies as
    CONGESTION, before that with no candidate left as NO_ROUTE.
    """
    if now - packet.created_at >= ctx.wait_t:
        return Action.drop(CONGESTION)
    nxt = best_neighbour(state, packet, ctx, exclude=attempted)
    if nxt is None:
        return Action.drop(NO_ROUTE)
    return Action.forward(nxt)


def note_forward(state: HybNodeState, neighbour: int) -> None:
    """Record an executed FORWARD for load balancing."""
    state.use_count[neighbour] = state.use_count.get(neighbour, 0) + 1
