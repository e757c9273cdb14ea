"""Base-station location and neighbourhood tables.

The base station keeps a location table (node id -> coordinates) and
computes, for every node, an ordered list of candidate forwarders: nodes
inside the vertical band around it that are strictly closer to the base
station and physically reachable. Rows are capped at K entries; nodes that
can reach the base station directly and have no such candidate carry a
direct-to-sink marker, unreachable nodes an ISOLATED marker.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple, Union

DIRECT = "DIRECT"      # row marker: node delivers straight to the sink
ISOLATED = "ISOLATED"  # row marker: node has no route at all

Row = Union[str, Tuple[int, ...]]


class TopologyError(ValueError):
    """Configuration or parse failure in topology inputs."""


@dataclass(frozen=True)
class Location:
    x: float
    y: float

    def __post_init__(self):
        if self.x < 0 or self.y < 0:
            raise TopologyError("coordinates must be non-negative")

    def dist(self, other: "Location") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass
class LocationTable:
    entries: Dict[int, Location] = field(default_factory=dict)
    base_station: Location = Location(0.0, 0.0)

    def ids(self) -> Set[int]:
        return set(self.entries)


@dataclass(frozen=True)
class RegionParams:
    """Band geometry and row width for neighbour eligibility.

    band_halfwidth_M bounds |dx|, vertical_extent_N bounds |dy| (None means
    unbounded), max_neighbours_K caps row length, radio_range bounds the
    node-to-neighbour link distance.
    """

    band_halfwidth_M: float = 250.0
    vertical_extent_N: Optional[float] = None
    max_neighbours_K: int = 3
    radio_range: float = 350.0

    def __post_init__(self):
        if self.band_halfwidth_M <= 0:
            raise TopologyError("band_halfwidth_M must be positive")
        if self.max_neighbours_K < 1:
            raise TopologyError("max_neighbours_K must be >= 1")
        if self.vertical_extent_N is not None and self.vertical_extent_N <= 0:
            raise TopologyError("vertical_extent_N must be positive or unbounded")


@dataclass
class NeighbourTable:
    rows: Dict[int, Row] = field(default_factory=dict)

    def neighbours_of(self, node: int) -> Tuple[int, ...]:
        row = self.rows.get(node)
        if row is None or isinstance(row, str):
            return ()
        return row


def eligible(locs: LocationTable, params: RegionParams, alive: Set[int],
             u: int, v: int) -> bool:
    """Can v appear in u's neighbour row?"""
    if v == u or v not in alive:
        return False
    pu, pv, bs = locs.entries[u], locs.entries[v], locs.base_station
    if abs(pv.x - pu.x) > params.band_halfwidth_M:
        return False
    if params.vertical_extent_N is not None and abs(pv.y - pu.y) > params.vertical_extent_N:
        return False
    if pv.dist(bs) >= pu.dist(bs):
        return False
    return pu.dist(pv) <= params.radio_range


def compute_neighbour_table(locs: LocationTable, params: RegionParams,
                            alive: Set[int]) -> NeighbourTable:
    """Build the per-node forwarder rows for every alive node.

    A row holds the K eligible candidates nearest to the base station, in
    non-decreasing distance-to-base-station order (ties by id). A node with
    no candidate is DIRECT when within radio range of the base station,
    ISOLATED otherwise.
    """
    if not locs.entries:
        raise TopologyError("empty location table")
    unknown = alive - locs.ids()
    if unknown:
        raise TopologyError(f"alive set contains unknown ids: {sorted(unknown)}")

    bs = locs.base_station
    table = NeighbourTable()
    for u in sorted(alive):
        cands = [v for v in alive if eligible(locs, params, alive, u, v)]
        cands.sort(key=lambda v: (locs.entries[v].dist(bs), v))
        if cands:
            table.rows[u] = tuple(cands[: params.max_neighbours_K])
        elif locs.entries[u].dist(bs) <= params.radio_range:
            table.rows[u] = DIRECT
        else:
            table.rows[u] = ISOLATED
    return table


def refresh_table(table: NeighbourTable, locs: LocationTable,
                  params: RegionParams, dead: Set[int]) -> NeighbourTable:
    """Recompute the table with the dead nodes removed from the network."""
    unknown = dead - locs.ids()
    if unknown:
        raise TopologyError(f"dead set contains unknown ids: {sorted(unknown)}")
    alive = set(table.rows) - dead
    return compute_neighbour_table(locs, params, alive)


def parse_location_file(text: str) -> LocationTable:
    """Parse comma-separated `id , x , y` lines into a LocationTable.

    The base station location is not part of the file; callers supply it
    from the scenario configuration.
    """
    table = LocationTable()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 3:
            raise TopologyError(f"line {lineno}: expected `id , x , y`, got {raw!r}")
        try:
            node = int(parts[0])
            x = float(parts[1])
            y = float(parts[2])
        except ValueError as exc:
            raise TopologyError(f"line {lineno}: non-numeric field in {raw!r}") from exc
        if node < 0:
            raise TopologyError(f"line {lineno}: negative node id {node}")
        if x < 0 or y < 0:
            raise TopologyError(f"line {lineno}: negative coordinate in {raw!r}")
        if node in table.entries:
            raise TopologyError(f"line {lineno}: duplicate id {node}")
        table.entries[node] = Location(x, y)
    return table


def emit_location_file(locs: LocationTable) -> str:
    lines = [f"{i} , {locs.entries[i].x:g} , {locs.entries[i].y:g}"
             for i in sorted(locs.entries)]
    return "".join(line + "\n" for line in lines)


def emit_neighbour_table(table: NeighbourTable, k: int = 3) -> str:
    """Render a table as tab-separated text, one line per node.

    DIRECT rows emit k zeros, ISOLATED rows k dashes; short rows are padded
    with dashes so every line has k marker columns.
    """
    lines = []
    for node in sorted(table.rows):
        row = table.rows[node]
        if row == DIRECT:
            cols = ["0"] * k
        elif row == ISOLATED:
            cols = ["-"] * k
        else:
            cols = [str(v) for v in row] + ["-"] * (k - len(row))
        lines.append("\t".join([str(node)] + cols))
    return "".join(line + "\n" for line in lines)


def parse_neighbour_table(text: str) -> NeighbourTable:
    """Inverse of emit_neighbour_table (for round-trip checks and tooling)."""
    table = NeighbourTable()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        cols = line.split("\t")
        if len(cols) < 2:
            raise TopologyError(f"line {lineno}: too few columns in {raw!r}")
        try:
            node = int(cols[0])
        except ValueError as exc:
            raise TopologyError(f"line {lineno}: bad node id in {raw!r}") from exc
        if node in table.rows:
            raise TopologyError(f"line {lineno}: duplicate row for {node}")
        markers = cols[1:]
        if all(m == "-" for m in markers):
            table.rows[node] = ISOLATED
        elif all(m == "0" for m in markers):
            table.rows[node] = DIRECT
        else:
            neigh = []
            for m in markers:
                if m == "-":
                    break
                try:
                    neigh.append(int(m))
                except ValueError as exc:
                    raise TopologyError(
                        f"line {lineno}: bad neighbour id {m!r}") from exc
            table.rows[node] = tuple(neigh)
    return table
