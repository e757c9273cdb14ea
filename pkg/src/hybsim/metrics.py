"""Metric collection from event logs and the multi-protocol comparison.

The four headline metrics are execution time (simulated time of the last
terminal packet outcome), average hop count over delivered packets,
collisions, and signals transmitted (every data/discovery/report/config
frame). A comparison runs every (protocol, seed, node count) combination
of one base scenario and aggregates mean and min-max spread per cell.
"""

import csv
import io
import statistics
import time
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

from .engine import COLL, Engine, FRAME_KINDS
from .hyb import ASLEEP, CONGESTION, DUPLICATE, NO_ROUTE
from .scenario import Scenario

CSV_COLUMNS = ["protocol", "node_count", "seed", "execution_time_s",
               "avg_hop_count", "collisions", "signals", "generated",
               "delivered", "dropped_asleep", "dropped_duplicate",
               "dropped_no_route", "dropped_congestion"]

_NUMERIC = CSV_COLUMNS[3:]


class MetricsError(ValueError):
    """Malformed event log or comparison input."""


@dataclass
class MetricsReport:
    execution_time: float = 0.0
    avg_hop_count: float = 0.0
    collisions: int = 0
    signals: int = 0
    generated: int = 0
    delivered: int = 0
    dropped: Dict[str, int] = field(default_factory=dict)
    unique_events_delivered: int = 0
    residual_energy: Dict[int, float] = field(default_factory=dict)
    energy_consumed: float = 0.0
    wall_clock: float = 0.0

    def dropped_total(self) -> int:
        return sum(self.dropped.values())

    def csv_values(self, protocol: str, node_count: int, seed: int) -> List[str]:
        return [protocol, str(node_count), str(seed),
                str(self.execution_time), str(self.avg_hop_count),
                str(self.collisions), str(self.signals),
                str(self.generated), str(self.delivered),
                str(self.dropped.get(ASLEEP, 0)),
                str(self.dropped.get(DUPLICATE, 0)),
                str(self.dropped.get(NO_ROUTE, 0)),
                str(self.dropped.get(CONGESTION, 0))]


def collect(log_text: str) -> MetricsReport:
    """Tally a report from an event log; pure function of the text."""
    report = MetricsReport(dropped={ASLEEP: 0, DUPLICATE: 0,
                                    NO_ROUTE: 0, CONGESTION: 0})
    hops: List[int] = []
    events_delivered = set()
    last_terminal = 0.0
    for lineno, raw in enumerate(log_text.splitlines(), start=1):
        if not raw.strip():
            continue
        parts = raw.split()
        if len(parts) != 6:
            raise MetricsError(f"line {lineno}: expected 6 fields, got {raw!r}")
        t_str, kind, _tx, _rx, event_id, outcome = parts
        try:
            t = float(t_str)
        except ValueError as exc:
            raise MetricsError(f"line {lineno}: bad timestamp {t_str!r}") from exc
        if kind in FRAME_KINDS:
            report.signals += 1
            if outcome == "COLLISION":
                report.collisions += 1
        elif kind == COLL:
            report.collisions += 1
        elif kind == "DELIVER":
            if not outcome.startswith("hops="):
                raise MetricsError(f"line {lineno}: bad DELIVER outcome {outcome!r}")
            hops.append(int(outcome[5:]))
            events_delivered.add(event_id)
            report.delivered += 1
            last_terminal = max(last_terminal, t)
        elif kind == "DROP":
            if outcome not in report.dropped:
                raise MetricsError(f"line {lineno}: unknown drop reason {outcome!r}")
            report.dropped[outcome] += 1
            last_terminal = max(last_terminal, t)
        else:
            raise MetricsError(f"line {lineno}: unknown record kind {kind!r}")
    report.generated = report.delivered + report.dropped_total()
    report.execution_time = last_terminal
    report.avg_hop_count = statistics.fmean(hops) if hops else 0.0
    report.unique_events_delivered = len(events_delivered)
    return report


def run_scenario(scenario: Scenario) -> Tuple[MetricsReport, str]:
    """Execute one run and return its report plus the full event log."""
    start = time.perf_counter()
    engine = Engine(scenario)
    log = engine.run()
    wall = time.perf_counter() - start
    report = collect(log)
    # cross-check the log-derived tallies against the engine's own counters
    assert report.generated == engine.generated
    assert report.delivered == engine.delivered
    assert report.dropped == engine.dropped
    report.residual_energy = {n: rec.energy.residual
                              for n, rec in engine.nodes.items()}
    report.energy_consumed = sum(rec.energy.initial - rec.energy.residual
                                 for rec in engine.nodes.values())
    report.wall_clock = wall
    return report, log


@dataclass
class RunRow:
    protocol: str
    node_count: int
    seed: int
    report: MetricsReport


@dataclass
class ComparisonTable:
    runs: List[RunRow] = field(default_factory=list)

    def cell(self, protocol: str, node_count: int) -> List[MetricsReport]:
        return [r.report for r in self.runs
                if r.protocol == protocol and r.node_count == node_count]

    def node_counts(self) -> List[int]:
        return sorted({r.node_count for r in self.runs})

    def protocols(self) -> List[str]:
        out = []
        for r in self.runs:
            if r.protocol not in out:
                out.append(r.protocol)
        return out

    def mean(self, protocol: str, node_count: int, attr: str) -> float:
        return statistics.fmean(getattr(rep, attr)
                                for rep in self.cell(protocol, node_count))

    def spread(self, protocol: str, node_count: int, attr: str) -> Tuple[float, float]:
        vals = [getattr(rep, attr) for rep in self.cell(protocol, node_count)]
        return (min(vals), max(vals))


def compare(scenario: Scenario, protocols: Sequence[str], seeds: Sequence[int],
            node_counts: Optional[Sequence[int]] = None) -> ComparisonTable:
    """Run every (protocol, node count, seed) combination of one scenario."""
    if not protocols or not seeds:
        raise MetricsError("need at least one protocol and one seed")
    counts = list(node_counts) if node_counts else [scenario.node_count]
    table = ComparisonTable()
    for n in counts:
        for protocol in protocols:
            for seed in seeds:
                sc = replace(scenario, protocol=protocol, seed=seed,
                             node_count=n)
                report, _ = run_scenario(sc)
                table.runs.append(RunRow(protocol, n, seed, report))
    return table


def runs_csv(table: ComparisonTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in table.runs:
        writer.writerow(row.report.csv_values(row.protocol, row.node_count,
                                              row.seed))
    return buf.getvalue()


def parse_runs_csv(text: str) -> ComparisonTable:
    """Rebuild a ComparisonTable from runs_csv output (numeric round trip)."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != CSV_COLUMNS:
        raise MetricsError(f"unexpected CSV header: {header}")
    table = ComparisonTable()
    for rec in reader:
        vals = dict(zip(CSV_COLUMNS, rec))
        report = MetricsReport(
            execution_time=float(vals["execution_time_s"]),
            avg_hop_count=float(vals["avg_hop_count"]),
            collisions=int(vals["collisions"]),
            signals=int(vals["signals"]),
            generated=int(vals["generated"]),
            delivered=int(vals["delivered"]),
            dropped={ASLEEP: int(vals["dropped_asleep"]),
                     DUPLICATE: int(vals["dropped_duplicate"]),
                     NO_ROUTE: int(vals["dropped_no_route"]),
                     CONGESTION: int(vals["dropped_congestion"])})
        table.runs.append(RunRow(vals["protocol"], int(vals["node_count"]),
                                 int(vals["seed"]), report))
    return table


def summary_csv(table: ComparisonTable) -> str:
    """Per (protocol, node count) mean and min-max spread of each metric."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["protocol", "node_count", "metric", "mean", "min", "max"])
    metrics = ["execution_time", "avg_hop_count", "collisions", "signals",
               "generated", "delivered", "energy_consumed"]
    for n in table.node_counts():
        for protocol in table.protocols():
            if not table.cell(protocol, n):
                continue
            for m in metrics:
                lo, hi = table.spread(protocol, n, m)
                writer.writerow([protocol, str(n), m,
                                 str(table.mean(protocol, n, m)),
                                 str(lo), str(hi)])
    return buf.getvalue()


def check_dominance(table: ComparisonTable,
                    baselines: Sequence[str] = ("aodv", "dsr")) -> List[str]:
    """Check the comparative trends the hybrid protocol is expected to show.

    Returns a list of violation descriptions; empty means all trends held.
    Execution time and signals (and energy) must be strictly lower in the
    mean at every node count; mean hop count at most equal; collisions
    strictly lower for a majority of seeds at node counts of 50 and up.
    """
    problems = []
    present = [b for b in baselines if any(r.protocol == b for r in table.runs)]
    if not any(r.protocol == "hyb" for r in table.runs):
        return ["no hyb runs in table"]
    for n in table.node_counts():
        for b in present:
            if not table.cell(b, n) or not table.cell("hyb", n):
                continue
            for attr in ("execution_time", "signals", "energy_consumed"):
                if not table.mean("hyb", n, attr) < table.mean(b, n, attr):
                    problems.append(f"mean {attr} hyb !< {b} at {n} nodes")
            if not table.mean("hyb", n, "avg_hop_count") <= table.mean(b, n, "avg_hop_count"):
                problems.append(f"mean avg_hop_count hyb !<= {b} at {n} nodes")
            if n >= 50:
                hyb_c = [r.collisions for r in table.cell("hyb", n)]
                base_c = [r.collisions for r in table.cell(b, n)]
                wins = sum(1 for h, o in zip(hyb_c, base_c) if h < o)
                if wins * 2 <= len(hyb_c):
                    problems.append(f"collisions hyb not majority-below {b} at {n} nodes")
    return problems
