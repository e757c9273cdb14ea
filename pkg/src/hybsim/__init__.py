"""Deterministic discrete-event simulator for stationary sensor networks.

Implements a hybrid single-hop/multi-hop location-based routing protocol
plus simplified AODV-like and DSR-like baselines over a shared radio, MAC
and energy substrate, with a comparison harness for the four headline
metrics (execution time, hop count, collisions, signals transmitted).
"""

from .scenario import Scenario, parse_scenario, emit_scenario
from .engine import Engine, place_nodes, generate_events
from .metrics import MetricsReport, collect, compare, run_scenario

__all__ = [
    "Scenario", "parse_scenario", "emit_scenario",
    "Engine", "place_nodes", "generate_events",
    "MetricsReport", "collect", "compare", "run_scenario",
]

__version__ = "0.1.0"
