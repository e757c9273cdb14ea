"""Run configuration: the flat `key = value` scenario file and defaults.

Every radio/energy/topology knob has a key whose default is the headline
parameter set (2000 m x 2000 m field, 25 nodes, 8 packets/s of 512-byte
CBR traffic, 350 m radio range at -80 dBm, 10 J batteries, 0.001 mJ sleep
threshold). Unknown keys are rejected so typos fail loudly.
"""

from dataclasses import dataclass, field, fields
from typing import Optional, Tuple

from .radio import (RadioParams, EnergyCoefficients,
                    DEFAULT_ELEC, DEFAULT_AMP,
                    DEFAULT_INITIAL_ENERGY, DEFAULT_ENERGY_THRESHOLD,
                    CONTROL_FRAME_BITS)
from .topology import Location, RegionParams, TopologyError

PROTOCOLS = ("hyb", "aodv", "dsr")


class ScenarioError(ValueError):
    """Invalid scenario configuration."""


@dataclass
class Scenario:
    topology_size: Tuple[float, float] = (2000.0, 2000.0)
    node_count: int = 25
    placement: str = "uniform"          # "uniform" or a location-file path
    bs_location: Tuple[float, float] = (1000.0, 1000.0)
    sim_time: float = 300.0             # 5 simulated minutes
    packet_rate: float = 8.0            # events per second (CBR)
    packet_size: int = 512              # bytes of sensed data
    sensing_radius: float = 250.0
    protocol: str = "hyb"
    seed: int = 1

    # radio
    radio_range: float = 350.0
    reception_threshold: float = -80.0
    bandwidth: float = 2_000_000.0
    path_loss_exponent: float = 2.0
    reference_distance: float = 1.0

    # energy
    elec: float = DEFAULT_ELEC
    amp: float = DEFAULT_AMP
    initial_energy: float = DEFAULT_INITIAL_ENERGY
    energy_threshold: float = DEFAULT_ENERGY_THRESHOLD
    control_bits: int = CONTROL_FRAME_BITS

    # neighbourhood region
    band_halfwidth_M: float = 250.0
    vertical_extent_N: Optional[float] = None   # None = unbounded
    max_neighbours_K: int = 3

    # hyb knobs
    wait_t: float = 0.1
    dedup_ttl: float = 5.0
    refresh_period: float = 30.0
    liveness: str = "ground_truth"      # or "reported"

    # baseline knobs
    discovery_timeout: float = 1.0
    discovery_retries: int = 2
    data_retries: int = 3
    retry_backoff: float = 0.01

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        w, h = self.topology_size
        if w <= 0 or h <= 0:
            raise ScenarioError("topology_size must be positive")
        if self.node_count < 1:
            raise ScenarioError("node_count must be >= 1")
        if self.sim_time <= 0 or self.packet_rate <= 0 or self.packet_size <= 0:
            raise ScenarioError("sim_time, packet_rate and packet_size must be positive")
        if self.sensing_radius < 0:
            raise ScenarioError("sensing_radius must be non-negative")
        if self.protocol not in PROTOCOLS:
            raise ScenarioError(f"unknown protocol {self.protocol!r}")
        if self.liveness not in ("ground_truth", "reported"):
            raise ScenarioError(f"unknown liveness mode {self.liveness!r}")
        bx, by = self.bs_location
        if bx < 0 or by < 0:
            raise ScenarioError("bs_location must be non-negative")

    @property
    def payload_bits(self) -> int:
        return self.packet_size * 8

    def radio_params(self) -> RadioParams:
        return RadioParams(
            path_loss_exponent=self.path_loss_exponent,
            reference_distance=self.reference_distance,
            reception_threshold=self.reception_threshold,
            radio_range=self.radio_range,
            bandwidth=self.bandwidth,
        )

    def energy_coefficients(self) -> EnergyCoefficients:
        return EnergyCoefficients(elec=self.elec, amp=self.amp)

    def region_params(self) -> RegionParams:
        return RegionParams(
            band_halfwidth_M=self.band_halfwidth_M,
            vertical_extent_N=self.vertical_extent_N,
            max_neighbours_K=self.max_neighbours_K,
            radio_range=self.radio_range,
        )

    def bs(self) -> Location:
        return Location(*self.bs_location)


_INT_KEYS = {"node_count", "packet_size", "max_neighbours_K", "seed",
             "discovery_retries", "data_retries", "control_bits"}
_STR_KEYS = {"placement", "protocol", "liveness"}
_PAIR_KEYS = {"topology_size": "x", "bs_location": ","}


def parse_scenario(text: str) -> Scenario:
    """Parse `key = value` lines (# comments, blank lines allowed)."""
    known = {f.name for f in fields(Scenario)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"line {lineno}: expected `key = value`, got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in known:
            raise ScenarioError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ScenarioError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _convert(key, val)
        except (ValueError, TypeError) as exc:
            raise ScenarioError(f"line {lineno}: bad value for {key}: {val!r}") from exc
    try:
        return Scenario(**values)
    except TopologyError as exc:
        raise ScenarioError(str(exc)) from exc


def _convert(key, val):
    if key in _STR_KEYS:
        return val
    if key in _PAIR_KEYS:
        sep = _PAIR_KEYS[key]
        a, _, b = val.partition(sep)
        return (float(a), float(b))
    if key == "vertical_extent_N":
        return None if val.lower() in ("unbounded", "none") else float(val)
    if key in _INT_KEYS:
        return int(val)
    return float(val)


def emit_scenario(sc: Scenario) -> str:
    """Render a scenario back to file form (round-trips via parse_scenario)."""
    lines = []
    for f in fields(Scenario):
        v = getattr(sc, f.name)
        if f.name == "topology_size":
            v = f"{v[0]:g}x{v[1]:g}"
        elif f.name == "bs_location":
            v = f"{v[0]:g},{v[1]:g}"
        elif f.name == "vertical_extent_N":
            v = "unbounded" if v is None else f"{v:g}"
        lines.append(f"{f.name} = {v}")
    return "".join(line + "\n" for line in lines)
