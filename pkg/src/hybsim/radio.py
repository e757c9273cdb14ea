"""Propagation, link feasibility, airtime and battery accounting.

Shared by every protocol: log-distance path loss calibrated so that the
configured radio range meets the reception threshold exactly, plus a
first-order radio energy model (electronics + amplifier terms).
"""

import math
from dataclasses import dataclass, field, replace

DEFAULT_RADIO_RANGE = 350.0          # m
DEFAULT_RECEPTION_THRESHOLD = -80.0  # dBm
DEFAULT_BANDWIDTH = 2_000_000.0      # bits/s
DEFAULT_PATH_LOSS_EXPONENT = 2.0
DEFAULT_REFERENCE_DISTANCE = 1.0     # m

DEFAULT_ELEC = 50e-9     # J/bit
DEFAULT_AMP = 100e-12    # J/bit/m^2

DEFAULT_INITIAL_ENERGY = 10.0   # J
DEFAULT_ENERGY_THRESHOLD = 1e-6  # J (0.001 mJ)

CONTROL_FRAME_BITS = 320  # 40-byte control frame (RREQ/RREP/report/config)


@dataclass(frozen=True)
class RadioParams:
    """Propagation calibration.

    ``tx_power`` is derived so that ``received_power(radio_range)`` equals
    ``reception_threshold`` exactly; the two Table-style knobs (range and
    threshold) therefore stay mutually consistent.
    """

    path_loss_exponent: float = DEFAULT_PATH_LOSS_EXPONENT
    reference_distance: float = DEFAULT_REFERENCE_DISTANCE
    reception_threshold: float = DEFAULT_RECEPTION_THRESHOLD
    radio_range: float = DEFAULT_RADIO_RANGE
    bandwidth: float = DEFAULT_BANDWIDTH

    def __post_init__(self):
        if self.path_loss_exponent < 2:
            raise ValueError("path loss exponent must be >= 2")
        if not self.radio_range > self.reference_distance > 0:
            raise ValueError("require radio_range > reference_distance > 0")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")

    @property
    def tx_power(self) -> float:
        """Transmit power in dBm, derived from the calibration constraint."""
        return self.reception_threshold + 10.0 * self.path_loss_exponent * math.log10(
            self.radio_range / self.reference_distance
        )


def received_power(params: RadioParams, distance: float) -> float:
    """Received power in dBm at ``distance`` metres (log-distance model)."""
    if distance < 0:
        raise ValueError("distance must be non-negative")
    d = max(distance, params.reference_distance)
    return params.tx_power - 10.0 * params.path_loss_exponent * math.log10(
        d / params.reference_distance
    )


def link_feasible(params: RadioParams, distance: float) -> bool:
    """True iff a frame sent over ``distance`` arrives above the threshold.

    By calibration this is equivalent to ``distance <= radio_range``; the
    power comparison is kept as the definition, the distance shortcut is
    what tests check it against.
    """
    return received_power(params, distance) >= params.reception_threshold


def frame_airtime(params: RadioParams, bits: int) -> float:
    """Channel occupancy of a ``bits``-bit frame, in seconds."""
    if bits < 0:
        raise ValueError("bits must be non-negative")
    return bits / params.bandwidth


@dataclass(frozen=True)
class EnergyCoefficients:
    """First-order radio model coefficients."""

    elec: float = DEFAULT_ELEC  # J/bit, electronics (both tx and rx)
    amp: float = DEFAULT_AMP    # J/bit/m^2, amplifier

    def __post_init__(self):
        if self.elec <= 0 or self.amp <= 0:
            raise ValueError("energy coefficients must be positive")


def tx_energy(coeff: EnergyCoefficients, bits: int, distance: float) -> float:
    """Energy to transmit ``bits`` over ``distance`` metres, in joules."""
    if bits < 0 or distance < 0:
        raise ValueError("bits and distance must be non-negative")
    return coeff.elec * bits + coeff.amp * bits * distance * distance


def rx_energy(coeff: EnergyCoefficients, bits: int) -> float:
    """Energy to receive ``bits``, in joules (distance independent)."""
    if bits < 0:
        raise ValueError("bits must be non-negative")
    return coeff.elec * bits


@dataclass
class EnergyState:
    """One node's battery. Below ``threshold`` the node is asleep for good."""

    residual: float = DEFAULT_INITIAL_ENERGY
    threshold: float = DEFAULT_ENERGY_THRESHOLD
    initial: float = DEFAULT_INITIAL_ENERGY

    def __post_init__(self):
        if not (0 <= self.residual <= self.initial):
            raise ValueError("require 0 <= residual <= initial")
        if self.threshold < 0:
            raise ValueError("threshold must be non-negative")


def is_alive(state: EnergyState) -> bool:
    return state.residual >= state.threshold


def deduct(state: EnergyState, amount: float) -> EnergyState:
    """Charge ``amount`` joules; residual clamps at zero, never negative."""
    if amount < 0:
        raise ValueError("amount must be non-negative")
    return replace(state, residual=max(0.0, state.residual - amount))
