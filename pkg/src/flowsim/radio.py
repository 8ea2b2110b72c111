"""Link physics: log-distance received power, transmission range, per-bit energy.

Received power at distance ``d`` metres is

    rx(d) = tx_power + path_gain + G_tx + G_rx - 10 * n * log10(d)

with ``path_gain`` the loss offset at the 1 m reference and ``n`` the
propagation constant. Free-space Friis is the ``n = 2`` case. A link exists
when the distance is at most the transmission range (unit-disk model).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

import numpy as np

from .errors import InvalidParameterError
from .topology import Node, Topology, distance

Role = Literal["tx", "rx"]


@dataclass(frozen=True)
class RadioParams:
    tx_power_dbm: float = -10.45
    path_gain_db: float = -0.04
    propagation_constant: float = 4.0
    receiver_sensitivity_dbm: float = -80.5
    required_snr_db: float = 4.0
    # explicit range wins over the power budget when set
    tx_range_override_m: float | None = 10.0
    # with an override, scale it from this power by the propagation constant
    range_anchor_dbm: float | None = None
    # None: same as the transmission range
    interference_range_m: float | None = None
    data_rate_bps: float = 250_000.0
    tx_energy_j_per_bit: float = 30e-9
    rx_energy_j_per_bit: float = 20e-9
    packet_size_bytes: int = 125
    antenna_gain_tx_dbi: float = 0.0
    antenna_gain_rx_dbi: float = 0.0
    max_retransmissions: int = 15
    channel_check_rate_hz: float = 8.0

    def __post_init__(self) -> None:
        if not self.propagation_constant > 0:
            raise InvalidParameterError("propagation_constant must be > 0")
        if not self.data_rate_bps > 0:
            raise InvalidParameterError("data_rate_bps must be > 0")
        if not self.packet_size_bytes > 0:
            raise InvalidParameterError("packet_size_bytes must be > 0")
        if self.tx_energy_j_per_bit < 0 or self.rx_energy_j_per_bit < 0:
            raise InvalidParameterError("per-bit energies must be >= 0")
        if self.tx_range_override_m is not None and self.tx_range_override_m < 0:
            raise InvalidParameterError("tx_range_override_m must be >= 0")
        if self.interference_range_m is not None and self.interference_range_m < 0:
            raise InvalidParameterError("interference_range_m must be >= 0")

    def replace(self, **changes) -> RadioParams:
        return dataclasses.replace(self, **changes)

    @property
    def packet_bits(self) -> int:
        return 8 * self.packet_size_bytes

    @property
    def airtime_s(self) -> float:
        return self.packet_bits / self.data_rate_bps

    @property
    def link_budget_db(self) -> float:
        return (
            self.tx_power_dbm
            + self.path_gain_db
            + self.antenna_gain_tx_dbi
            + self.antenna_gain_rx_dbi
            - self.receiver_sensitivity_dbm
        )


DEFAULT_RADIO = RadioParams()


@dataclass(frozen=True)
class LinkVerdict:
    connected: bool
    rx_power_dbm: float
    range_m: float


def received_power(params: RadioParams, d: float) -> float:
    if not d > 0:
        raise InvalidParameterError(f"distance must be > 0, got {d}")
    return (
        params.tx_power_dbm
        + params.path_gain_db
        + params.antenna_gain_tx_dbi
        + params.antenna_gain_rx_dbi
        - 10.0 * params.propagation_constant * math.log10(d)
    )


def derived_range(params: RadioParams) -> float:
    """Distance at which received power falls to the receiver sensitivity.

    Returns 0 when the budget is negative, i.e. the signal is already below
    sensitivity at the 1 m reference.
    """
    budget = params.link_budget_db
    if budget < 0:
        return 0.0
    return 10.0 ** (budget / (10.0 * params.propagation_constant))


def transmission_range(params: RadioParams) -> float:
    """Unit-disk radius in metres.

    Without an override this is :func:`derived_range`. With an override and no
    anchor the override is returned as is. With both, the override is the
    range at ``range_anchor_dbm`` and it scales with transmit power the same
    way the derived range does, ``10 ** (dP / (10 n))``.
    """
    override = params.tx_range_override_m
    if override is None:
        return derived_range(params)
    if params.range_anchor_dbm is None:
        return float(override)
    delta = params.tx_power_dbm - params.range_anchor_dbm
    return float(override) * 10.0 ** (delta / (10.0 * params.propagation_constant))


def interference_range(params: RadioParams) -> float:
    if params.interference_range_m is None:
        return transmission_range(params)
    return float(params.interference_range_m)


def link_exists(params: RadioParams, a: Node, b: Node) -> LinkVerdict:
    if a.id == b.id:
        raise InvalidParameterError("a link needs two distinct nodes")
    d = distance(a, b)
    rng = transmission_range(params)
    rx = received_power(params, d) if d > 0 else math.inf
    return LinkVerdict(d <= rng, rx, rng)


def link_matrix(params: RadioParams, topology: Topology) -> np.ndarray:
    """Boolean adjacency of the unit-disk graph, no self loops."""
    adj = topology.distances <= transmission_range(params)
    np.fill_diagonal(adj, False)
    return adj


def interference_matrix(params: RadioParams, topology: Topology) -> np.ndarray:
    adj = topology.distances <= interference_range(params)
    np.fill_diagonal(adj, False)
    return adj


def packet_energy(params: RadioParams, role: Role, size_bytes: int) -> float:
    if size_bytes < 0:
        raise InvalidParameterError(f"size_bytes must be >= 0, got {size_bytes}")
    if role == "tx":
        per_bit = params.tx_energy_j_per_bit
    elif role == "rx":
        per_bit = params.rx_energy_j_per_bit
    else:
        raise InvalidParameterError(f"role must be 'tx' or 'rx', got {role!r}")
    # decimal product so 1000 bits x 30 nJ is exactly 3e-5, not 2.9999...e-5
    return float(8 * size_bytes * Fraction(repr(float(per_bit))))
