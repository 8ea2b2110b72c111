"""Simulator for virtualized flow-sensor networks.

Modules map onto the pipeline: :mod:`topology` places nodes, :mod:`radio`
decides links and energy, :mod:`flowcore` maps networks and installs flow
tables, :mod:`simengine` runs the slotted transmission, :mod:`gateway` filters
and stores delivered context data, :mod:`verifier` model-checks the control
workflow and :mod:`expcli` drives seeded experiments.
"""

from .radio import DEFAULT_RADIO, RadioParams
from .simengine import Metrics, ScenarioKind, SimConfig, simulate
from .topology import Scenario, Topology, place_random

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_RADIO",
    "Metrics",
    "RadioParams",
    "Scenario",
    "ScenarioKind",
    "SimConfig",
    "Topology",
    "place_random",
    "simulate",
]
