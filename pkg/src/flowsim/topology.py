"""Random 2-D node placement for the two reference scenarios.

Node ids are dense. Gateways (the access point, or the sink nodes) take ids
``0 .. n_aps-1`` and sensors follow. Coordinates are drawn on the unit square
and then scaled by ``side``, and gateways are drawn before sensors, so for a
fixed seed

* changing ``side`` rescales the same layout, and
* a layout with ``n`` sensors is a prefix of the layout with ``m > n`` sensors.

Both properties let sweeps over topology size or node count compare like with
like.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InvalidParameterError, NoGatewayError
from .seeding import make_rng


class NodeKind(enum.Enum):
    FLOW_SENSOR = "flow_sensor"
    TYPICAL_SENSOR = "typical_sensor"
    SINK = "sink"
    ACCESS_POINT = "access_point"

    @property
    def is_gateway(self) -> bool:
        return self in (NodeKind.SINK, NodeKind.ACCESS_POINT)


class Scenario(enum.Enum):
    INTER_NETWORK = "inter_network"
    MULTICAST = "multicast"


@dataclass(frozen=True)
class Position:
    x: float
    y: float


@dataclass(frozen=True)
class Node:
    id: int
    kind: NodeKind
    pos: Position
    network_id: int
    # networks this gateway collects for; empty for sensors
    serves: frozenset[int] = frozenset()
    energy_j: float = 0.0

    @property
    def is_sensor(self) -> bool:
        return not self.kind.is_gateway


@dataclass(frozen=True, eq=False)
class Topology:
    side: float
    nodes: tuple[Node, ...]
    seed: int
    scenario: Scenario
    n_networks: int

    @property
    def density(self) -> float:
        return len(self.nodes) / self.side**2

    @property
    def gateways(self) -> list[Node]:
        return [n for n in self.nodes if n.kind.is_gateway]

    @property
    def sensors(self) -> list[Node]:
        return [n for n in self.nodes if n.is_sensor]

    @cached_property
    def xy(self) -> np.ndarray:
        """(n, 2) array of coordinates, indexed by node id."""
        return np.array([[n.pos.x, n.pos.y] for n in self.nodes], dtype=float).reshape(-1, 2)

    @cached_property
    def distances(self) -> np.ndarray:
        xy = self.xy
        return np.hypot(xy[:, None, 0] - xy[None, :, 0], xy[:, None, 1] - xy[None, :, 1])

    def __len__(self) -> int:
        return len(self.nodes)

    def __getitem__(self, node_id: int) -> Node:
        return self.nodes[node_id]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Topology):
            return NotImplemented
        return (
            self.side == other.side
            and self.nodes == other.nodes
            and self.seed == other.seed
            and self.scenario == other.scenario
            and self.n_networks == other.n_networks
        )

    def __hash__(self) -> int:
        return hash((self.side, self.nodes, self.seed, self.scenario))


def _nearest(xy: np.ndarray, candidates: list[Node]) -> Node:
    # strict < keeps the lowest id on ties because candidates are id-sorted
    best, best_d = None, np.inf
    for c in candidates:
        d = float(np.hypot(xy[0] - c.pos.x, xy[1] - c.pos.y))
        if d < best_d:
            best, best_d = c, d
    assert best is not None
    return best


def place_random(
    n_sensors: int,
    n_aps: int,
    side: float,
    seed: int,
    scenario: Scenario | str = Scenario.INTER_NETWORK,
    n_networks: int = 4,
    sensor_kind: NodeKind = NodeKind.FLOW_SENSOR,
) -> Topology:
    """Place gateways and sensors uniformly at random in a ``side`` x ``side`` square.

    In the inter-network scenario the ``n_aps`` access points are drawn from
    the central quarter ``[side/4, 3*side/4]^2`` and serve every network;
    sensors get ``network_id = index mod n_networks``. In the multicast
    scenario the sinks are drawn over the whole square, sink ``i`` serves
    domain ``i`` and each sensor joins the domain of its nearest sink.
    """
    scenario = Scenario(scenario)
    if n_sensors < 0 or n_aps < 1:
        raise InvalidParameterError(f"need n_sensors >= 0 and n_aps >= 1, got {n_sensors}, {n_aps}")
    if not side > 0:
        raise InvalidParameterError(f"side must be positive, got {side}")
    if n_networks < 1:
        raise InvalidParameterError(f"n_networks must be >= 1, got {n_networks}")

    rng = make_rng(seed)
    gw_unit = rng.random((n_aps, 2))
    sensor_unit = rng.random((n_sensors, 2))

    nodes: list[Node] = []
    if scenario is Scenario.INTER_NETWORK:
        gw_xy = (0.25 + 0.5 * gw_unit) * side
        everything = frozenset(range(n_networks))
        for i, (x, y) in enumerate(gw_xy):
            nodes.append(Node(i, NodeKind.ACCESS_POINT, Position(float(x), float(y)), 0, everything))
    else:
        gw_xy = gw_unit * side
        n_networks = n_aps
        for i, (x, y) in enumerate(gw_xy):
            nodes.append(Node(i, NodeKind.SINK, Position(float(x), float(y)), i, frozenset({i})))

    gateways = list(nodes)
    for j, (x, y) in enumerate(sensor_unit * side):
        node_id = n_aps + j
        if scenario is Scenario.INTER_NETWORK:
            net = j % n_networks
        else:
            net = _nearest(np.array([x, y]), gateways).network_id
        nodes.append(Node(node_id, sensor_kind, Position(float(x), float(y)), net))

    return Topology(float(side), tuple(nodes), seed, scenario, n_networks)


def distance(a: Node, b: Node) -> float:
    # np.hypot so scalar and matrix distances agree to the last bit
    return float(np.hypot(a.pos.x - b.pos.x, a.pos.y - b.pos.y))


def ap_of(topology: Topology, x: int) -> int:
    """Nearest gateway serving sensor ``x``'s network (lowest id on ties)."""
    node = topology[x]
    if not node.is_sensor:
        raise InvalidParameterError(f"node {x} is a {node.kind.value}, not a sensor")
    serving = [g for g in topology.gateways if node.network_id in g.serves]
    if not serving:
        raise NoGatewayError(f"no gateway serves network {node.network_id} of node {x}")
    return _nearest(np.array([node.pos.x, node.pos.y]), serving).id


def domain_counts(topology: Topology) -> dict[int, int]:
    counts = {g.id: 0 for g in topology.gateways}
    for s in topology.sensors:
        counts[ap_of(topology, s.id)] += 1
    return counts


def from_positions(
    gateways: list[tuple[float, float]],
    sensors: list[tuple[float, float]],
    network_ids: list[int] | None = None,
    side: float | None = None,
    scenario: Scenario = Scenario.INTER_NETWORK,
    sensor_kind: NodeKind = NodeKind.FLOW_SENSOR,
) -> Topology:
    """Build a topology from explicit coordinates, mainly for tests and fixtures.

    ``network_ids`` defaults to 0 for every sensor in the inter-network case
    and to the nearest sink in the multicast case.
    """
    if side is None:
        coords = [c for p in gateways + sensors for c in p]
        side = max([1.0, *coords])
    nodes: list[Node] = []
    if scenario is Scenario.INTER_NETWORK:
        n_networks = max(network_ids, default=0) + 1 if network_ids else 1
        everything = frozenset(range(n_networks))
        for i, (x, y) in enumerate(gateways):
            nodes.append(Node(i, NodeKind.ACCESS_POINT, Position(x, y), 0, everything))
    else:
        n_networks = len(gateways)
        for i, (x, y) in enumerate(gateways):
            nodes.append(Node(i, NodeKind.SINK, Position(x, y), i, frozenset({i})))
    gws = list(nodes)
    for j, (x, y) in enumerate(sensors):
        if network_ids is not None:
            net = network_ids[j]
        elif scenario is Scenario.INTER_NETWORK:
            net = 0
        else:
            net = _nearest(np.array([x, y]), gws).network_id
        nodes.append(Node(len(gateways) + j, sensor_kind, Position(x, y), net))
    return Topology(float(side), tuple(nodes), 0, scenario, n_networks)
