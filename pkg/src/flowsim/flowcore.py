"""Flow tables, controller-side mapping and virtual merging of networks.

The controller builds a breadth-first tree rooted at every gateway over the
links its relay policy allows, then derives one flow table per node from
that tree. Relaying is governed by the *merge set*:

* a sensor whose network is outside the merge set behaves as a typical
  sensor and only relays for its own network;
* sensors of networks inside the merge set are flow-sensors and relay for
  any network of the merge set;
* a gateway that serves any network of the merge set collects for all of it.

Merging networks therefore only ever adds links, which is why reachability is
monotone under :func:`merge_networks`.
"""

from __future__ import annotations

import enum
import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Union

import numpy as np

from .errors import InvalidParameterError, NoRouteError
from .radio import RadioParams, link_matrix
from .topology import Topology

FLOOD = "flood"


@dataclass(frozen=True)
class FlowHeader:
    """Match fields. ``None`` is the wildcard."""

    src: int | None = None
    dst: int | None = None
    network_scope: int | None = None

    @property
    def specificity(self) -> int:
        return sum(f is not None for f in (self.src, self.dst, self.network_scope))

    def matches(self, pkt: Packet) -> bool:
        return (
            (self.src is None or self.src == pkt.src)
            and (self.dst is None or self.dst == pkt.dst)
            and (self.network_scope is None or self.network_scope == pkt.network_id)
        )


@dataclass(frozen=True)
class Forward:
    next_hop: int | str


@dataclass(frozen=True)
class Drop:
    pass


DROP = Drop()
FlowAction = Union[Forward, Drop]


@dataclass
class FlowCounters:
    control_pkts: int = 0
    data_pkts: int = 0


@dataclass
class FlowEntry:
    header: FlowHeader
    action: FlowAction
    priority: int = 0
    counters: FlowCounters = field(default_factory=FlowCounters)


class PacketKind(enum.Enum):
    DATA = "data"
    CONTROL = "control"
    ACK = "ack"


@dataclass
class Packet:
    kind: PacketKind
    src: int
    dst: int
    size_bytes: int
    network_id: int | None = None
    hop_trace: list[int] = field(default_factory=list)
    retries: int = 0

    def __post_init__(self) -> None:
        if not self.hop_trace:
            self.hop_trace = [self.src]

    @property
    def hops(self) -> int:
        return len(self.hop_trace) - 1


class FlowTable:
    """Per-node table. Selection is priority, then specificity, then install order.

    Entries are bucketed by their destination field so a lookup only scans
    the exact-destination bucket and the wildcard bucket.
    """

    def __init__(self, owner: int, entries: Iterable[FlowEntry] = ()):
        self.owner = owner
        self._seq = 0
        self._buckets: dict[int | None, list[tuple[tuple[int, int, int], FlowEntry]]] = {}
        for e in entries:
            self._add(e)
        for bucket in self._buckets.values():
            bucket.sort(key=lambda item: item[0])

    def _add(self, entry: FlowEntry) -> list:
        rank = (-entry.priority, -entry.header.specificity, self._seq)
        self._seq += 1
        bucket = self._buckets.setdefault(entry.header.dst, [])
        bucket.append((rank, entry))
        return bucket

    def install(self, entry: FlowEntry) -> None:
        self._add(entry).sort(key=lambda item: item[0])

    @property
    def entries(self) -> list[FlowEntry]:
        """All entries in selection order."""
        ranked = [item for b in self._buckets.values() for item in b]
        ranked.sort(key=lambda item: item[0])
        return [e for _, e in ranked]

    def lookup(self, pkt: Packet) -> FlowEntry | None:
        best = None
        for key in (pkt.dst, None):
            for rank, e in self._buckets.get(key, ()):
                if e.header.matches(pkt):
                    if best is None or rank < best[0]:
                        best = (rank, e)
                    break
        return None if best is None else best[1]

    def __len__(self) -> int:
        return sum(len(b) for b in self._buckets.values())

    def __iter__(self):
        return iter(self.entries)

    def dump(self) -> str:
        return dump_table(self)


def chk_ft(table: FlowTable, pkt: Packet) -> FlowAction:
    """Match ``pkt`` against ``table``, bump the winning entry's counter, return its action.

    A table miss drops the packet.
    """
    entry = table.lookup(pkt)
    if entry is None:
        return DROP
    if pkt.kind is PacketKind.CONTROL:
        entry.counters.control_pkts += 1
    else:
        entry.counters.data_pkts += 1
    return entry.action


def _fmt(v: int | None) -> str:
    return "*" if v is None else str(v)


def _fmt_action(a: FlowAction) -> str:
    if isinstance(a, Drop):
        return "drop"
    return f"fwd:{a.next_hop}"


def dump_table(table: FlowTable) -> str:
    """One line per entry: ``priority src dst scope action control data``."""
    lines = [f"# table {table.owner}"]
    for e in table.entries:
        h = e.header
        lines.append(
            f"{e.priority} {_fmt(h.src)} {_fmt(h.dst)} {_fmt(h.network_scope)} "
            f"{_fmt_action(e.action)} {e.counters.control_pkts} {e.counters.data_pkts}"
        )
    return "\n".join(lines) + "\n"


@dataclass
class ControllerMap:
    topology: Topology
    params: RadioParams
    merge_set: frozenset[int]
    parent: dict[int, int]
    root: dict[int, int]
    depth: dict[int, int]
    children: dict[int, list[int]]

    @property
    def mapped(self) -> set[int]:
        """Sensors with a tree path to a gateway."""
        return {n for n in self.parent if self.topology[n].is_sensor}

    @property
    def unmapped(self) -> set[int]:
        return {s.id for s in self.topology.sensors} - self.mapped

    def relays_for(self, node: int) -> frozenset[int]:
        return relay_scope(self.topology[node].network_id, self.merge_set)

    def path_to_root(self, node: int) -> list[int]:
        if node not in self.parent and node not in self.root:
            raise NoRouteError(f"node {node} is not mapped")
        path = [node]
        while path[-1] in self.parent:
            path.append(self.parent[path[-1]])
        return path

    def subtree(self, node: int) -> list[int]:
        out, stack = [], list(reversed(self.children.get(node, [])))
        while stack:
            n = stack.pop()
            out.append(n)
            stack.extend(reversed(self.children.get(n, [])))
        return out


def relay_scope(network_id: int, merge_set: frozenset[int]) -> frozenset[int]:
    """Networks a sensor of ``network_id`` may carry traffic for."""
    if network_id in merge_set:
        return merge_set
    return frozenset({network_id})


def permitted_links(topology: Topology, params: RadioParams, merge_set: Iterable[int]) -> np.ndarray:
    """Adjacency of the links the relay policy allows.

    Sensor pairs need the same relay class; a sensor-gateway link needs the
    gateway to serve the sensor's class; gateways never link to each other.
    """
    merge = frozenset(merge_set)
    adj = link_matrix(params, topology).copy()
    n = len(topology)
    cls = np.empty(n, dtype=np.int64)
    is_gw = np.zeros(n, dtype=bool)
    # class label: the merge set collapses to -1, other networks keep their id
    for node in topology.nodes:
        is_gw[node.id] = node.kind.is_gateway
        cls[node.id] = -1 if node.network_id in merge else node.network_id
    sensor_ok = (cls[:, None] == cls[None, :]) & ~is_gw[:, None] & ~is_gw[None, :]
    gw_serves = np.zeros((n, n), dtype=bool)
    for g in topology.gateways:
        served = g.serves | (merge if g.serves & merge else frozenset())
        for s in topology.sensors:
            if s.network_id in served:
                gw_serves[g.id, s.id] = gw_serves[s.id, g.id] = True
    return adj & (sensor_ok | gw_serves)


def map_network(topology: Topology, params: RadioParams, merge_set: Iterable[int]) -> ControllerMap:
    merge = frozenset(merge_set)
    if not merge:
        raise InvalidParameterError("merge_set must be non-empty")
    adj = permitted_links(topology, params, merge)
    parent: dict[int, int] = {}
    root: dict[int, int] = {}
    depth: dict[int, int] = {}
    children: dict[int, list[int]] = {}
    queue: deque[int] = deque()
    for g in topology.gateways:
        root[g.id] = g.id
        depth[g.id] = 0
        children[g.id] = []
        queue.append(g.id)
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(adj[u]):
            v = int(v)
            if v in root:
                continue
            parent[v] = u
            root[v] = root[u]
            depth[v] = depth[u] + 1
            children[v] = []
            children[u].append(v)
            queue.append(v)
    return ControllerMap(topology, params, merge, parent, root, depth, children)


PRIO_DOWNSTREAM = 20
PRIO_UPSTREAM = 10
PRIO_MISS = 0


def def_ft(cmap: ControllerMap, y: int) -> FlowTable:
    """Derive node ``y``'s flow table from the controller tree.

    Entries, in order: one upstream entry towards the gateway, one downstream
    entry per node below ``y`` (forwarding to the child whose subtree holds
    it), and a catch-all drop. Gateways get no upstream entry.
    """
    if y not in cmap.root:
        raise NoRouteError(f"node {y} is not mapped")
    entries = []
    node = cmap.topology[y]
    if y in cmap.parent:
        scope = cmap.relays_for(y)
        net = None if len(scope) > 1 else node.network_id
        entries.append(FlowEntry(FlowHeader(None, cmap.root[y], net), Forward(cmap.parent[y]), PRIO_UPSTREAM))
    for child in cmap.children.get(y, []):
        for d in [child, *cmap.subtree(child)]:
            entries.append(FlowEntry(FlowHeader(None, d, None), Forward(child), PRIO_DOWNSTREAM))
    entries.append(FlowEntry(FlowHeader(), DROP, PRIO_MISS))
    return FlowTable(y, entries)


def install_tables(cmap: ControllerMap) -> dict[int, FlowTable]:
    return {n: def_ft(cmap, n) for n in sorted(cmap.root)}


def merge_networks(map_a: ControllerMap, map_b: ControllerMap) -> ControllerMap:
    if map_a.topology is not map_b.topology and map_a.topology != map_b.topology:
        raise InvalidParameterError("maps must be built over the same topology")
    if map_a.params != map_b.params:
        raise InvalidParameterError("maps must share radio parameters")
    return map_network(map_a.topology, map_a.params, map_a.merge_set | map_b.merge_set)


def merge_set_for(group: int) -> frozenset[int]:
    """Merge set for ``group`` networks or domains sharing: ids ``0 .. group-1``."""
    if group < 1:
        raise InvalidParameterError(f"group must be >= 1, got {group}")
    return frozenset(range(group))


def all_merge_sets(n: int) -> list[frozenset[int]]:
    ids = range(n)
    return [frozenset(c) for r in range(1, n + 1) for c in itertools.combinations(ids, r)]
