"""Slotted multi-hop transmission over installed flow tables.

Every mapped sensor injects one data packet towards its tree root. With the
default ``staggered`` traffic, sensors are scheduled in id order and the
sensor at schedule position ``j`` starts transmitting in slot ``j + 1``
(unmapped sensors keep their slot but have nothing to send); with ``burst``
traffic every packet is queued before slot 1. In each slot every node holding
a packet looks up its head-of-line packet and forwards it one hop. A node sends at most one packet per slot and a receiver
accepts at most one; when two senders pick the same receiver the lower id
goes first and the other waits. The run ends when nothing is left in flight.

Energy per transmit event: the sender pays tx energy, the addressed receiver
and every other node within interference range of the sender pay rx energy.
Collisions (same-slot transmitter pairs sharing a potential receiver) are a
statistic unless ``destructive_collisions`` is set, in which case a hop fails
when another same-slot transmitter is within interference range of the
receiver and is retried up to ``max_retransmissions`` times.
"""

from __future__ import annotations

import enum
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidParameterError, UndefinedRatioError
from .flowcore import (
    ControllerMap,
    Drop,
    Packet,
    PacketKind,
    chk_ft,
    install_tables,
    map_network,
    merge_set_for,
)
from .radio import DEFAULT_RADIO, RadioParams, interference_matrix, interference_range, packet_energy
from .topology import Scenario, Topology, distance, place_random


TRAFFIC_MODES = ("staggered", "burst")


class ScenarioKind(enum.Enum):
    INTER_NETWORK = "inter_network"
    INTRA_DOMAIN = "intra_domain"
    INTER_DOMAIN = "inter_domain"

    @property
    def placement(self) -> Scenario:
        if self is ScenarioKind.INTER_NETWORK:
            return Scenario.INTER_NETWORK
        return Scenario.MULTICAST


@dataclass(frozen=True)
class SimConfig:
    scenario: ScenarioKind = ScenarioKind.INTER_NETWORK
    # k Net/AP or number of merged multicast groups
    group: int = 1
    n_sensors: int = 100
    side: float = 100.0
    radio: RadioParams = DEFAULT_RADIO
    slot_s: float | None = None
    seed: int = 0
    # seed for node placement; defaults to ``seed``
    placement_seed: int | None = None
    # physical networks (inter-network) or sink domains (multicast)
    n_networks: int = 4
    traffic: str = "staggered"
    acks: bool = False
    destructive_collisions: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "scenario", ScenarioKind(self.scenario))
        if self.traffic not in TRAFFIC_MODES:
            raise InvalidParameterError(f"traffic must be one of {TRAFFIC_MODES}, got {self.traffic!r}")
        if not 1 <= self.group <= self.n_networks:
            raise InvalidParameterError(f"group must be in 1..{self.n_networks}, got {self.group}")
        if not 1 <= self.n_networks <= 4:
            raise InvalidParameterError(f"n_networks must be in 1..4, got {self.n_networks}")
        if self.slot_s is not None and not self.slot_s > 0:
            raise InvalidParameterError(f"slot_s must be > 0, got {self.slot_s}")
        if self.n_sensors < 0 or not self.side > 0:
            raise InvalidParameterError("need n_sensors >= 0 and side > 0")

    @property
    def n_aps(self) -> int:
        return 1 if self.scenario is ScenarioKind.INTER_NETWORK else self.n_networks

    @property
    def slot(self) -> float:
        return self.radio.airtime_s if self.slot_s is None else self.slot_s

    @property
    def merge_set(self) -> frozenset[int]:
        return merge_set_for(self.group)

    def build_topology(self) -> Topology:
        seed = self.seed if self.placement_seed is None else self.placement_seed
        return place_random(
            self.n_sensors, self.n_aps, self.side, seed, self.scenario.placement, self.n_networks
        )


@dataclass(frozen=True)
class TransmitEvent:
    slot: int
    sender: int
    receiver: int
    kind: PacketKind
    size_bytes: int
    success: bool = True


@dataclass
class RunTrace:
    events: list[TransmitEvent] = field(default_factory=list)
    slot_transmitters: list[tuple[int, ...]] = field(default_factory=list)
    delivered: list[Packet] = field(default_factory=list)
    dropped: list[Packet] = field(default_factory=list)


@dataclass
class Metrics:
    reachability: float
    total_packets: int
    sim_time_s: float
    throughput_bps: float
    energy_j: float
    collisions: int
    n_sensors: int
    injected: int = 0
    delivered: int = 0
    dropped: int = 0
    ack_packets: int = 0
    control_pkts: int = 0
    rounds: int = 0
    wall_clock_s: float = 0.0
    node_energy_j: tuple[float, ...] = ()
    trace: RunTrace | None = field(default=None, repr=False, compare=False)

    @property
    def avg_packets(self) -> float:
        """Data transmit events per sensor."""
        return self.total_packets / self.n_sensors if self.n_sensors else 0.0


CSV_COLUMNS = (
    "scenario", "k_or_mg", "n_nodes", "side_m", "tx_power_dbm", "seed",
    "reachability", "avg_packets", "sim_time_s", "throughput_bps", "energy_j", "collisions",
)


def metrics_row(config: SimConfig, m: Metrics) -> dict[str, object]:
    return {
        "scenario": config.scenario.value,
        "k_or_mg": config.group,
        "n_nodes": config.n_sensors,
        "side_m": config.side,
        "tx_power_dbm": config.radio.tx_power_dbm,
        "seed": config.seed,
        "reachability": m.reachability,
        "avg_packets": m.avg_packets,
        "sim_time_s": m.sim_time_s,
        "throughput_bps": m.throughput_bps,
        "energy_j": m.energy_j,
        "collisions": m.collisions,
    }


def compute_reachability(cmap: ControllerMap, topology: Topology) -> float:
    n = len(topology.sensors)
    if n == 0:
        raise UndefinedRatioError("reachability is undefined without sensors")
    return len(cmap.mapped) / n


def compute_throughput(delivered: int, packet_bits: int, sim_time_s: float) -> float:
    if not sim_time_s > 0:
        raise UndefinedRatioError("throughput is undefined for zero simulated time")
    return delivered * packet_bits / sim_time_s


def _collision_pairs(transmitters: Sequence[int], interf: np.ndarray) -> int:
    if len(transmitters) < 2:
        return 0
    rows = interf[list(transmitters)].astype(np.int32)
    # common neighbours; the diagonal of interf is False so a and b never count
    shared = (rows @ rows.T) > 0
    return int((np.count_nonzero(shared) - np.count_nonzero(shared.diagonal())) // 2)


def count_collisions(
    slot_sets: Iterable[Iterable[int]], params: RadioParams, topology: Topology
) -> int:
    """Unordered same-slot transmitter pairs within interference range of a common node."""
    interf = interference_matrix(params, topology)
    return sum(_collision_pairs(sorted(set(s)), interf) for s in slot_sets)


def run_transmission(config: SimConfig, cmap: ControllerMap) -> Metrics:
    started = time.perf_counter()
    topo = cmap.topology
    params = config.radio
    size = params.packet_size_bytes
    e_tx = packet_energy(params, "tx", size)
    e_rx = packet_energy(params, "rx", size)
    interf = interference_matrix(params, topo)
    hearers = [np.flatnonzero(interf[i]) for i in range(len(topo))]

    tables = install_tables(cmap)
    control_pkts = sum(len(t) for t in tables.values())

    mapped = cmap.mapped
    pending: deque[tuple[int, int]] = deque()
    for pos, s in enumerate(n.id for n in topo.sensors):
        if s in mapped:
            pending.append((pos + 1 if config.traffic == "staggered" else 1, s))
    injected = len(pending)
    queues: dict[int, deque[Packet]] = {}

    node_energy = np.zeros(len(topo))
    trace = RunTrace()
    data_tx = ack_tx = collisions = 0
    slot = 0

    while queues or pending:
        slot += 1
        while pending and pending[0][0] == slot:
            _, s = pending.popleft()
            pkt = Packet(PacketKind.DATA, s, cmap.root[s], size, topo[s].network_id)
            queues.setdefault(s, deque()).append(pkt)
        claimed: set[int] = set()
        sends: list[tuple[int, int, Packet]] = []
        for node in sorted(queues):
            q = queues[node]
            pkt, action = None, None
            while q:
                entry = tables[node].lookup(q[0])
                if entry is None or isinstance(entry.action, Drop):
                    chk_ft(tables[node], q[0])
                    trace.dropped.append(q.popleft())
                    continue
                pkt, action = q[0], entry.action
                break
            if pkt is None:
                continue
            nh = action.next_hop
            if nh in claimed:
                continue
            claimed.add(nh)
            sends.append((node, nh, pkt))

        senders = tuple(x for x, _, _ in sends)
        trace.slot_transmitters.append(senders)
        collisions += _collision_pairs(senders, interf)
        sender_set = set(senders)

        for x, y, pkt in sends:
            ok = True
            if config.destructive_collisions:
                ok = not any(interf[y, o] for o in sender_set if o != x)
            node_energy[x] += e_tx
            # hearers[x] holds each overhearing node once; y is in it unless the
            # interference range is shorter than the link
            node_energy[hearers[x]] += e_rx
            if not interf[x, y]:
                node_energy[y] += e_rx
            trace.events.append(TransmitEvent(slot, x, y, pkt.kind, pkt.size_bytes, ok))
            if pkt.kind is PacketKind.ACK:
                ack_tx += 1
            else:
                data_tx += 1

            if ok:
                chk_ft(tables[x], pkt)
                queues[x].popleft()
                if y in pkt.hop_trace:
                    raise AssertionError(f"forwarding loop at node {y}: {pkt.hop_trace}")
                pkt.hop_trace.append(y)
                if y == pkt.dst:
                    if pkt.kind is PacketKind.DATA:
                        trace.delivered.append(pkt)
                        if config.acks:
                            ack = Packet(PacketKind.ACK, y, pkt.src, size, pkt.network_id)
                            queues.setdefault(y, deque()).append(ack)
                else:
                    queues.setdefault(y, deque()).append(pkt)
            else:
                pkt.retries += 1
                if pkt.retries > params.max_retransmissions:
                    trace.dropped.append(queues[x].popleft())
        for node in [n for n, q in queues.items() if not q]:
            del queues[node]

    sim_time = slot * config.slot
    delivered = len(trace.delivered)
    throughput = compute_throughput(delivered, params.packet_bits, sim_time) if slot else 0.0
    return Metrics(
        reachability=compute_reachability(cmap, topo) if topo.sensors else 0.0,
        total_packets=data_tx,
        sim_time_s=sim_time,
        throughput_bps=throughput,
        energy_j=float(node_energy.sum()),
        collisions=collisions,
        n_sensors=len(topo.sensors),
        injected=injected,
        delivered=delivered,
        dropped=len(trace.dropped),
        ack_packets=ack_tx,
        control_pkts=control_pkts,
        rounds=slot,
        wall_clock_s=time.perf_counter() - started,
        node_energy_j=tuple(float(e) for e in node_energy),
        trace=trace,
    )


def audit_energy(events: Iterable[TransmitEvent], topology: Topology, params: RadioParams) -> float:
    """Recompute total energy from the event log alone, using scalar geometry."""
    reach = interference_range(params)
    total = 0.0
    for ev in events:
        sender = topology[ev.sender]
        listeners = 1 + sum(
            1
            for node in topology.nodes
            if node.id not in (ev.sender, ev.receiver) and distance(sender, node) <= reach
        )
        total += packet_energy(params, "tx", ev.size_bytes)
        total += listeners * packet_energy(params, "rx", ev.size_bytes)
    return total


def simulate(config: SimConfig, topology: Topology | None = None) -> Metrics:
    """Place, map and run one configuration end to end."""
    topo = config.build_topology() if topology is None else topology
    cmap = map_network(topo, config.radio, config.merge_set)
    return run_transmission(config, cmap)
