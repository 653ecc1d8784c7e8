from collections import deque
from dataclasses import dataclass, field
import copy
import heapq
import logging
import math
from typing import Mapping

import networkx as nx

from core.Errors import (
    ChannelBusyError, ConflictError, EmbeddingInfeasibleError, InfeasibleReason,
    InternalInconsistencyError, InvalidArgumentError, NotFoundError,
)
from topology.Topology import ChannelClass, Link, PhysicalTopology, VLinkSpec

log = logging.getLogger(__name__)

# Absolute slack when comparing summed latencies against a bound.
LATENCY_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Path:
    nodes: tuple[str, ...]
    links: tuple[Link, ...]

    @property
    def src(self) -> str:
        return self.nodes[0]

    @property
    def dst(self) -> str:
        return self.nodes[-1]

    @property
    def hops(self) -> int:
        return len(self.links)

    @property
    def latency(self) -> float:
        return sum(l.latency_s for l in self.links)

    def __str__(self):
        return "[" + ", ".join(f"{a}-{b}" for a, b in zip(self.nodes, self.nodes[1:])) + "]"


@dataclass
class LinkState:
    link: Link
    reserved: float = 0.0
    standard_channels_active: int = 0

    @property
    def residual(self) -> float:
        return self.link.capacity_bps - self.reserved

    @property
    def standard_pool(self) -> float:
        return self.link.capacity_bps - self.reserved


@dataclass
class InFlight:
    size_bits: float
    start_service: float

    @property
    def finish_service(self) -> float:
        return self.start_service + self.size_bits


@dataclass
class Channel:
    id: str
    vlink: VLinkSpec
    path: Path
    channel_class: ChannelClass
    reservation: float = 0.0
    active_transmissions: int = 0
    current_rate: float = 0.0
    # Processor-sharing bookkeeping: every in-flight transmission has received
    # exactly `service - start_service` bits.
    service: float = 0.0
    epoch: int = 0
    inflight: dict[str, InFlight] = field(default_factory=dict)
    finish_heap: list[tuple[float, int, str]] = field(default_factory=list)
    _seq: int = 0

    @property
    def is_loopback(self) -> bool:
        return self.path.hops == 0

    @property
    def per_transmission_rate(self) -> float:
        if self.active_transmissions == 0:
            return 0.0
        return self.current_rate / self.active_transmissions


def find_path(pt: PhysicalTopology, linkstates: Mapping[tuple[str, str], LinkState], src: str, dst: str,
              required_bw: float, max_latency: float | None = None) -> Path:
    """Minimum-hop simple path meeting bandwidth and latency bounds.

    Ties between equal-hop paths go to the lexicographically smallest node-id
    sequence. Partial paths are expanded breadth-first with neighbours in id
    order, so the first complete path found is the answer.
    """
    for end in (src, dst):
        if not pt.has_node(end) or not pt.node(end).is_host:
            raise InvalidArgumentError(f"{end} is not a host")
    if src == dst:
        return Path((src,), ())

    graph = pt.graph
    if not nx.has_path(graph, src, dst):
        raise EmbeddingInfeasibleError(InfeasibleReason.DISCONNECTED, detail=f"{src} -> {dst}")

    def residual(a, b):
        state = linkstates.get(graph.edges[a, b]["key"])
        return state.residual if state is not None else graph.edges[a, b]["capacity"]

    feasible = nx.Graph()
    feasible.add_nodes_from(graph.nodes)
    feasible.add_edges_from((a, b, d) for a, b, d in graph.edges(data=True) if residual(a, b) >= required_bw)
    if not nx.has_path(feasible, src, dst):
        raise EmbeddingInfeasibleError(InfeasibleReason.BANDWIDTH, detail=f"{src} -> {dst} at {required_bw:g} bps")

    # Lower bound of the latency still to be paid from each node to dst.
    to_dst = nx.single_source_dijkstra_path_length(feasible, dst, weight="latency")
    bound = math.inf if max_latency is None else max_latency + LATENCY_TOLERANCE

    # Without a latency bound the first arrival at a node is its best prefix,
    # so later arrivals can be dropped.
    visited = {src} if max_latency is None else None

    queue = deque([((src,), 0.0)])
    while queue:
        nodes, latency = queue.popleft()
        here = nodes[-1]
        for nxt in sorted(feasible.neighbors(here)):
            if nxt in nodes or nxt not in to_dst:
                continue
            if visited is not None:
                if nxt in visited:
                    continue
                visited.add(nxt)
            step = latency + feasible.edges[here, nxt]["latency"]
            if step + to_dst[nxt] > bound:
                continue
            extended = nodes + (nxt,)
            if nxt == dst:
                links = tuple(pt.link_between(a, b) for a, b in zip(extended, extended[1:]))
                return Path(extended, links)
            queue.append((extended, step))

    raise EmbeddingInfeasibleError(InfeasibleReason.LATENCY, detail=f"{src} -> {dst} within {max_latency:g} s")


class NetworkOperatingSystem:
    """Channel bookkeeping and flow-rate sharing over a physical topology."""

    def __init__(self, topology: PhysicalTopology):
        self.topology = topology
        self.link_states: dict[tuple[str, str], LinkState] = {l.key: LinkState(l) for l in topology.links}
        self.channels: dict[str, Channel] = {}
        self.clock = 0.0

    def find_path(self, src: str, dst: str, required_bw: float, max_latency: float | None = None) -> Path:
        return find_path(self.topology, self.link_states, src, dst, required_bw, max_latency)

    def create_channel(self, vlink: VLinkSpec, placement: Mapping[str, str]) -> str:
        if vlink.id in self.channels:
            raise ConflictError(f"channel {vlink.id} already exists")
        for end in (vlink.src, vlink.dst):
            if end not in placement:
                raise InvalidArgumentError(f"vlink {vlink.id}: endpoint {end} is not placed")

        try:
            path = self.find_path(placement[vlink.src], placement[vlink.dst], vlink.bandwidth_bps, vlink.max_latency_s)
        except EmbeddingInfeasibleError as e:
            raise EmbeddingInfeasibleError(e.reason, vlink.id, e.detail) from e

        channel = Channel(vlink.id, vlink, path, vlink.channel_class, service=0.0)
        if vlink.channel_class == ChannelClass.PRIORITY:
            channel.reservation = vlink.bandwidth_bps
            for l in path.links:
                self.link_states[l.key].reserved += vlink.bandwidth_bps
        self.channels[vlink.id] = channel
        log.debug("channel %s (%s) created on %s", vlink.id, vlink.channel_class.value, path)
        self.recompute_rates()
        return channel.id

    def remove_channel(self, channel_id: str) -> None:
        channel = self.channels.get(channel_id)
        if channel is None:
            raise NotFoundError(f"unknown channel {channel_id}")
        if channel.active_transmissions:
            raise ChannelBusyError(f"channel {channel_id} has {channel.active_transmissions} active transmissions")
        if channel.channel_class == ChannelClass.PRIORITY:
            for l in channel.path.links:
                state = self.link_states[l.key]
                state.reserved -= channel.reservation
                if state.reserved < 0 and state.reserved > -1e-6:
                    state.reserved = 0.0
        del self.channels[channel_id]
        log.debug("channel %s removed", channel_id)
        self.recompute_rates()

    def recompute_rates(self) -> dict[str, float]:
        """Equal split of each link's standard pool among its active standard channels."""
        active = [c for c in self.channels.values()
                  if c.channel_class == ChannelClass.STANDARD and c.active_transmissions > 0 and not c.is_loopback]
        for state in self.link_states.values():
            state.standard_channels_active = 0
        for c in active:
            for l in c.path.links:
                self.link_states[l.key].standard_channels_active += 1

        rates = {}
        for cid in sorted(self.channels):
            c = self.channels[cid]
            if c.is_loopback:
                rate = math.inf
            elif c.channel_class == ChannelClass.PRIORITY:
                rate = c.reservation
            elif c.active_transmissions > 0:
                rate = min(self.link_states[l.key].standard_pool / self.link_states[l.key].standard_channels_active
                           for l in c.path.links)
            else:
                rate = 0.0
            if rate != c.current_rate:
                c.current_rate = rate
                c.epoch += 1
            rates[cid] = rate
        return rates

    def advance(self, now: float) -> None:
        """Credit every in-flight transmission with the service received up to `now`."""
        if now < self.clock:
            raise InternalInconsistencyError(f"network clock moving backwards: {now} < {self.clock}")
        dt = now - self.clock
        if dt > 0:
            for c in self.channels.values():
                if c.active_transmissions and not c.is_loopback:
                    c.service += c.per_transmission_rate * dt
        self.clock = now

    def on_transmission_start(self, channel_id: str, transmission_id: str, size_bits: float) -> dict[str, float]:
        channel = self._channel(channel_id)
        if transmission_id in channel.inflight:
            raise ConflictError(f"transmission {transmission_id} already in flight on {channel_id}")
        entry = InFlight(size_bits, channel.service)
        channel.inflight[transmission_id] = entry
        channel._seq += 1
        heapq.heappush(channel.finish_heap, (entry.finish_service, channel._seq, transmission_id))
        channel.active_transmissions += 1
        channel.epoch += 1
        return self.recompute_rates()

    def on_transmission_finish(self, channel_id: str, transmission_id: str) -> dict[str, float]:
        channel = self._channel(channel_id)
        if channel.active_transmissions == 0:
            raise InternalInconsistencyError(f"finish on idle channel {channel_id}")
        if transmission_id not in channel.inflight:
            raise InternalInconsistencyError(f"transmission {transmission_id} not in flight on {channel_id}")
        del channel.inflight[transmission_id]
        if channel.finish_heap[0][2] == transmission_id:
            heapq.heappop(channel.finish_heap)
        else:
            channel.finish_heap = [e for e in channel.finish_heap if e[2] != transmission_id]
            heapq.heapify(channel.finish_heap)
        channel.active_transmissions -= 1
        channel.epoch += 1
        if channel.active_transmissions == 0:
            # Idle: restart the service counter to keep it small.
            channel.service = 0.0
            channel.finish_heap.clear()
        return self.recompute_rates()

    def attained(self, channel_id: str, transmission_id: str) -> float:
        """Bits delivered so far to one in-flight transmission."""
        channel = self._channel(channel_id)
        entry = channel.inflight[transmission_id]
        if channel.is_loopback:
            return entry.size_bits
        return channel.service - entry.start_service

    def next_completion(self, channel_id: str) -> tuple[float, str] | None:
        """Time and id of the next transmission to complete at the current rate, or None if stalled."""
        channel = self._channel(channel_id)
        if not channel.finish_heap:
            return None
        finish_service, _, tx_id = channel.finish_heap[0]
        if channel.is_loopback:
            return self.clock, tx_id
        per_tx = channel.per_transmission_rate
        if per_tx <= 0:
            return None
        remaining = max(0.0, finish_service - channel.service)
        return self.clock + remaining / per_tx, tx_id

    def link_load(self, key: tuple[str, str]) -> float:
        """Reserved bandwidth plus the rates actually granted to standard channels on a link."""
        state = self.link_states[key]
        granted = sum(c.current_rate for c in self.channels.values()
                      if c.channel_class == ChannelClass.STANDARD and c.active_transmissions > 0
                      and any(l.key == key for l in c.path.links))
        return state.reserved + granted

    def channels_of(self, element_id: str) -> list[str]:
        return sorted(cid for cid, c in self.channels.items() if element_id in (c.vlink.src, c.vlink.dst))

    def signature(self) -> tuple:
        links = tuple((k, s.reserved, s.standard_channels_active) for k, s in sorted(self.link_states.items()))
        chans = tuple((cid, c.path.nodes, c.reservation, c.active_transmissions) for cid, c in sorted(self.channels.items()))
        return links, chans

    def snapshot(self):
        return copy.deepcopy((self.link_states, self.channels, self.clock))

    def restore(self, snap) -> None:
        self.link_states, self.channels, self.clock = snap

    def _channel(self, channel_id: str) -> Channel:
        try:
            return self.channels[channel_id]
        except KeyError:
            raise NotFoundError(f"unknown channel {channel_id}") from None
