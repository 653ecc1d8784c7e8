from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
import math

import networkx as nx

from core.Errors import InvalidArgumentError


class NodeKind(str, Enum):
    HOST = "host"
    EDGE = "edge"
    AGGREGATION = "aggregation"
    CORE = "core"


# Lower tiers first; used when deciding which hosts a switch serves.
SWITCH_TIERS = (NodeKind.EDGE, NodeKind.AGGREGATION, NodeKind.CORE)


class ChannelClass(str, Enum):
    STANDARD = "standard"
    PRIORITY = "priority"


@dataclass(frozen=True)
class PowerParams:
    p_idle: float = 100.0
    p_peak: float = 250.0


@dataclass(frozen=True)
class PhysNode:
    id: str
    kind: NodeKind
    cores: int | None = None
    mips_per_core: float | None = None
    power: PowerParams | None = None

    @property
    def is_host(self) -> bool:
        return self.kind == NodeKind.HOST

    @property
    def capacity_mips(self) -> float:
        if not self.is_host:
            return 0.0
        return self.cores * self.mips_per_core


@dataclass(frozen=True)
class Link:
    a: str
    b: str
    capacity_bps: float
    latency_s: float

    @property
    def key(self) -> tuple[str, str]:
        return (self.a, self.b) if self.a <= self.b else (self.b, self.a)

    def __str__(self):
        return f"{self.a}-{self.b}"


@dataclass(frozen=True)
class PhysicalTopology:
    nodes: tuple[PhysNode, ...]
    links: tuple[Link, ...]

    @cached_property
    def _nodes_by_id(self) -> dict[str, PhysNode]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def _links_by_key(self) -> dict[tuple[str, str], Link]:
        return {l.key: l for l in self.links}

    @cached_property
    def graph(self) -> nx.Graph:
        g = nx.Graph()
        for n in self.nodes:
            g.add_node(n.id, kind=n.kind)
        for l in self.links:
            g.add_edge(l.a, l.b, capacity=l.capacity_bps, latency=l.latency_s, key=l.key)
        return g

    def node(self, node_id: str) -> PhysNode:
        return self._nodes_by_id[node_id]

    def has_node(self, node_id: str) -> bool:
        return node_id in self._nodes_by_id

    def hosts(self) -> list[PhysNode]:
        return sorted((n for n in self.nodes if n.is_host), key=lambda n: n.id)

    def switches(self) -> list[PhysNode]:
        return sorted((n for n in self.nodes if not n.is_host), key=lambda n: n.id)

    def link_between(self, a: str, b: str) -> Link | None:
        return self._links_by_key.get((a, b) if a <= b else (b, a))

    def neighbors(self, node_id: str) -> list[str]:
        return sorted(self.graph.neighbors(node_id))

    def edge_link(self, host_id: str) -> Link:
        """The single link attaching a host to its edge switch."""
        for l in self.links:
            if host_id in (l.a, l.b):
                return l
        raise InvalidArgumentError(f"host {host_id} has no link")

    def nic_capacity(self, host_id: str) -> float:
        return self.edge_link(host_id).capacity_bps


@dataclass(frozen=True)
class RequestTransform:
    set_dst: str | None = None
    size_factor: float | None = None

    def apply(self, descriptor):
        """Return the descriptor as forwarded by a middlebox; the input is left untouched."""
        changes = {}
        if self.set_dst is not None:
            changes["destination"] = self.set_dst
        if self.size_factor is not None:
            changes["size_bytes"] = descriptor.size_bytes * self.size_factor
        return replace(descriptor, **changes)


@dataclass(frozen=True)
class VmSpec:
    id: str
    type_name: str
    mips_per_core: float
    cores: int
    bandwidth_bps: float

    @property
    def total_mips(self) -> float:
        return self.cores * self.mips_per_core


@dataclass(frozen=True)
class MiddleboxSpec(VmSpec):
    transform: RequestTransform = field(default_factory=RequestTransform)


@dataclass(frozen=True)
class VLinkSpec:
    id: str
    src: str
    dst: str
    bandwidth_bps: float
    max_latency_s: float | None = None
    channel_class: ChannelClass = ChannelClass.STANDARD


@dataclass(frozen=True)
class VirtualTopology:
    vms: tuple[VmSpec, ...] = ()
    middleboxes: tuple[MiddleboxSpec, ...] = ()
    vlinks: tuple[VLinkSpec, ...] = ()

    def elements(self) -> list[VmSpec]:
        """VMs then middleboxes, in declaration order."""
        return list(self.vms) + list(self.middleboxes)

    def vlink(self, vlink_id: str) -> VLinkSpec:
        for v in self.vlinks:
            if v.id == vlink_id:
                return v
        raise KeyError(vlink_id)


@dataclass(frozen=True)
class ValidationIssue:
    rule: str
    subject: str
    message: str

    def __str__(self):
        return self.message


class ValidationReport(list):
    """List of ValidationIssue; empty means the topology is valid."""

    def add(self, rule: str, subject: str, message: str):
        self.append(ValidationIssue(rule, subject, message))

    @property
    def ok(self) -> bool:
        return len(self) == 0

    def messages(self) -> list[str]:
        return [i.message for i in self]


def _positive(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x) and x > 0


def validate(pt: PhysicalTopology) -> ValidationReport:
    report = ValidationReport()

    seen = set()
    for n in pt.nodes:
        if n.id in seen:
            report.add("unique-id", n.id, f"duplicate id: {n.id}")
        seen.add(n.id)
        if n.is_host:
            if not (isinstance(n.cores, int) and n.cores >= 1) or not _positive(n.mips_per_core):
                report.add("host-compute", n.id, f"invalid host compute fields: {n.id}")
            if n.power is not None and not (0 <= n.power.p_idle <= n.power.p_peak):
                report.add("power-params", n.id, f"invalid power params: {n.id}")
        elif n.cores is not None or n.mips_per_core is not None or n.power is not None:
            report.add("switch-compute", n.id, f"switch carries compute fields: {n.id}")

    dangling = False
    pairs = set()
    for l in pt.links:
        for end in (l.a, l.b):
            if end not in seen:
                report.add("known-endpoint", str(l), f"unknown endpoint {end}")
                dangling = True
        if l.a == l.b:
            report.add("self-loop", str(l), f"self loop: {l}")
        if not _positive(l.capacity_bps):
            report.add("capacity", str(l), f"invalid capacity: {l}")
        if not (isinstance(l.latency_s, (int, float)) and math.isfinite(l.latency_s) and l.latency_s >= 0):
            report.add("latency", str(l), f"invalid latency: {l}")
        if l.key in pairs:
            report.add("unique-link", str(l), f"duplicate link: {l}")
        pairs.add(l.key)

    # Graph-level rules are meaningless while links point at unknown nodes.
    if dangling or not pt.nodes:
        return report

    g = nx.Graph()
    g.add_nodes_from(seen)
    g.add_edges_from((l.a, l.b) for l in pt.links)
    kinds = {n.id: n.kind for n in pt.nodes}

    for n in pt.nodes:
        if not n.is_host or g.degree(n.id) == 0:
            continue
        neighbors = list(g.neighbors(n.id))
        if len(neighbors) != 1 or kinds[neighbors[0]] != NodeKind.EDGE:
            report.add("host-attachment", n.id, f"host not attached to exactly one edge switch: {n.id}")

    components = list(nx.connected_components(g))
    if len(components) > 1:
        def weight(c):
            hosts = sum(1 for v in c if kinds[v] == NodeKind.HOST)
            return (-hosts, -len(c), min(c))
        main = min(components, key=weight)
        for v in sorted(seen - main):
            report.add("connected", v, f"unreachable: {v}")
    return report


def validate_virtual(vt: VirtualTopology) -> ValidationReport:
    report = ValidationReport()
    ids = set()
    for e in vt.elements():
        if e.id in ids:
            report.add("unique-id", e.id, f"duplicate id: {e.id}")
        ids.add(e.id)
        if not (_positive(e.mips_per_core) and _positive(e.cores) and _positive(e.bandwidth_bps)):
            report.add("vm-numeric", e.id, f"non-positive resource field: {e.id}")
    for mb in vt.middleboxes:
        t = mb.transform
        if t.size_factor is not None and not _positive(t.size_factor):
            report.add("transform", mb.id, f"invalid size_factor: {mb.id}")

    vlink_ids = set()
    for v in vt.vlinks:
        if v.id in vlink_ids or v.id in ids:
            report.add("unique-id", v.id, f"duplicate id: {v.id}")
        vlink_ids.add(v.id)
        for end in (v.src, v.dst):
            if end not in ids:
                report.add("known-endpoint", v.id, f"unknown endpoint {end}")
        if not _positive(v.bandwidth_bps):
            report.add("vlink-bandwidth", v.id, f"invalid bandwidth: {v.id}")
        if v.max_latency_s is not None and not _positive(v.max_latency_s):
            report.add("vlink-latency", v.id, f"invalid max latency: {v.id}")

    for mb in vt.middleboxes:
        if mb.transform.set_dst is not None and mb.transform.set_dst not in ids:
            report.add("transform", mb.id, f"unknown endpoint {mb.transform.set_dst}")
    return report


def build_fat_tree(n_hosts: int, hosts_per_edge: int, link_capacity: float, link_latency: float,
                   host_cores: int = 16, host_mips_per_core: float = 4000.0,
                   power: PowerParams | None = None) -> PhysicalTopology:
    """Single-core fat-tree: hosts h<i> grouped under edge switches e<j>, all edges under c0."""
    if not isinstance(n_hosts, int) or n_hosts < 1:
        raise InvalidArgumentError(f"n_hosts must be >= 1, got {n_hosts}")
    if not isinstance(hosts_per_edge, int) or hosts_per_edge < 1:
        raise InvalidArgumentError(f"hosts_per_edge must be >= 1, got {hosts_per_edge}")
    if not _positive(link_capacity):
        raise InvalidArgumentError(f"link_capacity must be > 0, got {link_capacity}")
    if not (math.isfinite(link_latency) and link_latency >= 0):
        raise InvalidArgumentError(f"link_latency must be >= 0, got {link_latency}")
    if host_cores < 1 or not _positive(host_mips_per_core):
        raise InvalidArgumentError("host compute parameters must be positive")

    power = power or PowerParams()
    n_edges = math.ceil(n_hosts / hosts_per_edge)
    hosts = [PhysNode(f"h{i}", NodeKind.HOST, host_cores, host_mips_per_core, power) for i in range(n_hosts)]
    edges = [PhysNode(f"e{j}", NodeKind.EDGE) for j in range(n_edges)]
    core = PhysNode("c0", NodeKind.CORE)

    links = [Link(h.id, f"e{i // hosts_per_edge}", link_capacity, link_latency) for i, h in enumerate(hosts)]
    links += [Link(e.id, core.id, link_capacity, link_latency) for e in edges]
    return PhysicalTopology(tuple(hosts + edges + [core]), tuple(links))
