from dataclasses import dataclass, field
import copy
import logging
from typing import Sequence

from core.Errors import (
    ChannelBusyError, ConflictError, EmbeddingInfeasibleError, NotFoundError, PlacementInfeasibleError, ValidationError,
)
from core.NetworkOperatingSystem import NetworkOperatingSystem
from models.BestFitPolicy import BestFitPolicy
from models.PlacementPolicy import PlacementPolicy, get_policy
from models.WorstFitPolicy import WorstFitPolicy
from topology.Topology import PhysicalTopology, PhysNode, VirtualTopology, VmSpec, validate_virtual

log = logging.getLogger(__name__)

# Slack for capacity checks; allocations are sums of integral MIPS and bps.
CAPACITY_EPSILON = 1e-9


def normalized_demand(vm: VmSpec, host: PhysNode, nic_capacity_bps: float) -> tuple[float, float]:
    """(cpu_fraction, bw_fraction) of a VM relative to one host."""
    return vm.total_mips / host.capacity_mips, vm.bandwidth_bps / nic_capacity_bps


@dataclass
class HostState:
    host: PhysNode
    nic_capacity_bps: float
    allocated_mips: float = 0.0
    allocated_bw: float = 0.0
    resident: set[str] = field(default_factory=set)
    powered_on: bool = False

    @property
    def capacity_mips(self) -> float:
        return self.host.capacity_mips

    @property
    def utilization(self) -> float:
        return self.allocated_mips / self.capacity_mips

    @property
    def idleness(self) -> float:
        return idleness(self)

    def fits(self, vm: VmSpec) -> bool:
        return (self.allocated_mips + vm.total_mips <= self.capacity_mips + CAPACITY_EPSILON
                and self.allocated_bw + vm.bandwidth_bps <= self.nic_capacity_bps + CAPACITY_EPSILON)


def idleness(hs: HostState) -> float:
    """Free area of the 2-D (cpu, bandwidth) space."""
    free_cpu = 1.0 - hs.allocated_mips / hs.capacity_mips
    free_bw = 1.0 - hs.allocated_bw / hs.nic_capacity_bps
    return free_cpu * free_bw


def place_best_fit(vm: VmSpec, hosts: Sequence[HostState]) -> str:
    return BestFitPolicy().select_host(vm, hosts)


def place_worst_fit(vm: VmSpec, hosts: Sequence[HostState]) -> str:
    return WorstFitPolicy().select_host(vm, hosts)


@dataclass
class Embedding:
    vm_to_host: dict[str, str] = field(default_factory=dict)
    vlink_to_channel: dict[str, str] = field(default_factory=dict)

    def to_dict(self):
        return {"vm_to_host": dict(self.vm_to_host), "vlink_to_channel": dict(self.vlink_to_channel)}


class Planner:
    """Computing manager: places VMs and middleboxes, then embeds their virtual links."""

    def __init__(self, topology: PhysicalTopology, nos: NetworkOperatingSystem,
                 policy: PlacementPolicy | str = "bestfit"):
        self.topology = topology
        self.nos = nos
        self.policy = get_policy(policy) if isinstance(policy, str) else policy
        self.hosts: dict[str, HostState] = {
            h.id: HostState(h, topology.nic_capacity(h.id)) for h in topology.hosts()
        }
        self.placement: dict[str, str] = {}
        self.specs: dict[str, VmSpec] = {}

    def host_states(self) -> list[HostState]:
        return [self.hosts[k] for k in sorted(self.hosts)]

    def hosts_in_use(self) -> int:
        return sum(1 for h in self.hosts.values() if h.powered_on)

    def host_of(self, vm_id: str) -> str:
        try:
            return self.placement[vm_id]
        except KeyError:
            raise NotFoundError(f"unknown vm {vm_id}") from None

    def place(self, vm: VmSpec, policy: PlacementPolicy | None = None) -> str:
        if vm.id in self.placement:
            raise ConflictError(f"vm {vm.id} already placed")
        host_id = (policy or self.policy).select_host(vm, self.host_states())
        hs = self.hosts[host_id]
        hs.allocated_mips += vm.total_mips
        hs.allocated_bw += vm.bandwidth_bps
        hs.resident.add(vm.id)
        hs.powered_on = True
        self.placement[vm.id] = host_id
        self.specs[vm.id] = vm
        log.debug("placed %s (%s) on %s, idleness now %.4f", vm.id, vm.type_name, host_id, hs.idleness)
        return host_id

    def embed(self, vt: VirtualTopology, policy: PlacementPolicy | str | None = None) -> Embedding:
        """Place every element in declaration order and embed every vlink; all or nothing."""
        report = validate_virtual(vt)
        if not report.ok:
            raise ValidationError("; ".join(report.messages()), report)
        if isinstance(policy, str):
            policy = get_policy(policy)

        saved = (copy.deepcopy(self.hosts), dict(self.placement), dict(self.specs), self.nos.snapshot())
        embedding = Embedding()
        try:
            for element in vt.elements():
                embedding.vm_to_host[element.id] = self.place(element, policy)
            for vlink in vt.vlinks:
                embedding.vlink_to_channel[vlink.id] = self.nos.create_channel(vlink, self.placement)
        except (PlacementInfeasibleError, EmbeddingInfeasibleError, ConflictError):
            self.hosts, self.placement, self.specs, nos_state = saved
            self.nos.restore(nos_state)
            log.debug("embedding rolled back")
            raise
        log.info("embedded %d elements and %d vlinks", len(embedding.vm_to_host), len(embedding.vlink_to_channel))
        return embedding

    def release(self, vm_id: str) -> None:
        host_id = self.host_of(vm_id)
        channels = self.nos.channels_of(vm_id)
        busy = [cid for cid in channels if self.nos.channels[cid].active_transmissions]
        if busy:
            raise ChannelBusyError(f"cannot release {vm_id}: channels {busy} are carrying traffic")
        for cid in channels:
            self.nos.remove_channel(cid)
        vm = self.specs.pop(vm_id)
        del self.placement[vm_id]
        hs = self.hosts[host_id]
        hs.resident.discard(vm_id)
        if hs.resident:
            hs.allocated_mips -= vm.total_mips
            hs.allocated_bw -= vm.bandwidth_bps
        else:
            hs.allocated_mips = 0.0
            hs.allocated_bw = 0.0
            hs.powered_on = False
        log.debug("released %s from %s", vm_id, host_id)
