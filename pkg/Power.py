import logging
import math
from dataclasses import dataclass, field
from typing import Iterable

from core.Errors import InternalInconsistencyError
from core.Planner import HostState
from topology.Topology import NodeKind, PhysicalTopology, PowerParams, SWITCH_TIERS

log = logging.getLogger(__name__)


def instantaneous_power(hs: HostState) -> float:
    """Linear power model; a powered-off host draws nothing."""
    if not hs.powered_on:
        return 0.0
    params = hs.host.power or PowerParams()
    return params.p_idle + (params.p_peak - params.p_idle) * hs.utilization


@dataclass
class UsageSample:
    time: float
    utilization: float
    powered_on: bool


@dataclass
class EnergyLedger:
    energy_wh: dict[str, float] = field(default_factory=dict)
    timeline: dict[str, list[UsageSample]] = field(default_factory=dict)
    max_hosts_in_use: int = 0
    last_time: float = 0.0

    def accrue(self, hs: HostState, dt: float) -> None:
        if dt < 0:
            raise InternalInconsistencyError(f"negative accrual interval {dt}")
        self.energy_wh[hs.host.id] = self.energy_wh.get(hs.host.id, 0.0) + instantaneous_power(hs) * dt / 3600.0

    def accrue_all(self, hosts: Iterable[HostState], now: float) -> None:
        """Integrate every host's power from the last boundary up to `now`."""
        dt = now - self.last_time
        if dt < 0:
            raise InternalInconsistencyError(f"energy clock moving backwards: {now} < {self.last_time}")
        for hs in hosts:
            self.accrue(hs, dt)
        self.last_time = now

    def record(self, hosts: Iterable[HostState], t: float) -> None:
        """Append a utilization sample for every host whose state changed."""
        for hs in hosts:
            samples = self.timeline.setdefault(hs.host.id, [])
            sample = UsageSample(t, hs.utilization, hs.powered_on)
            if samples and (samples[-1].utilization, samples[-1].powered_on) == (sample.utilization, sample.powered_on):
                continue
            if samples and samples[-1].time == t:
                samples[-1] = sample
            else:
                samples.append(sample)

    def track_usage(self, hosts: Iterable[HostState], t: float) -> None:
        hosts = list(hosts)
        in_use = sum(1 for hs in hosts if hs.powered_on)
        if in_use > self.max_hosts_in_use:
            log.debug("hosts in use peaked at %d (t=%.3f)", in_use, t)
        self.max_hosts_in_use = max(self.max_hosts_in_use, in_use)
        self.record(hosts, t)

    @property
    def total_wh(self) -> float:
        return math.fsum(self.energy_wh[k] for k in sorted(self.energy_wh))

    def energy_at(self, hosts: Iterable[HostState], t: float) -> dict[str, float]:
        """Per-host energy as of time t >= last_time, without touching the ledger."""
        dt = max(0.0, t - self.last_time)
        return {hs.host.id: self.energy_wh.get(hs.host.id, 0.0) + instantaneous_power(hs) * dt / 3600.0
                for hs in hosts}


def _served_hosts(pt: PhysicalTopology) -> dict[str, set[str]]:
    served: dict[str, set[str]] = {}
    for tier_index, tier in enumerate(SWITCH_TIERS):
        lower = set(SWITCH_TIERS[:tier_index])
        for sw in pt.switches():
            if sw.kind != tier:
                continue
            hosts = set()
            for nb in pt.neighbors(sw.id):
                node = pt.node(nb)
                if node.kind == NodeKind.HOST:
                    hosts.add(nb)
                elif node.kind in lower:
                    hosts |= served.get(nb, set())
            served[sw.id] = hosts
    return served


def idle_switch_count(pt: PhysicalTopology, states: dict[str, HostState]) -> int:
    """Switches whose every served host (directly, or through lower tiers) is powered off."""
    count = 0
    for sw, hosts in _served_hosts(pt).items():
        if all(not states[h].powered_on for h in hosts):
            count += 1
    return count


def energy_summary(pt: PhysicalTopology, ledger: EnergyLedger, states: dict[str, HostState], t: float | None = None) -> dict:
    """Summary block of a run report; energy is taken as of t when given."""
    if t is None:
        per_host = {h: ledger.energy_wh.get(h, 0.0) for h in sorted(states)}
    else:
        at = ledger.energy_at(states.values(), t)
        per_host = {h: at[h] for h in sorted(states)}
    return {
        "energy_wh_total": math.fsum(per_host.values()),
        "energy_wh_per_host": per_host,
        "max_hosts": ledger.max_hosts_in_use,
        "idle_switches_final": idle_switch_count(pt, states),
    }
