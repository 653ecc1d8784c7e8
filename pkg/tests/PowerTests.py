import os
import sys

import pytest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core.Errors import InternalInconsistencyError
from core.Planner import HostState
from Power import EnergyLedger, energy_summary, idle_switch_count, instantaneous_power
from topology.Topology import NodeKind, PhysNode, PowerParams, build_fat_tree


def host_state(utilization=0.0, powered_on=True, host_id="h0"):
    node = PhysNode(host_id, NodeKind.HOST, 16, 4000.0, PowerParams(100.0, 250.0))
    return HostState(node, 1e9, allocated_mips=utilization * node.capacity_mips, powered_on=powered_on)


# A powered-off host draws nothing, whatever was allocated
def test_power_off_is_zero():
    assert instantaneous_power(host_state(0.7, powered_on=False)) == 0.0


def test_power_endpoints_and_midpoint():
    assert instantaneous_power(host_state(0.0)) == 100.0
    assert instantaneous_power(host_state(1.0)) == 250.0
    assert instantaneous_power(host_state(0.5)) == 175.0


def test_power_is_affine():
    p0, p1, p2 = (instantaneous_power(host_state(u)) for u in (0.25, 0.5, 0.75))
    assert p1 - p0 == p2 - p1


def test_accrue_units():
    ledger = EnergyLedger()
    hs = host_state(1.0)
    ledger.accrue(hs, 7200.0)
    assert ledger.energy_wh["h0"] == 500.0
    ledger.accrue(hs, 0.0)
    assert ledger.energy_wh["h0"] == 500.0


def test_negative_interval_rejected():
    with pytest.raises(InternalInconsistencyError):
        EnergyLedger().accrue(host_state(), -1.0)


# Full load for 10 s, then off for 10 s
def test_piecewise_schedule_closed_form():
    ledger = EnergyLedger()
    hs = host_state(1.0)
    ledger.accrue_all([hs], 10.0)
    hs.powered_on = False
    hs.allocated_mips = 0.0
    ledger.accrue_all([hs], 20.0)
    assert ledger.total_wh == pytest.approx(250.0 * 10.0 / 3600.0, rel=1e-9)


def test_energy_is_additive_over_partitions():
    whole, parts = EnergyLedger(), EnergyLedger()
    hs = host_state(0.375)
    whole.accrue(hs, 90.0)
    for dt in (12.5, 30.0, 0.0, 47.5):
        parts.accrue(hs, dt)
    assert parts.total_wh == pytest.approx(whole.total_wh, rel=1e-12)


def test_energy_at_does_not_mutate():
    ledger = EnergyLedger()
    hs = host_state(1.0)
    assert ledger.energy_at([hs], 3600.0) == {"h0": 250.0}
    assert ledger.energy_wh == {}
    assert ledger.last_time == 0.0


def test_track_usage_running_max():
    ledger = EnergyLedger()
    hosts = [host_state(powered_on=False, host_id=f"h{i}") for i in range(3)]
    ledger.track_usage(hosts, 0.0)
    assert ledger.max_hosts_in_use == 0
    hosts[1].powered_on = True
    ledger.track_usage(hosts, 5.0)
    hosts[1].powered_on = False
    ledger.track_usage(hosts, 9.0)
    assert ledger.max_hosts_in_use == 1
    assert [s.time for s in ledger.timeline["h1"]] == [0.0, 5.0, 9.0]
    assert [s.time for s in ledger.timeline["h0"]] == [0.0]


def states_for(pt, on):
    return {h.id: HostState(h, pt.nic_capacity(h.id), powered_on=h.id in on) for h in pt.hosts()}


def test_idle_switches():
    pt = build_fat_tree(3, 2, 1e9, 0.001)
    assert idle_switch_count(pt, states_for(pt, set())) == 3
    assert idle_switch_count(pt, states_for(pt, {"h0", "h1", "h2"})) == 0
    # h2 alone under e1: e1 idles, e0 and the core stay up
    assert idle_switch_count(pt, states_for(pt, {"h0"})) == 1


def test_energy_summary_keys():
    pt = build_fat_tree(2, 2, 1e9, 0.001)
    states = states_for(pt, {"h0"})
    ledger = EnergyLedger()
    ledger.accrue_all(states.values(), 36.0)
    summary = energy_summary(pt, ledger, states)
    assert summary["energy_wh_total"] == pytest.approx(1.0)
    assert summary["energy_wh_per_host"] == {"h0": pytest.approx(1.0), "h1": 0.0}
    assert summary["idle_switches_final"] == 0
