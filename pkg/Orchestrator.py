from concurrent.futures import ThreadPoolExecutor
import contextlib
import csv
import json
import logging
import math
import os
from typing import Iterable

from configs.Configs import ScenarioConfig, UseCase1Config, UseCase2Config
from core.Errors import InvalidArgumentError
from messages.Report import CSV_COLUMNS, RunReport
from messages.Request import RequestClass
from Power import energy_summary
from Simulation import Simulation
from topology.Topology import (
    ChannelClass, PhysicalTopology, PowerParams, VirtualTopology, VLinkSpec, VmSpec, build_fat_tree,
)
from topology.TopologyIO import load_physical, load_virtual
from workload.Workload import (
    APP, DB, PACKET_SIZES, SIZE_ROWS, TRANSMISSIONS_PER_LEG, WEB, gen_usecase1, gen_usecase2, load_stream,
)

log = logging.getLogger(__name__)

RunConfig = UseCase1Config | UseCase2Config | ScenarioConfig


def usecase1_physical(cfg: UseCase1Config) -> PhysicalTopology:
    return build_fat_tree(cfg.n_hosts, cfg.hosts_per_edge, cfg.link_capacity_bps, cfg.link_latency_s,
                          cfg.host_cores, cfg.host_mips_per_core, PowerParams(cfg.power.p_idle_w, cfg.power.p_peak_w))


def usecase1_reservations(cfg: UseCase1Config) -> dict[str, float]:
    """Bandwidth held by each priority channel.

    Each channel first gets its mean demand (both directions at the priority
    arrival rate). What is left of `priority_link_share` of the link capacity
    is then split in proportion to the square root of those demands.
    """
    cm = cfg.channel_map
    legs = {cm.priority_web_app: "web_app", cm.priority_app_db: "app_db"}
    if cfg.reservation_bps is not None:
        return {cid: cfg.reservation_bps for cid in legs}
    demand = {}
    for cid, leg in legs.items():
        mean_bits = PACKET_SIZES[SIZE_ROWS[(RequestClass.PRIORITY, leg)]].mean * cfg.packet_size_scale * 8.0
        demand[cid] = mean_bits * TRANSMISSIONS_PER_LEG * cfg.priority_rate
    spare = cfg.priority_link_share * cfg.link_capacity_bps - sum(demand.values())
    if spare <= 0:
        raise InvalidArgumentError(
            f"priority demand {sum(demand.values()):.4g} bps exceeds {cfg.priority_link_share:g} of the link")
    weight = sum(math.sqrt(d) for d in demand.values())
    return {cid: d + spare * math.sqrt(d) / weight for cid, d in demand.items()}


def three_tier_virtual(cfg: UseCase1Config) -> VirtualTopology:
    """Web, application and database servers, each sized to a whole host."""
    vms = tuple(VmSpec(vm_id, type_name, cfg.host_mips_per_core, cfg.host_cores, cfg.link_capacity_bps)
                for vm_id, type_name in ((WEB, "Web"), (APP, "App"), (DB, "DB")))
    cm = cfg.channel_map
    reservations = usecase1_reservations(cfg) if cfg.priority else {}

    def vlink(cid: str, src: str, dst: str) -> VLinkSpec:
        if cid in reservations:
            return VLinkSpec(cid, src, dst, reservations[cid], channel_class=ChannelClass.PRIORITY)
        return VLinkSpec(cid, src, dst, cfg.standard_vlink_bps)

    vlinks = (
        vlink(cm.normal_web_app, WEB, APP),
        vlink(cm.normal_app_db, APP, DB),
        vlink(cm.priority_web_app, WEB, APP),
        vlink(cm.priority_app_db, APP, DB),
    )
    return VirtualTopology(vms, (), vlinks)


def usecase2_physical(cfg: UseCase2Config) -> PhysicalTopology:
    return build_fat_tree(cfg.n_hosts, cfg.hosts_per_edge, cfg.link_capacity_bps, cfg.link_latency_s,
                          cfg.host_cores, cfg.host_mips_per_core, PowerParams(cfg.power.p_idle_w, cfg.power.p_peak_w))


class Orchestrator:
    """Builds one scenario, runs it to completion and writes its report."""

    def __init__(self, config: RunConfig):
        if not isinstance(config, (UseCase1Config, UseCase2Config, ScenarioConfig)):
            raise InvalidArgumentError(f"unsupported run config {type(config).__name__}")
        self.config = config
        self.config_dict = config.to_dict()
        self.simulation: Simulation | None = None
        self.report: RunReport | None = None

    @property
    def scenario(self) -> str:
        return self.config.name

    def build(self, trace=None) -> Simulation:
        cfg = self.config
        if isinstance(cfg, UseCase1Config):
            sim = Simulation(usecase1_physical(cfg), three_tier_virtual(cfg), engine=cfg.engine, trace=trace)
            for r in gen_usecase1(cfg):
                sim.submit(r)
        elif isinstance(cfg, UseCase2Config):
            sim = Simulation(usecase2_physical(cfg), policy=cfg.policy, trace=trace)
            for vmr in gen_usecase2(cfg):
                sim.submit_vm(vmr)
        else:
            with open(cfg.physical_path, "rb") as f:
                pt = load_physical(f)
            with open(cfg.virtual_path, "rb") as f:
                vt = load_virtual(f)
            with open(cfg.workload_path, "r", encoding="utf-8") as f:
                requests, vm_requests = load_stream(f)
            sim = Simulation(pt, vt, policy=cfg.policy, engine=cfg.engine, trace=trace)
            for r in requests:
                sim.submit(r)
            for vmr in vm_requests:
                sim.submit_vm(vmr)
        self.simulation = sim
        return sim

    def run(self) -> RunReport:
        until = getattr(self.config, "until", None)
        trace_path = getattr(getattr(self.config, "engine", None), "trace_path", None)
        log.info("running %s (seed %d)", self.scenario, self.config.seed)
        with contextlib.ExitStack() as stack:
            trace = stack.enter_context(open(trace_path, "w", encoding="utf-8")) if trace_path else None
            sim = self.build(trace)
            metrics = sim.run_until(math.inf if until is None else until)

        report = RunReport(
            scenario=self.scenario,
            seed=self.config.seed,
            config=self.config_dict,
            records=sorted(metrics.records, key=lambda r: (r.finish_s, r.request_id)),
            energy=energy_summary(sim.topology, sim.ledger, sim.planner.hosts, metrics.clock),
            rejected_vms=metrics.rejected_vms,
        )
        log.info("%s done: %d requests, %.3f Wh, max hosts %d", self.scenario, len(report.records),
                 report.energy["energy_wh_total"], report.max_hosts)
        self.report = report
        return report

    def save_run_log(self, out_dir: str) -> tuple[str, str]:
        """Write requests.csv and summary.json; nothing is left behind on failure."""
        if self.report is None:
            raise InvalidArgumentError("nothing to save: run() has not completed")
        os.makedirs(out_dir, exist_ok=True)
        csv_path = os.path.join(out_dir, "requests.csv")
        summary_path = os.path.join(out_dir, "summary.json")
        try:
            with open(csv_path, "w", newline="", encoding="utf-8") as f:
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(CSV_COLUMNS)
                for record in self.report.records:
                    writer.writerow(record.to_row())
            with open(summary_path, "w", encoding="utf-8") as f:
                json.dump(self.report.to_summary(), f, indent=2, sort_keys=True)
                f.write("\n")
        except BaseException:
            for path in (csv_path, summary_path):
                with contextlib.suppress(FileNotFoundError):
                    os.remove(path)
            raise
        return csv_path, summary_path

    def reset(self) -> None:
        self.simulation = None
        self.report = None


def replicate(configs: Iterable[RunConfig], workers: int = 1) -> list[Orchestrator]:
    """Run independent configs, possibly in parallel; finished runs come back sorted by seed."""
    orchestrators = [Orchestrator(c) for c in configs]
    if workers < 1:
        raise InvalidArgumentError("workers must be >= 1")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(Orchestrator.run, orchestrators))
    return sorted(orchestrators, key=lambda o: (o.report.seed, o.report.scenario))
