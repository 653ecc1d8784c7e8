"""sdcsim command line: run a scenario, the two canned experiments, or validate topology files."""
import argparse
import dataclasses
import json
import logging
import os
import sys

from configs.Configs import (
    CONGESTION_RATES, EngineConfig, PowerConfig, ScenarioConfig, Settings, UseCase1Config, UseCase2Config,
)
from core.Errors import InvalidArgumentError, SimulationError
from messages.Report import RunReport
from Orchestrator import Orchestrator, replicate
from topology.TopologyIO import load_physical, load_virtual

log = logging.getLogger("sdcsim")


def _on_off(value: str) -> bool:
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected on or off")
    return value == "on"


def build_parser(settings: Settings) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sdcsim", description="Software-defined cloud data-center simulator.")
    parser.add_argument("--log-level", default=settings.log_level)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=settings.output_dir)
        p.add_argument("--replications", type=int, default=1, help="run seeds seed..seed+N-1")
        p.add_argument("--workers", type=int, default=settings.workers)

    run = sub.add_parser("run", help="simulate user-supplied topology and workload files")
    run.add_argument("--physical", required=True)
    run.add_argument("--virtual", required=True)
    run.add_argument("--workload", required=True)
    run.add_argument("--until", type=float, default=None)
    run.add_argument("--policy", default="bestfit")
    run.add_argument("--trace", default=None, help="write the event trace to this file")
    add_common(run)

    uc1 = sub.add_parser("usecase1", help="priority channels under network congestion")
    uc1.add_argument("--congestion", choices=sorted(CONGESTION_RATES), default="medium")
    uc1.add_argument("--priority", type=_on_off, default=True, metavar="on|off")
    uc1.add_argument("--reservation-bps", type=float, default=None)
    uc1.add_argument("--duration", type=float, default=10.0)
    uc1.add_argument("--trace", default=None, help="write the event trace to this file")
    add_common(uc1)

    uc2 = sub.add_parser("usecase2", help="energy of best-fit versus worst-fit VM placement")
    uc2.add_argument("--policy", choices=("bestfit", "worstfit"), default="bestfit")
    uc2.add_argument("--requests", type=int, default=100)
    add_common(uc2)

    val = sub.add_parser("validate", help="check topology files")
    val.add_argument("--physical", required=True)
    val.add_argument("--virtual", default=None)
    return parser


def _config(args, seed: int, power: PowerConfig):
    if args.command == "run":
        return ScenarioConfig(args.physical, args.virtual, args.workload, seed=seed, until=args.until,
                              policy=args.policy, name="run", engine=EngineConfig(trace_path=args.trace), power=power)
    if args.command == "usecase1":
        return UseCase1Config(congestion=args.congestion, priority=args.priority, seed=seed, duration_s=args.duration,
                              reservation_bps=args.reservation_bps, engine=EngineConfig(trace_path=args.trace),
                              power=power)
    return UseCase2Config(policy=args.policy, seed=seed, n_requests=args.requests, power=power)


def _run_one(config, out: str) -> RunReport:
    orch = Orchestrator(config)
    report = orch.run()
    csv_path, summary_path = orch.save_run_log(out)
    log.info("wrote %s and %s", csv_path, summary_path)
    return report


def cmd_run(physical: str, virtual: str, workload: str, seed: int = 0, until: float | None = None,
            out: str = "output", policy: str = "bestfit", trace: str | None = None,
            power: PowerConfig | None = None) -> RunReport:
    """Simulate user-supplied topology and workload files; writes requests.csv and summary.json to `out`."""
    config = ScenarioConfig(physical, virtual, workload, seed=seed, until=until, policy=policy, name="run",
                            engine=EngineConfig(trace_path=trace), power=power or PowerConfig())
    return _run_one(config, out)


def cmd_usecase1(congestion: str = "medium", priority: bool = True, seed: int = 0, out: str = "output",
                 duration_s: float = 10.0, reservation_bps: float | None = None, trace: str | None = None,
                 power: PowerConfig | None = None) -> RunReport:
    config = UseCase1Config(congestion=congestion, priority=priority, seed=seed, duration_s=duration_s,
                            reservation_bps=reservation_bps, engine=EngineConfig(trace_path=trace),
                            power=power or PowerConfig())
    return _run_one(config, out)


def cmd_usecase2(policy: str = "bestfit", seed: int = 0, out: str = "output", n_requests: int = 100,
                 power: PowerConfig | None = None) -> RunReport:
    config = UseCase2Config(policy=policy, seed=seed, n_requests=n_requests, power=power or PowerConfig())
    return _run_one(config, out)


def _run_single(args, power: PowerConfig) -> RunReport:
    if args.command == "run":
        return cmd_run(args.physical, args.virtual, args.workload, args.seed, args.until, args.out,
                       args.policy, args.trace, power)
    if args.command == "usecase1":
        return cmd_usecase1(args.congestion, args.priority, args.seed, args.out, args.duration,
                            args.reservation_bps, args.trace, power)
    return cmd_usecase2(args.policy, args.seed, args.out, args.requests, power)


def cmd_validate(args) -> int:
    with open(args.physical, "rb") as f:
        pt = load_physical(f)
    print(f"{args.physical}: ok ({len(pt.hosts())} hosts, {len(pt.switches())} switches, {len(pt.links)} links)")
    if args.virtual:
        with open(args.virtual, "rb") as f:
            vt = load_virtual(f)
        print(f"{args.virtual}: ok ({len(vt.elements())} elements, {len(vt.vlinks)} vlinks)")
    return 0


def cmd_simulate(args, power: PowerConfig) -> int:
    if args.replications < 1:
        raise InvalidArgumentError("--replications must be >= 1")
    if args.replications == 1:
        summary = _run_single(args, power).to_summary()
        print(json.dumps({k: summary[k] for k in ("mean_response_s", "energy_wh_total", "max_hosts")}))
        print(f"wrote requests.csv and summary.json under {args.out}")
        return 0

    configs = [_config(args, s, power) for s in range(args.seed, args.seed + args.replications)]
    if getattr(args, "trace", None):
        configs = [dataclasses.replace(c, engine=EngineConfig()) for c in configs]
        log.warning("--trace is ignored with more than one replication")
    finished = replicate(configs, workers=args.workers)
    overview = []
    for orch in finished:
        orch.save_run_log(os.path.join(args.out, f"seed-{orch.report.seed}"))
        overview.append(orch.report.to_summary())
    with open(os.path.join(args.out, "replications.json"), "w", encoding="utf-8") as f:
        json.dump(overview, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"wrote {len(finished)} replications under {args.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    settings = Settings.from_env()
    args = build_parser(settings).parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="[%(levelname)s] %(name)s: %(message)s")
    try:
        if args.command == "validate":
            return cmd_validate(args)
        return cmd_simulate(args, PowerConfig.from_env())
    except SimulationError as e:
        log.error("%s", e)
        return e.exit_code
    except OSError as e:
        log.error("%s", e)
        return 2


if __name__ == "__main__":
    sys.exit(main())
