import json
import os
import sys

import pytest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from Cli import cmd_usecase1, cmd_usecase2, main

CONTENT = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "content")
PHYSICAL = os.path.join(CONTENT, "usecase1_physical.json")
VIRTUAL = os.path.join(CONTENT, "three_tier_virtual.json")
WORKLOAD = os.path.join(CONTENT, "three_tier_workload.jsonl")


def run_args(out):
    return ["run", "--physical", PHYSICAL, "--virtual", VIRTUAL, "--workload", WORKLOAD, "--out", str(out)]


def test_validate_ok(capsys):
    assert main(["validate", "--physical", PHYSICAL, "--virtual", VIRTUAL]) == 0
    assert "3 hosts" in capsys.readouterr().out


def test_malformed_topology_exits_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"nodes": [')
    assert main(["validate", "--physical", str(bad)]) == 2


def test_missing_file_exits_2(tmp_path):
    assert main(["validate", "--physical", str(tmp_path / "absent.json")]) == 2


def test_run_is_byte_identical(tmp_path):
    assert main(run_args(tmp_path / "a")) == 0
    assert main(run_args(tmp_path / "b")) == 0
    first = (tmp_path / "a" / "requests.csv").read_bytes()
    assert first == (tmp_path / "b" / "requests.csv").read_bytes()
    assert (tmp_path / "a" / "summary.json").read_bytes() == (tmp_path / "b" / "summary.json").read_bytes()
    lines = first.decode().splitlines()
    assert lines[0] == "request_id,class,submit_s,finish_s,response_s"
    assert len(lines) == 3


def test_infeasible_embedding_exits_3(tmp_path):
    virtual = json.loads(open(VIRTUAL).read())
    virtual["vms"].append({"id": "extra", "type": "Big", "mips_per_core": 40000, "cores": 16,
                           "bandwidth_bps": 1000000000})
    path = tmp_path / "virtual.json"
    path.write_text(json.dumps(virtual))
    args = run_args(tmp_path / "out")
    args[args.index(VIRTUAL)] = str(path)
    assert main(args) == 3
    assert not (tmp_path / "out" / "requests.csv").exists()


def test_usecase2_summary(tmp_path):
    assert main(["usecase2", "--policy", "worstfit", "--seed", "4", "--requests", "30", "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["config"]["policy"] == "worstfit"
    assert summary["energy_wh_total"] > 0
    assert set(summary) >= {"energy_wh_per_host", "max_hosts", "idle_switches_final", "mean_response_s"}


def test_usecase1_replications(tmp_path):
    args = ["usecase1", "--congestion", "low", "--priority", "off", "--duration", "0.1", "--seed", "7",
            "--replications", "2", "--workers", "2", "--out", str(tmp_path)]
    assert main(args) == 0
    overview = json.loads((tmp_path / "replications.json").read_text())
    assert [s["seed"] for s in overview] == [7, 8]
    assert (tmp_path / "seed-8" / "requests.csv").exists()


def test_invalid_duration_exits_2(tmp_path):
    assert main(["usecase1", "--duration", "0", "--out", str(tmp_path)]) == 2


def test_bad_priority_flag_is_usage_error():
    with pytest.raises(SystemExit) as ctx:
        main(["usecase1", "--priority", "maybe"])
    assert ctx.value.code == 2


def test_usecase_commands_return_reports(tmp_path):
    report = cmd_usecase2("bestfit", seed=3, out=str(tmp_path / "uc2"), n_requests=20)
    assert report.scenario == "usecase2-bestfit"
    assert (tmp_path / "uc2" / "summary.json").exists()

    report = cmd_usecase1("low", priority=False, seed=3, out=str(tmp_path / "uc1"), duration_s=0.1)
    assert report.seed == 3
    assert all(r.finish_s >= r.submit_s for r in report.records)


@pytest.mark.parametrize("value", ['"40000"', "0"])
def test_bad_workload_value_exits_2(tmp_path, value):
    lines = open(WORKLOAD).read().splitlines()
    first = json.loads(lines[0])
    first["activities"][0]["workload_mi"] = json.loads(value)
    path = tmp_path / "workload.jsonl"
    path.write_text("\n".join([json.dumps(first)] + lines[1:]) + "\n")
    args = run_args(tmp_path / "out")
    args[args.index(WORKLOAD)] = str(path)
    assert main(args) == 2
    assert not (tmp_path / "out" / "requests.csv").exists()


def test_negative_lifetime_exits_2(tmp_path):
    vm = {"id": "v1", "type": "Web", "mips_per_core": 2000.0, "cores": 2, "bandwidth_bps": 1e8,
          "start_time": 10.0, "lifetime": -5.0}
    path = tmp_path / "workload.jsonl"
    path.write_text(open(WORKLOAD).read().rstrip("\n") + "\n" + json.dumps(vm) + "\n")
    args = run_args(tmp_path / "out")
    args[args.index(WORKLOAD)] = str(path)
    assert main(args) == 2
