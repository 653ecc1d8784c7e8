import csv
import json
import os
import sys
import tempfile
import unittest
from unittest.mock import MagicMock, patch

import numpy as np

# Adjust path to import from parent directory
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from configs.Configs import PowerConfig, ScenarioConfig, UseCase1Config, UseCase2Config
from core.Errors import InvalidArgumentError
from messages.Request import VmRequest
from Orchestrator import Orchestrator, replicate, three_tier_virtual, usecase1_reservations
from topology.Topology import ChannelClass, VmSpec

CONTENT = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "content")


class TestUseCase1Scenario(unittest.TestCase):
    def setUp(self):
        self.cfg = UseCase1Config(congestion="low", duration_s=0.3, seed=2)
        self.orch = Orchestrator(self.cfg)

    def test_reservations(self):
        res = usecase1_reservations(self.cfg)
        self.assertEqual(sorted(res), ["ch3", "ch4"])
        self.assertAlmostEqual(res["ch3"] + res["ch4"], 0.81 * self.cfg.link_capacity_bps, delta=1.0)
        # 2 transmissions per leg, 256-byte units, 100 requests/s.
        self.assertGreater(res["ch3"], 55.987 * 256 * 8 * 2 * 100)
        self.assertGreater(res["ch4"], 1587.72 * 256 * 8 * 2 * 100)
        self.assertAlmostEqual(res["ch3"], 44.55e6, delta=0.05e6)
        fixed = UseCase1Config(reservation_bps=2e8)
        self.assertEqual(usecase1_reservations(fixed), {"ch3": 2e8, "ch4": 2e8})

    def test_reservation_share_too_small(self):
        with self.assertRaises(InvalidArgumentError):
            usecase1_reservations(UseCase1Config(priority_link_share=0.5))
        with self.assertRaises(InvalidArgumentError):
            UseCase1Config(priority_link_share=1.0)

    def test_channel_classes_follow_priority_flag(self):
        on = {v.id: v.channel_class for v in three_tier_virtual(self.cfg).vlinks}
        self.assertEqual(on, {"ch1": ChannelClass.STANDARD, "ch2": ChannelClass.STANDARD,
                              "ch3": ChannelClass.PRIORITY, "ch4": ChannelClass.PRIORITY})
        off = UseCase1Config(priority=False)
        self.assertTrue(all(v.channel_class == ChannelClass.STANDARD for v in three_tier_virtual(off).vlinks))

    def test_run_and_save(self):
        print("\n--- Testing use case 1 run log ---")
        report = self.orch.run()
        self.assertEqual(report.scenario, "usecase1-low-priority")
        self.assertEqual(report.max_hosts, 3)

        with tempfile.TemporaryDirectory() as out:
            csv_path, summary_path = self.orch.save_run_log(out)
            with open(csv_path, newline="") as f:
                rows = list(csv.DictReader(f))
            with open(summary_path) as f:
                summary = json.load(f)

        self.assertEqual(len(rows), len(report.records))
        self.assertEqual(summary["seed"], 2)
        self.assertEqual(summary["config"]["congestion"], "low")
        for cls in ("normal", "priority"):
            responses = [float(r["response_s"]) for r in rows if r["class"] == cls]
            self.assertEqual(summary["completed"][cls], len(responses))
            self.assertAlmostEqual(summary["mean_response_s"][cls], float(np.mean(responses)), delta=1e-9)
            self.assertAlmostEqual(summary["p95_response_s"][cls], float(np.percentile(responses, 95)), delta=1e-9)

    def test_failed_save_leaves_nothing(self):
        self.orch.run()
        with tempfile.TemporaryDirectory() as out:
            with patch("Orchestrator.json.dump", side_effect=OSError("disk full")):
                with self.assertRaises(OSError):
                    self.orch.save_run_log(out)
            self.assertEqual(os.listdir(out), [])

    def test_save_before_run(self):
        with self.assertRaises(InvalidArgumentError):
            self.orch.save_run_log("unused")

    def test_trace_file(self):
        with tempfile.TemporaryDirectory() as out:
            path = os.path.join(out, "trace.csv")
            self.cfg.engine.trace_path = path
            Orchestrator(self.cfg).run()
            with open(path) as f:
                first = f.readline().strip().split(",")
        self.assertEqual(first[1:3], ["deploy", "virtual"])


class TestUseCase2Scenario(unittest.TestCase):
    def test_injected_vm_stream(self):
        app = VmSpec("vm000", "App", 3000.0, 8, 100e6)
        stream = MagicMock(return_value=[VmRequest("vm000", app, 10.0, 3600.0)])
        with patch("Orchestrator.gen_usecase2", stream):
            report = Orchestrator(UseCase2Config(seed=0, power=PowerConfig(100.0, 250.0))).run()
        stream.assert_called_once()
        self.assertAlmostEqual(report.energy["energy_wh_total"], 156.25, places=9)
        self.assertEqual(report.max_hosts, 1)
        self.assertEqual(report.energy["idle_switches_final"], 11)

    def test_best_fit_consolidates(self):
        best = Orchestrator(UseCase2Config(policy="bestfit", seed=1)).run()
        worst = Orchestrator(UseCase2Config(policy="worstfit", seed=1)).run()
        self.assertLessEqual(best.max_hosts, worst.max_hosts)
        self.assertLess(best.energy["energy_wh_total"], worst.energy["energy_wh_total"])
        self.assertEqual(best.records, [])

    def test_replications_sorted_by_seed(self):
        configs = [UseCase2Config(seed=s, n_requests=20) for s in (3, 1, 2)]
        finished = replicate(configs, workers=2)
        self.assertEqual([o.report.seed for o in finished], [1, 2, 3])
        alone = Orchestrator(UseCase2Config(seed=2, n_requests=20)).run()
        self.assertEqual(finished[1].report.energy, alone.energy)


class TestFileScenario(unittest.TestCase):
    def test_content_files(self):
        cfg = ScenarioConfig(os.path.join(CONTENT, "usecase1_physical.json"),
                             os.path.join(CONTENT, "three_tier_virtual.json"),
                             os.path.join(CONTENT, "three_tier_workload.jsonl"))
        report = Orchestrator(cfg).run()
        self.assertEqual([r.request_id for r in report.records], ["normal-000000", "priority-000000"])
        self.assertEqual(report.max_hosts, 3)

    def test_unsupported_config(self):
        with self.assertRaises(InvalidArgumentError):
            Orchestrator({"scenario": "nope"})


if __name__ == "__main__":
    unittest.main()
