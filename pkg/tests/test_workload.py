import io
import json
import math
import os
import sys
import unittest

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from configs.Configs import UseCase1Config, UseCase2Config
from core.Errors import FormatError, InvalidArgumentError
from messages.Request import Processing, Request, RequestClass, Transmission, VmRequest
from workload.Workload import (
    PACKET_SIZES, VM_TYPES, WORKLOAD_SIZES, DistSpec, RandomStreams, dump_workload, gen_usecase1, gen_usecase2,
    load_stream, load_vm_requests, load_workload, sample, sample_many,
)

N = 1_000_000


def test_lognormal_mean():
    d = PACKET_SIZES["ch1"]
    draws = sample_many(d, np.random.Generator(np.random.Philox(1)), N)
    assert d.mean == pytest.approx(276.4, rel=1e-3)
    assert draws.mean() == pytest.approx(d.mean, rel=0.01)


def test_exponential_mean():
    d = DistSpec.exponential(4.0)
    draws = sample_many(d, np.random.Generator(np.random.Philox(2)), N)
    assert draws.mean() == pytest.approx(0.25, rel=0.01)


def test_pareto_respects_location():
    draws = sample_many(WORKLOAD_SIZES, np.random.Generator(np.random.Philox(3)), N)
    assert draws.min() >= 12.3486
    assert np.isfinite(draws).all()


def test_scalar_sampler_matches_family():
    rng = np.random.Generator(np.random.Philox(4))
    assert sample(DistSpec.fixed_rate(5.0), rng) == 0.2
    assert sample(DistSpec.pareto(2.0, 1.5), rng) >= 2.0
    assert sample(DistSpec.lognormal(0.0, 1.0), rng) > 0.0


def test_invalid_distributions():
    with pytest.raises(InvalidArgumentError):
        DistSpec.lognormal(1.0, 0.0)
    with pytest.raises(InvalidArgumentError):
        DistSpec.pareto(0.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        DistSpec.exponential(-1.0)


def test_streams_are_independent():
    a, b = RandomStreams(9), RandomStreams(9)
    a["arrivals_normal"].random(1000)
    assert a["arrivals_priority"].random() == b["arrivals_priority"].random()


class TestUseCase1Stream(unittest.TestCase):
    def setUp(self):
        self.cfg = UseCase1Config(congestion="low", duration_s=10.0, seed=42)
        self.requests = gen_usecase1(self.cfg)

    def test_poisson_counts(self):
        normal = [r for r in self.requests if r.request_class == RequestClass.NORMAL]
        priority = [r for r in self.requests if r.request_class == RequestClass.PRIORITY]
        for stream in (normal, priority):
            self.assertLess(abs(len(stream) - 1000), 4 * math.sqrt(1000))

    def test_request_template(self):
        r = next(r for r in self.requests if r.request_class == RequestClass.PRIORITY)
        kinds = [(type(a).__name__, getattr(a, "vm_id", None) or a.channel_id) for a in r.activities]
        self.assertEqual(kinds, [("Processing", "web"), ("Transmission", "ch3"), ("Processing", "app"),
                                 ("Transmission", "ch4"), ("Processing", "db"), ("Transmission", "ch4"),
                                 ("Transmission", "ch3")])
        self.assertTrue(all(a.workload_mi >= 12.3486 for a in r.activities if isinstance(a, Processing)))

    def test_ch4_sizes_follow_their_row(self):
        sizes = [a.packet_size_bytes / self.cfg.packet_size_scale for r in self.requests for a in r.activities
                 if isinstance(a, Transmission) and a.channel_id == "ch4"]
        logs = np.log(sizes)
        self.assertAlmostEqual(float(logs.mean()), 7.0104, delta=0.1)
        self.assertAlmostEqual(float(logs.std()), 0.8481, delta=0.1)

    def test_sorted_and_deterministic(self):
        times = [r.submission_time for r in self.requests]
        self.assertEqual(times, sorted(times))
        self.assertTrue(all(0 <= t < 10.0 for t in times))
        self.assertEqual(gen_usecase1(self.cfg), self.requests)

    def test_priority_flag_leaves_workload_alone(self):
        off = UseCase1Config(congestion="low", duration_s=10.0, seed=42, priority=False)
        self.assertEqual(gen_usecase1(off), self.requests)

    def test_congestion_level_leaves_priority_stream_alone(self):
        high = gen_usecase1(UseCase1Config(congestion="high", duration_s=10.0, seed=42))
        pick = lambda rs: [r for r in rs if r.request_class == RequestClass.PRIORITY]
        self.assertEqual(pick(high), pick(self.requests))

    def test_lognormal_arrivals_keep_rate(self):
        cfg = UseCase1Config(congestion="low", duration_s=50.0, seed=1, lognormal_arrivals=True)
        normal = [r for r in gen_usecase1(cfg) if r.request_class == RequestClass.NORMAL]
        self.assertGreater(len(normal), 2500)
        self.assertLess(len(normal), 7500)

    def test_json_lines_round_trip(self):
        buf = io.StringIO()
        dump_workload(self.requests[:50], buf)
        buf.seek(0)
        self.assertEqual(load_workload(buf), self.requests[:50])


class TestUseCase2Stream(unittest.TestCase):
    def test_hundred_requests(self):
        requests = gen_usecase2(UseCase2Config(seed=3))
        self.assertEqual(len(requests), 100)
        self.assertTrue({r.vm.type_name for r in requests} <= {t.name for t in VM_TYPES})
        self.assertTrue(all(r.lifetime >= UseCase2Config().life_location for r in requests))
        starts = [r.start_time for r in requests]
        self.assertEqual(starts, sorted(starts))

    def test_types_are_uniform(self):
        requests = gen_usecase2(UseCase2Config(seed=8, n_requests=100_000))
        for t in VM_TYPES:
            share = sum(1 for r in requests if r.vm.type_name == t.name) / len(requests)
            self.assertAlmostEqual(share, 0.2, delta=0.01)

    def test_mixed_stream_file(self):
        vm_requests = gen_usecase2(UseCase2Config(seed=3, n_requests=5))
        requests = gen_usecase1(UseCase1Config(congestion="low", duration_s=0.05, seed=3))
        buf = io.StringIO()
        dump_workload(vm_requests, buf)
        dump_workload(requests, buf)
        buf.seek(0)
        self.assertEqual(load_stream(buf), (requests, vm_requests))

        buf = io.StringIO()
        dump_workload(vm_requests, buf)
        buf.seek(0)
        self.assertEqual(load_vm_requests(buf), vm_requests)

    def test_bad_line_reports_line_number(self):
        with self.assertRaises(FormatError) as ctx:
            load_stream(io.StringIO('{"id": "v", "type": "Web"}\n'))
        self.assertEqual(ctx.exception.line, 1)


REQUEST = {"id": "r1", "submission_time": 0.5, "class": "normal",
           "activities": [{"kind": "processing", "vm": "web", "workload_mi": 10.0},
                          {"kind": "transmission", "channel": "ch1", "packet_size_bytes": 1500}]}
VM_REQUEST = {"id": "v1", "type": "Web", "mips_per_core": 2000.0, "cores": 2, "bandwidth_bps": 1e8,
              "start_time": 0.0, "lifetime": 60.0}


def edited(doc, path, value):
    doc = json.loads(json.dumps(doc))
    target = doc
    for key in path[:-1]:
        target = target[key]
    target[path[-1]] = value
    return doc


@pytest.mark.parametrize("path,value", [
    (("activities", 0, "workload_mi"), "10"),
    (("activities", 0, "workload_mi"), 0),
    (("activities", 1, "packet_size_bytes"), -1500),
    (("activities", 1, "packet_size_bytes"), True),
    (("submission_time",), "0.5"),
    (("submission_time",), -1.0),
    (("submission_time",), float("nan")),
    (("activities", 0), "processing"),
])
def test_bad_request_values(path, value):
    Request.from_dict(REQUEST)
    with pytest.raises(FormatError):
        Request.from_dict(edited(REQUEST, path, value))


@pytest.mark.parametrize("key,value", [
    ("cores", 0),
    ("cores", 2.5),
    ("mips_per_core", 0.0),
    ("bandwidth_bps", "1e8"),
    ("start_time", "0"),
    ("start_time", -5.0),
    ("lifetime", 0.0),
    ("lifetime", -60.0),
])
def test_bad_vm_request_values(key, value):
    VmRequest.from_dict(VM_REQUEST)
    with pytest.raises(FormatError):
        VmRequest.from_dict(edited(VM_REQUEST, (key,), value))


def test_bad_value_reports_line_number():
    good = json.dumps(VM_REQUEST)
    bad = json.dumps(edited(VM_REQUEST, ("lifetime",), -1.0))
    with pytest.raises(FormatError) as info:
        load_stream(io.StringIO(f"{good}\n{bad}\n"))
    assert info.value.line == 2


if __name__ == "__main__":
    unittest.main()
