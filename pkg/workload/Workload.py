"""Seeded request and VM-request generators for the two canned experiments.

Every random quantity draws from its own Philox (counter-based, 4x64) stream
spawned from one SeedSequence, so changing e.g. the normal-traffic rate never
perturbs the priority stream of the same seed.
"""
from dataclasses import dataclass
from enum import Enum
import json
import math
from typing import Iterable, TextIO

import numpy as np

from configs.Configs import UseCase1Config, UseCase2Config
from core.Errors import FormatError, InvalidArgumentError
from messages.Request import Processing, Request, RequestClass, Transmission, VmRequest
from topology.Topology import VmSpec


class Family(str, Enum):
    LOGNORMAL = "lognormal"
    PARETO = "pareto"
    EXPONENTIAL = "exponential"
    FIXED_RATE = "fixed-rate"


@dataclass(frozen=True)
class DistSpec:
    family: Family
    mu: float = 0.0
    sigma: float = 1.0
    location: float = 1.0
    shape: float = 1.0
    rate: float = 1.0

    def __post_init__(self):
        if self.family == Family.LOGNORMAL and not self.sigma > 0:
            raise InvalidArgumentError("lognormal sigma must be > 0")
        if self.family == Family.PARETO and not (self.shape > 0 and self.location > 0):
            raise InvalidArgumentError("pareto shape and location must be > 0")
        if self.family in (Family.EXPONENTIAL, Family.FIXED_RATE) and not self.rate > 0:
            raise InvalidArgumentError(f"{self.family.value} rate must be > 0")

    @classmethod
    def lognormal(cls, mu: float, sigma: float) -> "DistSpec":
        return cls(Family.LOGNORMAL, mu=mu, sigma=sigma)

    @classmethod
    def pareto(cls, location: float, shape: float) -> "DistSpec":
        return cls(Family.PARETO, location=location, shape=shape)

    @classmethod
    def exponential(cls, rate: float) -> "DistSpec":
        return cls(Family.EXPONENTIAL, rate=rate)

    @classmethod
    def fixed_rate(cls, rate: float) -> "DistSpec":
        return cls(Family.FIXED_RATE, rate=rate)

    @property
    def mean(self) -> float:
        if self.family == Family.LOGNORMAL:
            return math.exp(self.mu + self.sigma ** 2 / 2)
        if self.family == Family.PARETO:
            return math.inf if self.shape <= 1 else self.shape * self.location / (self.shape - 1)
        return 1.0 / self.rate


def sample(d: DistSpec, rng: np.random.Generator) -> float:
    if d.family == Family.LOGNORMAL:
        return math.exp(d.mu + d.sigma * rng.standard_normal())
    if d.family == Family.PARETO:
        # 1 - U lies in (0, 1], keeping samples finite and >= location.
        return d.location / (1.0 - rng.random()) ** (1.0 / d.shape)
    if d.family == Family.EXPONENTIAL:
        return -math.log(1.0 - rng.random()) / d.rate
    return 1.0 / d.rate


def sample_many(d: DistSpec, rng: np.random.Generator, n: int) -> np.ndarray:
    """Vectorized form of sample() for moment checks."""
    if d.family == Family.LOGNORMAL:
        return np.exp(d.mu + d.sigma * rng.standard_normal(n))
    if d.family == Family.PARETO:
        return d.location / (1.0 - rng.random(n)) ** (1.0 / d.shape)
    if d.family == Family.EXPONENTIAL:
        return -np.log(1.0 - rng.random(n)) / d.rate
    return np.full(n, 1.0 / d.rate)


STREAM_NAMES = (
    "arrivals_normal", "arrivals_priority",
    "sizes_normal", "sizes_priority",
    "workloads_normal", "workloads_priority",
    "arrivals", "types", "lifetimes",
)


class RandomStreams:
    """Independent Philox generators, one per random quantity."""

    def __init__(self, seed: int):
        self.seed = seed
        children = np.random.SeedSequence(seed).spawn(len(STREAM_NAMES))
        self._streams = {name: np.random.Generator(np.random.Philox(ss)) for name, ss in zip(STREAM_NAMES, children)}

    def __getitem__(self, name: str) -> np.random.Generator:
        return self._streams[name]


# Request characteristics of the 3-tier web application.
INTER_ARRIVAL = DistSpec.lognormal(1.5627, 1.5458)
PACKET_SIZES = {
    "ch1": DistSpec.lognormal(5.6129, 0.1343),
    "ch2": DistSpec.lognormal(4.6455, 0.8013),
    "ch3": DistSpec.lognormal(3.6839, 0.8261),
    "ch4": DistSpec.lognormal(7.0104, 0.8481),
}
WORKLOAD_SIZES = DistSpec.pareto(12.3486, 0.9713)

# Packet-size row used by each (class, leg) of a request.
SIZE_ROWS = {
    (RequestClass.NORMAL, "web_app"): "ch1",
    (RequestClass.NORMAL, "app_db"): "ch2",
    (RequestClass.PRIORITY, "web_app"): "ch3",
    (RequestClass.PRIORITY, "app_db"): "ch4",
}

WEB, APP, DB = "web", "app", "db"
TRANSMISSIONS_PER_LEG = 2


@dataclass(frozen=True)
class VmType:
    name: str
    mips_per_core: float
    cores: int
    bandwidth_bps: float

    def spec(self, vm_id: str) -> VmSpec:
        return VmSpec(vm_id, self.name, self.mips_per_core, self.cores, self.bandwidth_bps)


VM_TYPES = (
    VmType("Web", 2000.0, 2, 100e6),
    VmType("App", 3000.0, 8, 100e6),
    VmType("DB", 2400.0, 8, 100e6),
    VmType("Proxy", 2000.0, 8, 500e6),
    VmType("Firewall", 3000.0, 8, 500e6),
)


def _arrival_times(rng: np.random.Generator, rate: float, duration: float, lognormal: bool) -> list[float]:
    if lognormal:
        # Log-normal gaps rescaled to the requested mean rate.
        scale = (1.0 / rate) / INTER_ARRIVAL.mean
        gap = lambda: sample(INTER_ARRIVAL, rng) * scale
    else:
        dist = DistSpec.exponential(rate)
        gap = lambda: sample(dist, rng)
    times, t = [], gap()
    while t < duration:
        times.append(t)
        t += gap()
    return times


def leg_channels(cfg: UseCase1Config, request_class: RequestClass) -> tuple[str, str]:
    cm = cfg.channel_map
    if request_class == RequestClass.PRIORITY:
        return cm.priority_web_app, cm.priority_app_db
    return cm.normal_web_app, cm.normal_app_db


def gen_usecase1(cfg: UseCase1Config) -> list[Request]:
    """Normal and priority Poisson streams of 3-tier web requests."""
    streams = RandomStreams(cfg.seed)
    requests = []
    for request_class, rate in ((RequestClass.NORMAL, cfg.normal_rate), (RequestClass.PRIORITY, cfg.priority_rate)):
        tag = request_class.value
        sizes, work = streams[f"sizes_{tag}"], streams[f"workloads_{tag}"]
        ch_web_app, ch_app_db = leg_channels(cfg, request_class)
        row_web_app = PACKET_SIZES[SIZE_ROWS[(request_class, "web_app")]]
        row_app_db = PACKET_SIZES[SIZE_ROWS[(request_class, "app_db")]]

        for i, t in enumerate(_arrival_times(streams[f"arrivals_{tag}"], rate, cfg.duration_s, cfg.lognormal_arrivals)):
            w_web, w_app, w_db = (sample(WORKLOAD_SIZES, work) for _ in range(3))
            s_req_wa = sample(row_web_app, sizes) * cfg.packet_size_scale
            s_req_ad = sample(row_app_db, sizes) * cfg.packet_size_scale
            s_rsp_ad = sample(row_app_db, sizes) * cfg.packet_size_scale
            s_rsp_wa = sample(row_web_app, sizes) * cfg.packet_size_scale
            activities = (
                Processing(WEB, w_web),
                Transmission(ch_web_app, s_req_wa),
                Processing(APP, w_app),
                Transmission(ch_app_db, s_req_ad),
                Processing(DB, w_db),
                Transmission(ch_app_db, s_rsp_ad),
                Transmission(ch_web_app, s_rsp_wa),
            )
            requests.append(Request(f"{tag}-{i:06d}", t, activities, request_class))
    requests.sort(key=lambda r: (r.submission_time, r.id))
    return requests


def gen_usecase2(cfg: UseCase2Config) -> list[VmRequest]:
    """Timed VM creations: exponential gaps, Pareto lifetimes, VM types drawn uniformly."""
    streams = RandomStreams(cfg.seed)
    gap = DistSpec.exponential(cfg.arrival_rate)
    life = DistSpec.pareto(cfg.life_location, cfg.life_shape)
    requests, t = [], 0.0
    for i in range(cfg.n_requests):
        t += sample(gap, streams["arrivals"])
        vm_type = VM_TYPES[int(streams["types"].integers(len(VM_TYPES)))]
        requests.append(VmRequest(f"vm{i:03d}", vm_type.spec(f"vm{i:03d}"), t, sample(life, streams["lifetimes"])))
    return requests


def dump_workload(items: Iterable[Request | VmRequest], fp: TextIO) -> None:
    for item in items:
        fp.write(json.dumps(item.to_dict(), sort_keys=True))
        fp.write("\n")


def load_workload(fp: TextIO) -> list[Request]:
    return [Request.from_dict(json.loads(line)) for line in fp if line.strip()]


def load_vm_requests(fp: TextIO) -> list[VmRequest]:
    return [VmRequest.from_dict(json.loads(line)) for line in fp if line.strip()]


def load_stream(fp: TextIO) -> tuple[list[Request], list[VmRequest]]:
    """Split a mixed JSON-lines file into requests and VM requests (lines with "activities" are requests)."""
    requests, vm_requests = [], []
    for lineno, line in enumerate(fp, start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as e:
            raise FormatError(e.msg, line=lineno) from e
        if not isinstance(data, dict):
            raise FormatError("expected an object", line=lineno)
        try:
            if "activities" in data:
                requests.append(Request.from_dict(data))
            else:
                vm_requests.append(VmRequest.from_dict(data))
        except FormatError as e:
            raise FormatError(str(e), line=lineno) from e
    return requests, vm_requests
