from dataclasses import asdict, dataclass, field
import os

from dotenv import load_dotenv

from core.Errors import InvalidArgumentError


@dataclass
class Settings:
    output_dir: str = "output"
    log_level: str = "INFO"
    workers: int = 1

    @classmethod
    def from_env(cls) -> "Settings":
        load_dotenv()
        return cls(
            output_dir=os.environ.get("SDCSIM_OUTPUT_DIR", cls.output_dir),
            log_level=os.environ.get("SDCSIM_LOG_LEVEL", cls.log_level).upper(),
            workers=int(os.environ.get("SDCSIM_WORKERS", cls.workers)),
        )


@dataclass
class PowerConfig:
    # Linear power model constants per host.
    p_idle_w: float = 100.0
    p_peak_w: float = 250.0

    def __post_init__(self):
        if not 0 <= self.p_idle_w <= self.p_peak_w:
            raise InvalidArgumentError(f"need 0 <= p_idle ({self.p_idle_w}) <= p_peak ({self.p_peak_w})")

    @classmethod
    def from_env(cls) -> "PowerConfig":
        load_dotenv()
        return cls(
            p_idle_w=float(os.environ.get("SDCSIM_P_IDLE_W", cls.p_idle_w)),
            p_peak_w=float(os.environ.get("SDCSIM_P_PEAK_W", cls.p_peak_w)),
        )

    def to_dict(self):
        return asdict(self)


@dataclass
class EngineConfig:
    # Short CPU burst a middlebox spends on each packet before forwarding it.
    middlebox_burst_mi: float = 100.0
    trace_path: str | None = None

    def to_dict(self):
        return asdict(self)


CONGESTION_RATES = {"low": 100.0, "medium": 250.0, "high": 500.0}


@dataclass
class ChannelMap:
    """Which vlink carries each leg of the 3-tier request, per request class."""
    normal_web_app: str = "ch1"
    normal_app_db: str = "ch2"
    priority_web_app: str = "ch3"
    priority_app_db: str = "ch4"

    def to_dict(self):
        return asdict(self)


@dataclass
class UseCase1Config:
    congestion: str = "medium"
    priority: bool = True
    seed: int = 0
    duration_s: float = 10.0
    n_hosts: int = 3
    hosts_per_edge: int = 2
    link_capacity_bps: float = 1e9
    link_latency_s: float = 0.001
    host_cores: int = 16
    host_mips_per_core: float = 40000.0
    # Bytes per unit of the packet-size distributions.
    packet_size_scale: float = 256.0
    normal_rates: dict[str, float] = field(default_factory=lambda: dict(CONGESTION_RATES))
    priority_rate: float = 100.0
    # None splits priority_link_share of the link between the priority channels.
    reservation_bps: float | None = None
    priority_link_share: float = 0.81
    standard_vlink_bps: float = 1e6
    lognormal_arrivals: bool = False
    channel_map: ChannelMap = field(default_factory=ChannelMap)
    engine: EngineConfig = field(default_factory=EngineConfig)
    power: PowerConfig = field(default_factory=PowerConfig)

    def __post_init__(self):
        if self.congestion not in self.normal_rates:
            raise InvalidArgumentError(f"congestion must be one of {sorted(self.normal_rates)}, got {self.congestion!r}")
        if self.duration_s <= 0:
            raise InvalidArgumentError("duration_s must be > 0")
        if self.reservation_bps is not None and self.reservation_bps <= 0:
            raise InvalidArgumentError("reservation_bps must be > 0")
        if not 0.0 < self.priority_link_share < 1.0:
            raise InvalidArgumentError("priority_link_share must be in (0, 1)")

    @property
    def normal_rate(self) -> float:
        return self.normal_rates[self.congestion]

    @property
    def name(self) -> str:
        return f"usecase1-{self.congestion}-{'priority' if self.priority else 'standard'}"

    def to_dict(self):
        return asdict(self)


@dataclass
class UseCase2Config:
    policy: str = "bestfit"
    seed: int = 0
    n_requests: int = 100
    n_hosts: int = 40
    hosts_per_edge: int = 4
    host_cores: int = 16
    host_mips_per_core: float = 4000.0
    link_capacity_bps: float = 1e9
    link_latency_s: float = 0.001
    arrival_rate: float = 1.0 / 60.0
    life_location: float = 2000.0
    life_shape: float = 1.5
    power: PowerConfig = field(default_factory=PowerConfig)

    def __post_init__(self):
        if self.n_requests < 0:
            raise InvalidArgumentError("n_requests must be >= 0")

    @property
    def name(self) -> str:
        return f"usecase2-{self.policy}"

    def to_dict(self):
        return asdict(self)


@dataclass
class ScenarioConfig:
    """A user-supplied scenario: topology files plus a request stream."""
    physical_path: str
    virtual_path: str
    workload_path: str
    seed: int = 0
    until: float | None = None
    policy: str = "bestfit"
    name: str = "run"
    engine: EngineConfig = field(default_factory=EngineConfig)
    power: PowerConfig = field(default_factory=PowerConfig)

    def to_dict(self):
        return asdict(self)
