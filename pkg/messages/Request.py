import math
from dataclasses import dataclass
from enum import Enum

from core.Errors import FormatError, InvalidArgumentError
from topology.Topology import VmSpec


class RequestClass(str, Enum):
    NORMAL = "normal"
    PRIORITY = "priority"


def _number(obj: dict, key: str, where: str) -> float:
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise FormatError("expected a finite number", field=f"{where}.{key}")
    return value


def _positive(obj: dict, key: str, where: str) -> float:
    value = _number(obj, key, where)
    if value <= 0:
        raise FormatError("must be > 0", field=f"{where}.{key}")
    return value


@dataclass(frozen=True)
class Processing:
    vm_id: str
    workload_mi: float

    def __post_init__(self):
        if not self.workload_mi > 0:
            raise InvalidArgumentError(f"processing on {self.vm_id}: workload must be > 0")

    def to_dict(self):
        return {"kind": "processing", "vm": self.vm_id, "workload_mi": self.workload_mi}


@dataclass(frozen=True)
class Transmission:
    channel_id: str
    packet_size_bytes: float

    def __post_init__(self):
        if not self.packet_size_bytes > 0:
            raise InvalidArgumentError(f"transmission on {self.channel_id}: packet size must be > 0")

    def to_dict(self):
        return {"kind": "transmission", "channel": self.channel_id, "packet_size_bytes": self.packet_size_bytes}


Activity = Processing | Transmission


@dataclass(frozen=True)
class PacketDescriptor:
    sender: str
    destination: str
    size_bytes: float


@dataclass(frozen=True)
class Request:
    id: str
    submission_time: float
    activities: tuple[Activity, ...]
    request_class: RequestClass = RequestClass.NORMAL

    def __post_init__(self):
        if not self.activities:
            raise InvalidArgumentError(f"request {self.id} has no activities")

    def to_dict(self):
        return {
            "id": self.id,
            "submission_time": self.submission_time,
            "class": self.request_class.value,
            "activities": [a.to_dict() for a in self.activities],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Request":
        try:
            rid = data["id"]
            activities = []
            for i, a in enumerate(data["activities"]):
                where = f"{rid}.activities[{i}]"
                if a["kind"] == "processing":
                    activities.append(Processing(a["vm"], _positive(a, "workload_mi", where)))
                elif a["kind"] == "transmission":
                    activities.append(Transmission(a["channel"], _positive(a, "packet_size_bytes", where)))
                else:
                    raise FormatError(f"unknown activity kind {a['kind']!r}", field="activities")
            submitted = _number(data, "submission_time", rid)
            if submitted < 0:
                raise FormatError("must be >= 0", field=f"{rid}.submission_time")
            return cls(rid, submitted, tuple(activities), RequestClass(data.get("class", "normal")))
        except KeyError as e:
            raise FormatError(f"missing field {e}") from None
        except TypeError:
            raise FormatError("malformed request") from None
        except ValueError as e:
            if isinstance(e, FormatError):
                raise
            raise FormatError(str(e)) from None


@dataclass(frozen=True)
class VmRequest:
    """A timed VM creation with a lifetime, destroyed when the lifetime expires."""
    id: str
    vm: VmSpec
    start_time: float
    lifetime: float

    def __post_init__(self):
        if not self.lifetime > 0:
            raise InvalidArgumentError(f"vm request {self.id}: lifetime must be > 0")

    @property
    def end_time(self) -> float:
        return self.start_time + self.lifetime

    def to_dict(self):
        return {
            "id": self.id,
            "type": self.vm.type_name,
            "mips_per_core": self.vm.mips_per_core,
            "cores": self.vm.cores,
            "bandwidth_bps": self.vm.bandwidth_bps,
            "start_time": self.start_time,
            "lifetime": self.lifetime,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "VmRequest":
        try:
            vid = data["id"]
            cores = data["cores"]
            if isinstance(cores, bool) or not isinstance(cores, int) or cores < 1:
                raise FormatError("expected a positive integer", field=f"{vid}.cores")
            vm = VmSpec(vid, data["type"], _positive(data, "mips_per_core", vid), cores,
                        _positive(data, "bandwidth_bps", vid))
            start = _number(data, "start_time", vid)
            if start < 0:
                raise FormatError("must be >= 0", field=f"{vid}.start_time")
            return cls(vid, vm, start, _positive(data, "lifetime", vid))
        except KeyError as e:
            raise FormatError(f"missing field {e}") from None
