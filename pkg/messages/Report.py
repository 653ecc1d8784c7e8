from dataclasses import dataclass, field

import numpy as np

from messages.Request import RequestClass

CSV_COLUMNS = ("request_id", "class", "submit_s", "finish_s", "response_s")


@dataclass(frozen=True)
class RequestRecord:
    request_id: str
    request_class: RequestClass
    submit_s: float
    finish_s: float

    @property
    def response_s(self) -> float:
        return self.finish_s - self.submit_s

    def to_row(self) -> list[str]:
        return [self.request_id, self.request_class.value, repr(self.submit_s), repr(self.finish_s), repr(self.response_s)]


@dataclass(frozen=True)
class ClassStats:
    count: int
    mean: float | None
    median: float | None
    p95: float | None

    @classmethod
    def of(cls, values: list[float]) -> "ClassStats":
        if not values:
            return cls(0, None, None, None)
        arr = np.asarray(values, dtype=float)
        return cls(len(values), float(np.mean(arr)), float(np.median(arr)), float(np.percentile(arr, 95)))


@dataclass
class RunReport:
    scenario: str
    seed: int
    config: dict
    records: list[RequestRecord] = field(default_factory=list)
    energy: dict = field(default_factory=dict)
    rejected_vms: int = 0

    def stats(self) -> dict[str, ClassStats]:
        by_class = {c.value: [] for c in RequestClass}
        for r in self.records:
            by_class[r.request_class.value].append(r.response_s)
        return {c: ClassStats.of(v) for c, v in by_class.items()}

    @property
    def max_hosts(self) -> int:
        return self.energy.get("max_hosts", 0)

    def mean_response(self, request_class: RequestClass | str) -> float | None:
        key = request_class.value if isinstance(request_class, RequestClass) else request_class
        return self.stats()[key].mean

    def to_summary(self) -> dict:
        stats = self.stats()
        summary = dict(self.energy)
        summary["mean_response_s"] = {c: s.mean for c, s in stats.items()}
        summary["median_response_s"] = {c: s.median for c, s in stats.items()}
        summary["p95_response_s"] = {c: s.p95 for c, s in stats.items()}
        summary["completed"] = {c: s.count for c, s in stats.items()}
        summary["rejected_vms"] = self.rejected_vms
        summary["scenario"] = self.scenario
        summary["seed"] = self.seed
        summary["config"] = self.config
        return summary
