from abc import ABC, abstractmethod
from typing import Sequence

from core.Errors import InvalidArgumentError, PlacementInfeasibleError
from topology.Topology import VmSpec


class PlacementPolicy(ABC):
    """Online bin-packing heuristic choosing a host for one VM at a time."""

    name: str = ""

    @abstractmethod
    def score(self, idleness: float, host_id: str) -> tuple:
        """Sort key; the feasible host with the smallest key wins."""
        pass

    def select_host(self, vm: VmSpec, hosts: Sequence["HostState"]) -> str:
        if not hosts:
            raise InvalidArgumentError("no hosts to choose from")
        feasible = [h for h in hosts if h.fits(vm)]
        if not feasible:
            raise PlacementInfeasibleError(vm.id)
        best = min(feasible, key=lambda h: self.score(h.idleness, h.host.id))
        return best.host.id


def get_policy(name: str) -> PlacementPolicy:
    from models.BestFitPolicy import BestFitPolicy
    from models.WorstFitPolicy import WorstFitPolicy

    policies = {p.name: p for p in (BestFitPolicy, WorstFitPolicy)}
    key = name.replace("_", "").replace("-", "").lower()
    if key not in policies:
        raise InvalidArgumentError(f"unknown placement policy {name!r}; expected one of {sorted(policies)}")
    return policies[key]()
