from models.PlacementPolicy import PlacementPolicy


class WorstFitPolicy(PlacementPolicy):
    """Least loaded feasible host: largest idleness, ties by host id."""

    name = "worstfit"

    def score(self, idleness: float, host_id: str) -> tuple:
        return (-idleness, host_id)
