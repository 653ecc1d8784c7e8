from models.PlacementPolicy import PlacementPolicy


class BestFitPolicy(PlacementPolicy):
    """Most utilized feasible host: smallest idleness, ties by host id."""

    name = "bestfit"

    def score(self, idleness: float, host_id: str) -> tuple:
        return (idleness, host_id)
