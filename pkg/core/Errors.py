from enum import Enum


class InfeasibleReason(str, Enum):
    BANDWIDTH = "bandwidth"
    LATENCY = "latency"
    DISCONNECTED = "disconnected"


class SimulationError(Exception):
    """Base class for every error raised by the simulator."""
    exit_code = 4


class InvalidArgumentError(SimulationError, ValueError):
    exit_code = 2


class FormatError(SimulationError, ValueError):
    exit_code = 2

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class ValidationError(SimulationError, ValueError):
    exit_code = 2

    def __init__(self, message: str, report=None):
        self.report = report
        super().__init__(message)


class EmbeddingInfeasibleError(SimulationError):
    exit_code = 3

    def __init__(self, reason: InfeasibleReason, element_id: str | None = None, detail: str = ""):
        self.reason = reason
        self.element_id = element_id
        self.detail = detail
        msg = f"embedding infeasible ({reason.value})"
        if element_id:
            msg += f" for {element_id}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class PlacementInfeasibleError(SimulationError):
    exit_code = 3

    def __init__(self, element_id: str, detail: str = "no feasible host"):
        self.element_id = element_id
        super().__init__(f"placement infeasible for {element_id}: {detail}")


class ConflictError(SimulationError):
    pass


class NotFoundError(SimulationError, KeyError):

    def __str__(self):
        return str(self.args[0]) if self.args else "not found"


class ChannelBusyError(SimulationError):
    pass


class InternalInconsistencyError(SimulationError):
    pass
