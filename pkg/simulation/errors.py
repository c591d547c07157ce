"""Exception hierarchy shared by the simulator modules."""


class SimulationError(Exception):
    """Base class for every error raised by the simulator."""


class ParameterError(SimulationError, ValueError):
    """An operation or scenario received parameters outside its domain."""


class ConsistencyError(SimulationError):
    """Accumulated results do not belong to the same experiment."""


class EmptyAccumulatorError(ConsistencyError):
    """A summary was requested before any trial was recorded."""


class EstimationError(SimulationError):
    """A diversity-order fit could not be computed from the sweep."""


class UsageError(SimulationError):
    """The command line or a config file is malformed."""
