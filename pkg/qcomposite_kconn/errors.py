class QCompositeError(Exception):
    """Base class for errors raised by qcomposite_kconn."""


class InvalidArgumentError(QCompositeError, ValueError):
    """A precondition on the arguments of an operation was violated."""


class GraphDimensionError(QCompositeError, ValueError):
    """Two graphs with different node counts were combined."""


class ConnectivityInvariantError(QCompositeError, RuntimeError):
    """A sampled graph violated kappa <= min degree."""


class ResultsWriteError(QCompositeError, OSError):
    """Writing results to a destination failed."""

    def __init__(self, destination: str, cause: OSError) -> None:
        super().__init__(f"could not write results to {destination}: {cause}")
        self.destination = destination
        self.cause = cause
