"""
Error hierarchy shared by the services and the command-line front end.

Each family maps to one process exit status in `app.main`:

- InvalidInputError (and UnsupportedModeError): 1, same as a usage error
- NumericalError (and StabilityError): 2
- OutputError: 3
- ReplicationError: the status of its cause, 2 when the cause is unknown
"""


class EarlyStopError(Exception):
    """Base class of every error raised on purpose by this package."""


class InvalidInputError(EarlyStopError, ValueError):
    """An argument violates an operation's precondition."""


class UnsupportedModeError(InvalidInputError):
    """Continuous time was requested where only integer iterations are defined."""


class NumericalError(EarlyStopError, ArithmeticError):
    """A numerical routine failed; `report` carries diagnostic details."""

    def __init__(self, message: str, report: dict | None = None):
        super().__init__(message)
        self.report = report or {}

    def __reduce__(self):
        return self.__class__, (str(self), self.report)


class StabilityError(NumericalError):
    """Landweber step size too large for the spectrum (eta * lambda_1 >= 2)."""


class OutputError(EarlyStopError, OSError):
    """Results could not be written."""


class ReplicationError(EarlyStopError):
    """A Monte Carlo replication failed; the cause is chained."""

    def __init__(self, message: str, seed: int, index: int):
        super().__init__(f"{message} (seed={seed}, replication={index})")
        self.message = message
        self.seed = seed
        self.index = index

    def __reduce__(self):
        # worker processes send exceptions back pickled
        return self.__class__, (self.message, self.seed, self.index)
