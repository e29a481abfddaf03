"""Exception hierarchy shared by the solvers."""


class QoSDError(Exception):
    """Base class for every error raised by this package."""

    code = "error"


class InvalidInstance(QoSDError, ValueError):
    code = "invalid_instance"


class Unreachable(QoSDError):
    code = "unreachable"

    def __init__(self, source, target):
        super().__init__(f"node {target} is unreachable from node {source}")
        self.source = source
        self.target = target


class Saturated(QoSDError):
    """No increment with positive gain is left inside the box."""

    code = "saturated"


class NonTermination(QoSDError):
    code = "non_termination"


class TooLarge(QoSDError):
    code = "too_large"


class InfeasibleWithinCap(QoSDError):
    code = "infeasible_within_cap"


class Uncertified(QoSDError):
    code = "uncertified"


class UnboundedGain(QoSDError):
    code = "unbounded_gain"


class Disconnected(QoSDError):
    code = "disconnected"
