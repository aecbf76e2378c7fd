"""Exception hierarchy.

Every error raised by the package derives from :class:`CfqsimError`; the
``exit_code`` attribute is what the command-line front end returns.
"""


class CfqsimError(Exception):
    exit_code = 3


class UsageError(CfqsimError):
    exit_code = 2


class OutputError(CfqsimError):
    """Failure writing results (the CLI's I/O error class)."""

    exit_code = 4


class SimulationError(CfqsimError):
    """Base class for domain errors (exit code 3)."""


# optics
class UnknownMode(SimulationError, KeyError):
    pass


class TerminalModeReuse(SimulationError):
    pass


class NonFiniteAmplitude(SimulationError, ArithmeticError):
    pass


class MalformedCircuit(SimulationError):
    pass


class NotTerminal(SimulationError):
    pass


class WrongDirection(SimulationError):
    pass


class NegativeProbability(SimulationError, ValueError):
    pass


# protocol
class InvalidParams(SimulationError, ValueError):
    pass


class LossUnsupportedHere(SimulationError):
    pass


class RetriesExhausted(SimulationError):
    pass


class EmptyAfterPostselection(SimulationError):
    pass


# path criteria
class ZeroPostselectionProbability(SimulationError):
    pass


class MalformedFamily(SimulationError):
    pass
