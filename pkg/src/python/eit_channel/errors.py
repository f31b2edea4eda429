"""Exception hierarchy and process exit codes."""

from enum import IntEnum
from typing import List, Optional, Sequence


class ExitCode(IntEnum):
    OK = 0
    CONFIG_ERROR = 2
    RUNTIME_ERROR = 3


class EitChannelError(Exception):
    """Base class for every error raised by eit_channel."""


class InvalidParametersError(EitChannelError, ValueError):
    """A physical parameter block violates its construction invariants."""


class DegenerateParametersError(EitChannelError):
    """The susceptibility denominator vanished."""


class ContractViolationError(EitChannelError):
    """Arguments are individually valid but do not belong together."""


class ParameterError(EitChannelError, ValueError):
    """A call argument is out of its admissible range."""


class NoDelayFoundError(EitChannelError):
    def __init__(self, peak: float, threshold: float):
        super().__init__(f"Correlation peak {peak:.3g} below significance threshold {threshold:.3g}")
        self.peak = peak
        self.threshold = threshold


class FitConvergenceError(EitChannelError):
    def __init__(self, msg: str, trace: Sequence[dict]):
        super().__init__(msg)
        self.trace = list(trace)


class DegenerateFitError(EitChannelError):
    def __init__(self, combination: Sequence[str]):
        names = " + ".join(combination)
        super().__init__(f"Jacobian is singular; unidentifiable parameter combination: {names}")
        self.combination = list(combination)


class ConfigError(EitChannelError):
    def __init__(self, msg: str, field: Optional[str] = None, line: Optional[int] = None,
                 errors: Optional[List[str]] = None):
        where = ""
        if line is not None:
            where = f" (line {line})"
        elif field:
            where = f" ({field})"
        super().__init__(f"{msg}{where}")
        self.field = field
        self.line = line
        self.errors = list(errors or [])


class OutputError(EitChannelError):
    """The output location cannot be written."""
