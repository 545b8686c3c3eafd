"""Error hierarchy shared by every app.

Each error knows the process exit status the CLI should use: 2 for anything
that a corrected configuration would avoid, 3 for numerical failures.
"""

CONFIG_EXIT_STATUS = 2
NUMERICAL_EXIT_STATUS = 3


class WaveStabError(Exception):
    """Base class for all wavestab errors"""
    exit_status = NUMERICAL_EXIT_STATUS

    def __init__(self, message, **context):
        super().__init__(message)
        self.message = message
        self.context = context

    def __str__(self):
        if not self.context:
            return self.message
        details = ", ".join(f"{key}={value}" for key, value in sorted(self.context.items()))
        return f"{self.message} ({details})"


class ParameterError(WaveStabError, ValueError):
    """Physical or numerical parameter outside its admissible range"""
    exit_status = CONFIG_EXIT_STATUS


class SizeError(WaveStabError, ValueError):
    """Mesh size, vector length or index count is wrong"""
    exit_status = CONFIG_EXIT_STATUS


class DomainError(WaveStabError, ValueError):
    """Formula evaluated outside the domain where it holds"""
    exit_status = CONFIG_EXIT_STATUS


class HorizonError(WaveStabError, ValueError):
    """Observation horizon too short"""
    exit_status = CONFIG_EXIT_STATUS


class FilterTooAggressive(WaveStabError):
    """The filtering threshold retains no mode at all"""
    exit_status = CONFIG_EXIT_STATUS


class ConvergenceError(WaveStabError):
    """A fixed-point iteration failed to converge"""


class NumericalFailure(WaveStabError):
    """A dense kernel failed; `partial` holds whatever was computed"""

    def __init__(self, message, partial=None, **context):
        super().__init__(message, **context)
        self.partial = partial


class ConsistencyError(WaveStabError):
    """Two provenances of the same quantity disagree"""


class ConditioningError(WaveStabError):
    """Eigenbasis too ill-conditioned for a reliable projection"""


class StepSizeError(WaveStabError):
    """Explicit integration blew up; the step is too large"""
