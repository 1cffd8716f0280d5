"""Exception hierarchy shared across the package."""


class StpolarError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(StpolarError):
    """Invalid experiment configuration (CLI exit code 2)."""


class ConstraintError(StpolarError):
    """A code parameterization violates its family constraints."""


class RankDeficiencyError(ConstraintError):
    """Mixing matrix of a parameterized code is singular."""


class CodebookTooLargeError(StpolarError):
    """Requested codebook exceeds the enumeration guard."""


class MissingContextError(StpolarError):
    """A pairwise measure needs context (noise level, q, ...) that was not given."""


class DegenerateMomentsError(StpolarError):
    """Moment-matched bound got nonpositive moments."""


class NoFeasibleRatesError(StpolarError):
    """Outage rate rule could not satisfy the rate target before the outage cap."""


class TargetNotReachedError(StpolarError):
    """SNR line search exhausted its grid without meeting the target."""

    def __init__(self, message, best_snr_db=None, best_value=None):
        super().__init__(message)
        self.best_snr_db = best_snr_db
        self.best_value = best_value


class EvaluationError(StpolarError):
    """An optimizer objective returned a non-finite value."""

    def __init__(self, message, position=None, iteration=None):
        super().__init__(message)
        self.position = position
        self.iteration = iteration
