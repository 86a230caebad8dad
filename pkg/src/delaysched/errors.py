"""Exception types shared across the package."""


class DelayschedError(Exception):
    pass


class NonErgodic(DelayschedError):
    """Channel chain is not irreducible and aperiodic."""


class InsufficientHistory(DelayschedError):
    """A delayed NSI read reaches past the recorded history."""


class NonDistinctDelays(DelayschedError):
    """Worst-case rearrangement requires all off-diagonal delays distinct."""


class BudgetExceeded(DelayschedError):
    """Exhaustive enumeration would exceed the configured budget.

    Carries the offending counts so callers can report them.
    """

    def __init__(self, message, counts=()):
        super().__init__(message)
        self.counts = tuple(counts)


class UnknownPreset(DelayschedError):
    pass


class TypicalityUnreachable(DelayschedError):
    """Rejection sampling could not produce a typical sequence."""


class EmptyServiceSet(DelayschedError):
    """No packet was serviced over the measurement horizon."""


class ConfigError(DelayschedError):
    """Experiment config file is malformed."""
