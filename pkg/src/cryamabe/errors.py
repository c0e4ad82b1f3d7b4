"""Exception hierarchy."""


class CRYamabeError(Exception):
    pass


class ConfigurationError(CRYamabeError, ValueError):
    """Invalid grid dimensions or run configuration."""


class UsageError(CRYamabeError, ValueError):
    """An operation was called outside its preconditions."""


class DataError(CRYamabeError, ValueError):
    """Non-finite or malformed field data."""


class ParameterError(CRYamabeError, ValueError):
    """Initial-data parameters outside the admissible region."""


class NumericalConsistencyError(CRYamabeError, ArithmeticError):
    """A quantity that must be real carries a large imaginary residue."""


class HypothesisError(CRYamabeError, ValueError):
    """Positivity of the curvature (needed by the Harnack estimates) fails."""


class StepFailure(CRYamabeError, ArithmeticError):
    """A time step produced non-finite values.

    ``last_state`` holds the last state whose fields were all finite.
    """

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class ReachabilityError(CRYamabeError, RuntimeError):
    """No optimizer start met the endpoint tolerance."""

    def __init__(self, message, best_defect=float("inf")):
        super().__init__(message)
        self.best_defect = best_defect
