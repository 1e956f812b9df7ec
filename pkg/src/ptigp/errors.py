"""Exception hierarchy.

Everything raised on purpose by the package derives from :class:`PTError`.
Physics-domain failures map to CLI exit code 2, configuration problems to 3.
"""


class PTError(Exception):
    """Base class for package errors."""

    exit_code = 2


# -- linear algebra ---------------------------------------------------------

class LinearAlgebraError(PTError, ValueError):
    pass


class NonConvergence(LinearAlgebraError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NotHermitian(LinearAlgebraError):
    pass


class NotPositiveDefinite(LinearAlgebraError):
    pass


class SingularMatrix(LinearAlgebraError):
    pass


# -- physics ----------------------------------------------------------------

class PhysicsError(PTError):
    pass


class MetricNotPositive(PhysicsError):
    pass


class DegenerateSpectrum(PhysicsError):
    pass


class BrokenPTPhase(PhysicsError):
    pass


class LevelOrderSwap(PhysicsError):
    pass


class ZeroOverlap(PhysicsError):
    pass


class StepTooCoarse(PhysicsError):
    pass


class ImaginaryLeak(PhysicsError):
    pass


class AdiabaticityBreakdown(PhysicsError):
    """Raised when the driven state leaks out of the tracked level.

    Carries the partial result so callers can still report it.
    """

    def __init__(self, message, leaked_population, total_phase):
        super().__init__(message)
        self.leaked_population = leaked_population
        self.total_phase = total_phase


class NotTwoLevel(PhysicsError):
    pass


class UnsupportedParameters(PhysicsError):
    pass


# -- configuration ----------------------------------------------------------

class ConfigError(PTError):
    exit_code = 3
