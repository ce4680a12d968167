"""Exception hierarchy shared by all permadyn modules."""


class PermadynError(Exception):
    """Base class for every error raised by this package."""


# state_space
class BlochOutOfBody(PermadynError, ValueError):
    pass


class NotPositive(PermadynError, ValueError):
    pass


class DomainError(PermadynError, ValueError):
    pass


# meanfield / integrator
class StepSizeUnderflow(PermadynError, RuntimeError):
    pass


class BlochEscape(PermadynError, RuntimeError):
    pass


class TransientNotConverged(PermadynError, RuntimeError):
    pass


class AverageNotConverged(PermadynError, RuntimeError):
    pass


# lmg / floquet
class NoCycle(PermadynError, ValueError):
    pass


class Degenerate(PermadynError, RuntimeError):
    pass


# dicke solver / oracle
class CGNotConverged(PermadynError, RuntimeError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class NonUniqueNullSpace(PermadynError, RuntimeError):
    pass


class SingularRateMatrix(PermadynError, RuntimeError):
    pass


class DimensionCapExceeded(PermadynError, MemoryError):
    """Raised instead of allocating a Liouvillian above the memory cap."""


# ground state
class DegenerateGround(PermadynError, RuntimeError):
    pass


class ConfigError(PermadynError, ValueError):
    pass
