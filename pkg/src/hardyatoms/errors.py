"""Exception hierarchy shared by all modules."""


class HardyAtomsError(Exception):
    """Base class for errors raised by this package."""


class DomainError(HardyAtomsError, ValueError):
    """An argument lies outside the admissible domain of an operation."""


class UnsupportedTermError(HardyAtomsError):
    """A closed form would leave the representable term class."""


class InfeasibleError(HardyAtomsError):
    """The moment constraints admit only the zero function."""


class NumericalRankError(HardyAtomsError):
    """The moment matrix is rank-deficient beyond tolerance."""


class DivergenceError(HardyAtomsError):
    """An integral over an unbounded tail is infinite."""


class PreconditionError(HardyAtomsError, ValueError):
    """An operation was called with an argument that violates its contract."""
