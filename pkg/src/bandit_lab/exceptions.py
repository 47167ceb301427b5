"""Exception hierarchy shared by all bandit_lab modules."""


class BanditLabError(Exception):
    """Base class for every error raised by bandit_lab."""


class ChainError(BanditLabError, ValueError):
    """A transition matrix fails one of the standing chain assumptions."""


class NotStochastic(ChainError):
    pass


class Reducible(ChainError):
    pass


class Periodic(ChainError):
    pass


class SingularSystem(ChainError):
    pass


class IrreducibilityViolated(ChainError):
    """The multiplicative symmetrization of an arm is reducible.

    Simulation on such an arm is fine; the regret-bound constants are not
    defined for it.
    """

    def __init__(self, message, arm_index=None):
        super().__init__(message)
        self.arm_index = arm_index


class ComplexSpectrum(ChainError):
    """The pi-conjugate of the matrix is not symmetric (non-reversible chain)."""


class AmbiguousOptimum(BanditLabError, ValueError):
    pass


class ProtocolViolation(BanditLabError, RuntimeError):
    """select_arm / observe were not called in strict alternation."""


class ScenarioFormatError(BanditLabError, ValueError):
    pass
