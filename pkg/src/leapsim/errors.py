"""Exception types raised by the simulator."""


class LeapsimError(Exception):
    """Base class for all package errors."""


class UnreachableConfiguration(LeapsimError):
    """The 5-bar loop cannot close for the requested motor angles."""


class DegenerateDenominator(LeapsimError):
    """Both half-angle forms of the closure solution are 0/0."""


class SingularConfiguration(LeapsimError):
    """The passive-angle closure Jacobian is rank deficient."""


class StepSizeUnderflow(LeapsimError):
    pass


class NonFiniteState(LeapsimError):
    pass


class NoFeasibleDesign(LeapsimError):
    pass


class ConfigParse(LeapsimError):
    pass


class ConfigInvariant(LeapsimError):
    """A loaded value violates a documented invariant.

    ``field`` names the offending key and ``invariant`` the rule.
    """

    def __init__(self, field, invariant, message=None):
        self.field = field
        self.invariant = invariant
        super().__init__(message or f"{field}: violates {invariant}")


class MalformedSummary(LeapsimError):
    pass
