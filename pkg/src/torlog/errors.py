"""Exception hierarchy.

Every error carries the CLI exit code it maps to, so the command-line
layer can translate any module failure without a lookup table.
"""


class TorlogError(Exception):
    exit_code = 4


class InvalidInput(TorlogError):
    exit_code = 2


class HemisphereViolation(InvalidInput):
    """Directions all lie in some closed half-circle."""


class DegenerateBody(InvalidInput):
    """Halfplane intersection has empty interior."""


class OriginOutside(InvalidInput):
    pass


class OutsideDomain(InvalidInput):
    """A slack h_k - gamma . v_k is not strictly positive."""


class InvalidSchedule(InvalidInput):
    pass


class MeshMismatch(TorlogError):
    pass


class FacetLost(TorlogError):
    pass


class SolverDivergence(TorlogError):
    pass


class NoConvergence(TorlogError):
    exit_code = 3


class MaxIterations(NoConvergence):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SamplingFailure(TorlogError):
    pass


class QuadratureFailure(TorlogError):
    pass
