"""Exception hierarchy for solver failures.

Construction-time precondition violations (bad shapes, odd-length moment
vectors, repeated nodes where distinct ones are required) raise plain
ValueError; the classes below mark failures of the mathematical problem
itself and carry CLI exit-code semantics (Unsolvable -> 2, the rest -> 3).
"""


class PronykitError(Exception):
    """Base class for all solver-level failures."""


class Unsolvable(PronykitError):
    """The moment vector lies on an unsolvable stratum (leading minor vanishes)."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SingularSystem(PronykitError):
    """Linear coefficient system is singular; node list must be merged first."""


class RootFindingFailure(PronykitError):
    """Polynomial root extraction did not converge."""


class ResidualTooLarge(PronykitError):
    """Round-trip moment residual above tolerance; multiplicity clustering failed."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class IllConditionedDDSystem(PronykitError):
    """The finite-difference moment system is numerically singular."""

    def __init__(self, message, condition_number=None):
        super().__init__(message)
        self.condition_number = condition_number


class DegenerateInput(PronykitError):
    """Input violates the non-degeneracy needed by the operation (collided nodes, zero leading coefficient)."""


class PronyFailure(PronykitError):
    """First-stage jump detection failed; caller may retry with more coefficients."""


class NoRootNearCircle(PronykitError):
    """No root of the elimination polynomial lies within 0.5 of the unit circle."""


class BranchAmbiguity(PronykitError):
    """The prior does not discriminate between adjacent N-th root branches."""

    def __init__(self, message, candidates=None):
        super().__init__(message)
        self.candidates = candidates


class ReconstructionError(PronykitError):
    """Per-jump failure inside the reconstruction pipeline, with the jump index attached."""

    def __init__(self, jump_index, cause):
        super().__init__(f"jump {jump_index}: {cause}")
        self.jump_index = jump_index
        self.cause = cause
