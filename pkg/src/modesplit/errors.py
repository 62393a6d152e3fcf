"""Exception taxonomy for the modesplit package."""


class ModesplitError(Exception):
    """Base class for all package errors."""


class InvalidMatrix(ModesplitError):
    """A matrix argument contains non-finite entries or is empty."""


class DimensionMismatch(ModesplitError):
    """Matrix or subspace dimensions are inconsistent."""


class NotRightInvertible(ModesplitError):
    """A matrix required to have full row rank does not."""


class ParseError(ModesplitError):
    """Serialized input does not conform to the expected schema."""


class BadIndex(ModesplitError):
    """An output index is outside 1..p."""


class UnsupportedPencil(ModesplitError):
    """The system pencil has structure outside the supported class."""


class BadSpec(ModesplitError):
    """A problem specification is inconsistent with the system or itself."""


class InfeasibleCounts(ModesplitError):
    """The ground subspace is too small for the requested hidden count."""


class ProblemTooLarge(ModesplitError):
    """A power-set enumeration would exceed the entry cap."""


class InternalInconsistency(ModesplitError):
    """Two independent computations of the same object disagree."""


class SynthesisFailed(ModesplitError):
    """No feedback matrix was produced within the resampling budget."""


class VerificationFailed(ModesplitError):
    """A synthesized closed loop failed its independent verification."""


class NotStabilized(ModesplitError):
    """The closed-loop spectrum is not inside the stability region."""


class DefectiveClosedLoop(ModesplitError):
    """The closed-loop state matrix is too far from diagonalizable."""


class NoWitness(ModesplitError):
    """Random extraction found no independent transversal within budget."""
