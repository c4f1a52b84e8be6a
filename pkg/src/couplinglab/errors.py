"""Exception types shared across the lab."""


class CouplingLabError(Exception):
    pass


class StructuralError(CouplingLabError):
    """Malformed input data: incomplete tables, non-bijective actions, bad subgroups."""


class DegenerateInputError(CouplingLabError):
    """Input is structurally valid but degenerate (e.g. zero-measure domain)."""


class ContractViolationError(CouplingLabError):
    """An operation precondition that should hold by construction was violated."""


class TagMismatchError(CouplingLabError):
    """Two values bound to incompatible contexts were combined."""


class NotAFactorError(CouplingLabError):
    """Algebra has nontrivial center; carries a central non-scalar witness."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class DiscretizationError(CouplingLabError):
    """A continuous parameter is not representable on the requested grid."""


class DimensionCapError(CouplingLabError):
    """Requested model exceeds the supported ambient dimension."""
