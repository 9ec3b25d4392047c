"""Exception hierarchy shared across the pipeline."""


class Fp2TrsError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(Fp2TrsError):
    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"{line}:{col}: {message}"
        super().__init__(message)


class UnboundVariableError(ParseError):
    pass


class TypeInferenceError(Fp2TrsError):
    pass


class InvalidPositionError(Fp2TrsError):
    pass


class FuelExhaustedError(Fp2TrsError):
    """Raised when a fuel bound is hit; carries whatever partial result exists."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class StuckTermError(Fp2TrsError):
    """A defined symbol could not be reduced; signals a frontend or pipeline bug."""


class AmbiguityError(Fp2TrsError):
    def __init__(self, message, overlaps=()):
        super().__init__(message)
        self.overlaps = list(overlaps)


class HeadVariablePresentError(Fp2TrsError):
    def __init__(self, message, sites=()):
        super().__init__(message)
        self.sites = list(sites)


class SaturationDivergedError(FuelExhaustedError):
    pass


class UncoveredHeadVariableError(Fp2TrsError):
    """A head variable has no surviving binder; instantiation cannot proceed."""


class FormatConstraintError(Fp2TrsError):
    pass
