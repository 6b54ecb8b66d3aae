"""Exception types shared across the package."""


class McisError(Exception):
    """Base class for all package-specific errors."""


class EmptyAggregate(McisError):
    """An aggregate (mean, counterfactual embedding) was requested over nothing."""


class DimMismatch(McisError):
    """Vector/matrix shapes do not conform."""


class NumericOverflow(McisError):
    """A non-finite value appeared where finite arithmetic is required."""


class SpecInfeasible(McisError):
    """Generator parameters cannot be satisfied (e.g. unreachable label skew)."""


class ParseError(McisError):
    """A corpus/prediction file line failed to parse."""

    def __init__(self, message, line_no=None):
        super().__init__(message if line_no is None else f"line {line_no}: {message}")
        self.line_no = line_no


class SchemaError(McisError):
    """Structurally valid file whose contents are internally inconsistent."""


class UnknownToken(McisError):
    """A token has no embedding row and no [UNK] fallback exists."""


class TrainingDiverged(McisError):
    """Training loss became non-finite."""


class CheckpointError(McisError):
    """Checkpoint file unreadable or incomplete."""


class DegenerateValidation(McisError):
    """Validation labels lack both polarities, so sign metrics are undefined."""


class LengthMismatch(McisError):
    """Paired prediction/gold sequences differ in length."""


class ConventionMismatch(McisError):
    """Two reports computed under different binarization conventions."""


class PipelineStageError(McisError):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
