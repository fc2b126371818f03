"""Exception hierarchy shared by all survshape modules.

DataError covers malformed or degenerate inputs (CLI exit code 3),
NumericError covers runtime numeric failures (CLI exit code 4).
"""


class SurvShapeError(Exception):
    """Base class for all survshape errors."""


class DataError(SurvShapeError):
    """Invalid, inconsistent or degenerate input data."""


class GridDegenerateError(DataError):
    """Fewer than two distinct times: no interval partition exists."""


class EstimatorUndefinedError(DataError):
    """Cumulative-hazard estimator hit an empty risk set at an event time."""


class SchemaError(DataError):
    """CSV/schema mismatch: missing column, bad cell, unseen category."""


class AlignmentError(DataError):
    """Step functions live on different time grids; project first."""


class DiameterUndefinedError(DataError):
    """Perturbation scale needs >= 2 distinct points in feature space."""


class NumericError(SurvShapeError):
    """Non-finite values or numerically undefined results."""


class MetricUndefinedError(NumericError):
    """No admissible pairs: the concordance index has no value."""


class TrainingDivergedError(NumericError):
    """Training loss became non-finite."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []
