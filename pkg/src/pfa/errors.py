"""Exception hierarchy.

Every error carries a short machine-readable ``code`` that the CLI prints on
standard error. ``UsageError`` subclasses map to exit status 1, everything
else to exit status 2.
"""


class PfaError(Exception):
    code = "error"


class UsageError(PfaError):
    code = "usage_error"


class DataError(PfaError, ValueError):
    code = "data_error"


class NotSymmetric(DataError):
    code = "not_symmetric"


class NotUnitDiagonal(DataError):
    code = "not_unit_diagonal"


class IndefiniteBeyondTolerance(DataError):
    code = "indefinite_beyond_tolerance"


class InvalidEpsilon(UsageError, ValueError):
    code = "invalid_epsilon"


class DegenerateColumn(DataError):
    code = "degenerate_column"


class DimensionMismatch(DataError):
    code = "dimension_mismatch"


class RankDeficientLoadings(DataError):
    code = "rank_deficient_loadings"


class NonConvergence(PfaError, RuntimeError):
    code = "non_convergence"


class DomainError(DataError):
    code = "domain_error"


class MissingMask(DataError):
    code = "missing_mask"


class TargetUnreachable(DataError):
    code = "target_unreachable"


class InvalidSpec(UsageError, ValueError):
    code = "invalid_spec"


class IoError(DataError, OSError):
    code = "io_error"


class RaggedRows(DataError):
    code = "ragged_rows"

    def __init__(self, path, row, expected, found):
        self.row = row
        super().__init__(
            f"{path}: row {row} has {found} cells, expected {expected}"
        )


class NonNumericCell(DataError):
    code = "non_numeric_cell"

    def __init__(self, path, row, col, text, reason="not a number"):
        self.row = row
        self.col = col
        super().__init__(f"{path}: row {row}, column {col}: {text!r} is {reason}")
