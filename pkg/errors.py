"""
Error Types
Every failure the library raises, grouped by the exit code the CLI reports
"""

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


class BfcsError(Exception):
    """Base class for all library errors"""
    exit_code = EXIT_UNEXPECTED


# ============================================================================
# USAGE
# ============================================================================

class ConfigError(BfcsError):
    """Invalid analysis parameters (e.g. nu < 3)"""
    exit_code = EXIT_USAGE


# ============================================================================
# NUMERICAL
# ============================================================================

class NumericalError(BfcsError):
    exit_code = EXIT_NUMERICAL


class SingularCorrelationError(NumericalError):
    """det(R) is at or below the singularity floor"""


class OutOfRangeError(NumericalError):
    """A correlation lies outside [-1, 1]"""


class DegeneratePriorError(NumericalError):
    """Every model with prior mass has zero evidence"""


class EmptyScanError(NumericalError):
    """No regular triplet was found during a scan"""


# ============================================================================
# DATA
# ============================================================================

class DataError(BfcsError):
    exit_code = EXIT_DATA


class DimensionMismatchError(DataError):
    pass


class NonNumericCellError(DataError):
    pass


class ConstantColumnError(DataError):
    pass


class PriorFileError(DataError):
    """Custom prior file is malformed, negative or all zero"""


class TooManyEdgesError(DataError):
    pass


class DegenerateLabelsError(DataError):
    """Curve needs both classes (or at least one positive) to be defined"""


class LabelMismatchError(DataError):
    """Predictions and ground truth cover different pair sets"""
