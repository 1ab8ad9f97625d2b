"""Exception hierarchy shared across the pipeline.

The CLI maps each family onto a stable exit code, so library code raises
the most specific class that applies.
"""


class FeedbackMLError(Exception):
    exit_code = 1


class ConfigError(FeedbackMLError, ValueError):
    """Bad configuration, usage, or missing/mismatched stage artifacts."""

    exit_code = 1


class DataError(FeedbackMLError, ValueError):
    """Input data that cannot be parsed or violates a data contract."""

    exit_code = 2


class NumericError(FeedbackMLError, ArithmeticError):
    """Non-finite values during training or optimisation."""

    exit_code = 3
