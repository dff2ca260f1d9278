"""Exception types shared across the pipeline.

The CLI maps these onto exit codes: usage problems exit 1, data problems
exit 2, numeric failures exit 3.
"""


class UsageError(Exception):
    """Bad invocation: unknown flag values, contradictory options, missing inputs."""


class DataError(Exception):
    """Input data cannot support the requested operation (wrong shape, too small, corrupt)."""


class NumericError(Exception):
    """A numeric invariant broke: NaN gradients, zero-norm vectors, undefined metrics."""
