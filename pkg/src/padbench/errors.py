"""Exception types raised by padbench.

Every error deliberately raised by this package derives from PadBenchError,
so callers (and the CLI) can distinguish diagnosed input problems from bugs.
"""


class PadBenchError(Exception):
    """Base class for all errors raised by padbench."""


class ValidationError(PadBenchError):
    """A value or combination of values violates a documented precondition."""


class FormatError(PadBenchError):
    """A file or byte stream does not conform to its documented layout.

    Where possible the message names the offending location (line number
    for text formats, byte offset for binary ones).
    """


class AlignmentError(PadBenchError):
    """Two collections that must be joined by id do not line up."""


class CoverageError(PadBenchError):
    """A protocol split references ids that the dataset does not contain."""


class DivergenceError(PadBenchError):
    """Training produced a non-finite parameter or loss.

    The message names the epoch at which the first non-finite value
    appeared so the run can be reproduced and the learning rate lowered.
    """
