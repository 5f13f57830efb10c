"""Exception types shared across the toolkit."""


class FaceHallError(Exception):
    """Base class for all toolkit errors."""


class LandmarkError(FaceHallError, ValueError):
    """Malformed or out-of-bounds landmark data.

    Carries the 1-based line number of the offending line when the
    failure is tied to a specific line of the file.
    """

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class FormatError(FaceHallError, ValueError):
    """Corrupt or unrecognized binary file contents."""


class CategoryMismatchError(FormatError):
    """A model or database file holds a different component category."""


class CoverageError(FaceHallError, ValueError):
    """Stitching input leaves canvas pixels uncovered."""


class SingularSystemError(FaceHallError, ValueError):
    """A linear system has no unique solution (zero regularization)."""


class PipelineError(FaceHallError, RuntimeError):
    """A pipeline stage cannot run (missing model, database, or input)."""
