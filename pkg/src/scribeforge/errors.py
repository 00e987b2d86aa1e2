"""Exception types shared across the package."""


class ScribeforgeError(Exception):
    """Base class for all library-specific errors."""


class PosteriorFormatError(ScribeforgeError):
    """Posterior dump is structurally invalid (magic, version, counts, row sums)."""


class AlignmentInfeasibleError(ScribeforgeError):
    """Transcript cannot be threaded through the available frames."""


class InvalidTranscriptError(ScribeforgeError):
    """Transcript contains characters outside the alphabet."""


class CorruptBoundaryError(ScribeforgeError):
    """Boundary record is inconsistent with its line's transcript."""

    def __init__(self, line_id: str, message: str):
        super().__init__(f"line {line_id!r}: {message}")
        self.line_id = line_id


class UnsynthesizableLineError(ScribeforgeError):
    """Corpus line contains characters with no image fragments at all."""

    def __init__(self, missing_chars):
        self.missing_chars = sorted(set(missing_chars))
        super().__init__(
            "no fragments for characters: " + ", ".join(repr(c) for c in self.missing_chars)
        )


class UndefinedDenominatorError(ScribeforgeError):
    """Metric denominator is zero (no reference content to normalize by)."""
