"""Exception hierarchy shared across the harness.

Three broad families map onto the command-line exit codes: configuration
problems (exit 2), data integrity problems (exit 3), and numerical failures
(exit 4). Library code raises the most specific subtype it can.
"""


class HarnessError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(HarnessError):
    """Invalid configuration: bad thresholds, ranges, flags, or option values."""


class InsufficientDataError(ConfigurationError):
    """An operation was asked to run on too little data to be meaningful."""


class DataIntegrityError(HarnessError):
    """Input data is malformed, inconsistent, or fails a declared invariant."""


class ParseError(DataIntegrityError):
    """A text input (pose file, manifest) could not be parsed."""

    def __init__(self, source: str, line: int | None, message: str):
        self.source = source
        self.line = line
        where = f"{source}, line {line}" if line is not None else source
        super().__init__(f"{where}: {message}")


class UnsupportedCameraModelError(DataIntegrityError):
    """A camera model other than the supported pinhole variants was found."""


class PoseValidityError(DataIntegrityError):
    """A parsed rotation is too far from orthonormal to be trusted."""


class FormatError(DataIntegrityError):
    """A binary file does not follow the descriptor/correspondence layout."""


class TruncationError(FormatError):
    """A binary file ended before the advertised payload was complete."""


class DegenerateDescriptorError(DataIntegrityError):
    """A descriptor row has zero norm and cannot enter cosine similarity."""


class NumericalError(HarnessError):
    """A numerical routine could not produce a usable result."""


class DegenerateSampleError(NumericalError):
    """A minimal sample led to a rank-deficient or unpivotable system."""


class EstimationFailedError(NumericalError):
    """Robust estimation finished without finding any acceptable model."""


class CheiralityAmbiguousError(NumericalError):
    """No decomposition candidate won a strict majority of the depth vote."""
