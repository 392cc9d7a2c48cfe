"""Exception hierarchy shared by all stages.

Exit-code mapping used by the CLI: usage errors exit 1, data/contract
errors exit 2, numerical failures exit 3.
"""


class VitalTraceError(Exception):
    exit_code = 1


class UsageError(VitalTraceError):
    """Bad configuration or arguments."""

    exit_code = 1


class DataError(VitalTraceError):
    """Malformed, missing, or contract-violating data."""

    exit_code = 2


class IngestError(DataError):
    """A referenced frame or file could not be read."""


class DecodeError(DataError):
    """Byte stream is not a valid P6 PPM."""


class ContractError(DataError):
    """An operation precondition does not hold."""


class NumericalError(VitalTraceError):
    exit_code = 3


class TrackingDegradedWarning(UserWarning):
    """More than 20% of ROI points left the frame and were clamped."""


class TraceExhaustedWarning(UserWarning):
    """Suppression emptied the spectrogram before all traces were found."""
