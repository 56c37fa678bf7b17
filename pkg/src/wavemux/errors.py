"""Exception taxonomy shared across the package.

Every error raised by wavemux derives from :class:`WavemuxError` so callers
can catch the whole family at ingestion or pipeline boundaries without
swallowing unrelated bugs.
"""


class WavemuxError(Exception):
    """Base class for all wavemux errors."""


# --- ingestion ---

class NonFiniteSample(WavemuxError):
    """A sample value was NaN or infinite and was rejected before any state change."""


class MalformedRecord(WavemuxError):
    """A stream record could not be parsed."""


class UnknownSignal(WavemuxError):
    """A record referenced a label that is not registered for this session."""


class WarmupIncomplete(WavemuxError):
    """A buffer snapshot was requested before every buffer held a full window."""


class NyquistViolation(WavemuxError):
    """A synthesis component frequency reached or exceeded half the sample rate."""


# --- transforms ---

class InvalidLength(WavemuxError):
    """Window length unsupported by the transform (odd, or too short)."""


class NonFiniteInput(WavemuxError):
    """Transform input contained NaN or infinity."""


class ZeroVector(WavemuxError):
    """Cosine similarity is undefined for an all-zero vector."""


class InvalidRange(WavemuxError):
    """A frequency range or parameter fell outside its admissible interval."""


class KernelTooWide(WavemuxError):
    """Requested smoothing kernel exceeds the field dimensions."""


class EmptyBand(WavemuxError):
    """A frequency band selects no rows of the scale grid."""


class DimensionMismatch(WavemuxError):
    """Array dimensions disagree with the structure they are applied to."""


# --- graph ---

class InvalidThresholds(WavemuxError):
    """Gating thresholds violate 0 <= theta_off < theta_on or 0 < alpha <= 1."""


class EdgeNotAdmitted(WavemuxError):
    """A coherence payload arrived for a pair that is not currently admitted."""


# --- engine / persistence / control ---

class ConfigError(WavemuxError):
    """Configuration file, environment override, or flag value is invalid."""


class SnapshotFormatError(WavemuxError):
    """A snapshot file is corrupt or has an unsupported version."""


class InvalidCommand(WavemuxError):
    """A control command carried out-of-range or malformed values."""


class UnknownPair(WavemuxError):
    """A control command referenced a signal pair that does not exist."""
