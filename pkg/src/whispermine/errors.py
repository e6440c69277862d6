"""Exception types shared across the toolkit."""


class WhisperMineError(Exception):
    """Base class for all toolkit errors."""


class AudioFormatError(WhisperMineError):
    """Malformed RIFF/WAVE container or corrupt audio payload."""


class UnsupportedEncodingError(AudioFormatError):
    """WAV file uses an encoding we do not read (compressed, exotic widths)."""


class FeatureError(WhisperMineError):
    """Feature extraction precondition violated (e.g. buffer too short)."""


class NumericalError(WhisperMineError):
    """Numerical failure: singular recursion, NaN loss, infeasible search."""


class DatasetError(WhisperMineError):
    """Corpus construction cannot proceed (silent inputs, missing metadata,
    insufficient utterances or speakers)."""


class ModelFormatError(WhisperMineError):
    """Model file rejected: bad magic, version, truncation or checksum."""


class MissingInputError(WhisperMineError):
    """A required input file or directory does not exist."""
