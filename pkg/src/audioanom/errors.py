"""Exception hierarchy for the audioanom pipeline.

Config errors (bad parameters, bad input schemas) map to CLI exit code 2;
runtime errors (I/O, malformed files) map to exit code 1.
"""


class AudioAnomError(Exception):
    """Base class for all pipeline errors."""


class ConfigError(AudioAnomError):
    """Invalid parameter or configuration value."""


# --- audio_io ---

class MalformedContainer(AudioAnomError):
    """File is not a well-formed RIFF/WAVE container."""


class UnsupportedEncoding(AudioAnomError):
    """WAV codec / bit depth outside PCM16 and float32."""


class EmptyAudio(AudioAnomError):
    """Audio stream contains zero samples."""


class IoFailure(AudioAnomError):
    """Underlying file read/write failed."""


# --- dsp_core ---

class NFftNotPowerOfTwo(ConfigError):
    """Transform size must be a power of two."""


class SignalTooShort(AudioAnomError):
    """Signal shorter than one analysis frame."""


# --- preprocess ---

class TooShortForProfile(AudioAnomError):
    """Leading noise window does not contain one full frame."""


class ProfileMismatch(ConfigError):
    """Noise profile n_fft differs from the configured n_fft."""


class LengthMismatch(AudioAnomError):
    """Paired sequences have different lengths."""


# --- features ---

class DegenerateFilter(ConfigError):
    """Two mel filter centers collapse onto the same FFT bin."""


class FrameTooShort(AudioAnomError):
    """Frame too short for the requested statistic."""


# --- models ---

class EmptyDataset(AudioAnomError):
    """Training set contains no instances."""


class NotBinary(ConfigError):
    """SVM training requires exactly two classes."""


class EmptyClass(AudioAnomError):
    """A class has no training instances."""


class SchemaMismatch(AudioAnomError):
    """Feature vector does not conform to the model's schema."""


# --- eval ---

class ClassTooSmall(AudioAnomError):
    """A class has too few instances for the requested split."""


class LabelOutOfRange(AudioAnomError):
    """Label index outside [0, K)."""


class EmptyMatrix(AudioAnomError):
    """Confusion matrix holds zero instances."""
