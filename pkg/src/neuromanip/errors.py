"""Exception hierarchy shared across the package.

Every error raised by library code derives from NeuromanipError so callers
(and the CLI exit-code mapping) can catch one base type.
"""


class NeuromanipError(Exception):
    pass


# --- signal chain ---

class UnsupportedSampleRate(NeuromanipError):
    pass


class NonMonotonicTimestamps(NeuromanipError):
    pass


class StreamTooShort(NeuromanipError):
    pass


class DurationTooShort(NeuromanipError):
    pass


# --- classifier ---

class InsufficientData(NeuromanipError):
    pass


class DivergedLoss(NeuromanipError):
    pass


class DimensionMismatch(NeuromanipError):
    pass


class EmptyCalibration(NeuromanipError):
    pass


class ShapeMismatch(NeuromanipError):
    pass


class ModelNotLoaded(NeuromanipError):
    pass


# --- scene ---

class NonPositiveDisparity(NeuromanipError):
    pass


class SceneNotLoaded(NeuromanipError):
    pass


# --- grasp mapping ---

class NoApplicableGrasp(NeuromanipError):
    pass


class EmptyCandidates(NeuromanipError):
    pass


class LibraryValidationError(NeuromanipError):
    pass


# --- harness ---

class ConfigError(NeuromanipError):
    pass


class DatasetContextMismatch(NeuromanipError):
    pass


class CalibrationFailed(NeuromanipError):
    pass


class EmptyBench(NeuromanipError):
    pass


class MissingTrial(NeuromanipError):
    pass


class EmptyInput(NeuromanipError):
    pass


class PortInUse(NeuromanipError):
    pass
