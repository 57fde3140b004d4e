"""Exception hierarchy shared by all panoflow modules."""


class PanoflowError(Exception):
    """Base class for all library errors."""


class ConfigError(PanoflowError, ValueError):
    """Invalid configuration value (padding, resolution, path parameters...)."""


class DimensionError(PanoflowError, ValueError):
    """Arrays that must be congruent are not."""


class HemisphereError(PanoflowError, ValueError):
    """Point lies outside the hemisphere of a gnomonic projection."""


class CoverageError(PanoflowError):
    """A tangent layout leaves some ERP pixels uncovered."""


class DegenerateError(PanoflowError):
    """Too few or collinear correspondences for rotation fitting."""


class GeometryError(PanoflowError, ValueError):
    """Camera pose incompatible with the scene (e.g. outside the room)."""


class ExternalError(PanoflowError):
    """External flow backend failed: nonzero exit, timeout or bad output."""

    def __init__(self, message, returncode=None, stdout="", stderr=""):
        super().__init__(message)
        self.returncode = returncode
        self.stdout = stdout
        self.stderr = stderr


class StageError(PanoflowError):
    """Error raised inside a pipeline stage, annotated with the stage name."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
