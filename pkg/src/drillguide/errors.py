"""Exception types shared across the package.

Every domain error raised by this package derives from DrillGuideError so
callers (and the command line layer) can separate bad inputs from bugs.
"""

__all__ = [
    "DrillGuideError",
    "MalformedHeader",
    "UnknownVersion",
    "DimensionMismatch",
    "MalformedRecord",
    "InvalidConfig",
    "SpecMismatch",
    "EmptyList",
    "EmptyStructure",
    "EmptyTarget",
    "NonFinitePose",
    "NonMonotoneTimestamps",
    "UnorderedLog",
    "LengthMismatch",
    "TooFewPairs",
    "MisalignedInputs",
    "UnknownCase",
    "SessionClosed",
    "ResourceExhausted",
    "MalformedMessage",
]


class DrillGuideError(Exception):
    """Base class for all domain errors raised by this package."""


# file formats ---------------------------------------------------------------

class MalformedHeader(DrillGuideError):
    """Header line is not valid JSON or is missing required fields."""


class UnknownVersion(DrillGuideError):
    """Header carries a version tag this code does not read."""


class DimensionMismatch(DrillGuideError):
    """Payload size does not match the dims declared in the header."""


class MalformedRecord(DrillGuideError):
    """A line of a JSON-lines file is not a valid record."""


class InvalidConfig(DrillGuideError):
    """A configuration document has unknown fields or bad values."""


# geometry / fields ----------------------------------------------------------

class SpecMismatch(DrillGuideError):
    """Operands live on different grids (dims, spacing, or origin differ)."""


class EmptyList(DrillGuideError):
    """An operation over a list of fields got no fields at all."""


class EmptyStructure(DrillGuideError):
    """A distance field was requested for a structure with no voxels."""


class EmptyTarget(DrillGuideError):
    """A zone plan was requested but no voxel carries a target code."""


# engine ---------------------------------------------------------------------

class NonFinitePose(DrillGuideError):
    """Tool pose contains NaN or infinity."""


class NonMonotoneTimestamps(DrillGuideError):
    """Trajectory timestamps must strictly increase in whole ticks."""


# metrics --------------------------------------------------------------------

class UnorderedLog(DrillGuideError):
    """Removal log timestamps decrease somewhere."""


class LengthMismatch(DrillGuideError):
    """Paired samples have different lengths."""


class TooFewPairs(DrillGuideError):
    """A paired test needs at least two pairs."""


class MisalignedInputs(DrillGuideError):
    """Parallel input sequences differ in length."""


# session service ------------------------------------------------------------

class UnknownCase(DrillGuideError):
    """Requested case id is not in the case directory."""


class SessionClosed(DrillGuideError):
    """Session id is unknown or was already finished."""


class ResourceExhausted(DrillGuideError):
    """Session limit reached; finish a session before opening another."""


class MalformedMessage(DrillGuideError):
    """Inbound stream frame is not a valid pose message."""
