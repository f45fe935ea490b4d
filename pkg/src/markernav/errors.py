"""Exception hierarchy shared across the package."""


class MarkerNavError(Exception):
    """Base class for every error raised by markernav."""


class GeometryError(MarkerNavError, ValueError):
    """Input outside the domain of a geometric primitive."""


class InconsistentTriangleError(GeometryError):
    """Side lengths that cannot form a triangle beyond the clamping tolerance."""


class InconsistentCornersError(GeometryError):
    """Corner set whose apparent width exceeds its reference side."""


class DegenerateLinkError(GeometryError):
    """Two markers (or a marker and the robot) that coincide."""


class MisalignmentError(MarkerNavError):
    """Marker too far from the image center for a reliable reading."""


class MarkerNotFoundError(MarkerNavError, LookupError):
    """Requested marker ID is absent from the world or never seen."""


class SearchRequiredError(MarkerNavError):
    """Marker left the field of view during alignment."""


class NodeNotFoundError(MarkerNavError, KeyError):
    """Marker ID is not a node of the graph."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class NoPathError(MarkerNavError):
    """No chain of stored edges joins two nodes."""


class MapFormatError(MarkerNavError, ValueError):
    """Map file that cannot be parsed."""


class MapValidationError(MarkerNavError, ValueError):
    """Map file that parses but violates an edge or graph invariant."""


class MissionError(MarkerNavError):
    """Failure of a navigation mission, labelled with the phase it occurred in."""

    def __init__(self, phase: str, cause: Exception):
        super().__init__(f"{phase}: {cause}")
        self.phase = phase
        self.cause = cause
