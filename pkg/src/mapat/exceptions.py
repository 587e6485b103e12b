"""Exception hierarchy shared across the package."""


class MapAtError(Exception):
    """Base class for every error raised by :mod:`mapat`."""


class PreconditionError(MapAtError, ValueError):
    """An argument violates an operation's documented precondition."""


class OutOfRangeError(PreconditionError):
    """A measurement lies outside its reportable range."""


class InvalidMapError(MapAtError, ValueError):
    """The floor plan contains a degenerate or non-finite wall.

    Parameters
    ----------
    message : str
        Human readable description.
    wall_index : int, optional
        Zero-based index of the offending wall, when known.
    """

    def __init__(self, message, wall_index=None):
        if wall_index is not None:
            message = f"wall {wall_index}: {message}"
        super().__init__(message)
        self.wall_index = wall_index


class MapParseError(MapAtError, ValueError):
    """A map or scenario document could not be parsed."""

    def __init__(self, message, line=None, column=None, field=None):
        locus = []
        if line is not None:
            locus.append(f"line {line}")
            if column is not None:
                locus.append(f"column {column}")
        if field is not None:
            locus.append(f"field {field!r}")
        if locus:
            message = f"{', '.join(locus)}: {message}"
        super().__init__(message)
        self.line = line
        self.column = column
        self.field = field


class ProfileParseError(MapAtError, ValueError):
    """A power-angle profile CSV is malformed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NoCandidatesError(MapAtError):
    """No candidate location survived back-propagation, so the UE cannot be located."""


class UnreachableError(MapAtError):
    """The forward tracer found no propagation path between BS and UE."""
