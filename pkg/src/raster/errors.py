"""Exception hierarchy shared by all RASTER modules."""


class RasterError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(RasterError, ValueError):
    """Invalid parameters or an unsatisfiable generator configuration."""


class OutOfBoundsError(RasterError, ValueError):
    """A point fell outside the configured canvas while running in strict mode."""

    def __init__(self, point, index=None):
        self.point = tuple(point)
        self.index = index
        where = "" if index is None else f" (input position {index})"
        super().__init__(f"point {self.point} lies outside the canvas{where}")


class ParseError(RasterError, ValueError):
    """Malformed line in a point or center file."""

    def __init__(self, message, lineno=None, source=None):
        self.lineno = lineno
        self.source = source
        prefix = ""
        if source is not None:
            prefix += f"{source}:"
        if lineno is not None:
            prefix += f"{lineno}:"
        super().__init__(f"{prefix} {message}" if prefix else message)


class UndefinedMetricError(RasterError, ValueError):
    """A quality metric is not defined for the given labelling."""
