"""Exception hierarchy shared by every gstl module."""


class GstlError(Exception):
    """Base class for all errors raised by gstl."""


class DegenerateInterval(GstlError, ValueError):
    pass


class UnknownNode(GstlError, KeyError):
    def __str__(self):
        return f"unknown node {self.args[0]!r}" if self.args else "unknown node"


class CrossLayerParent(GstlError, ValueError):
    pass


class SameLayerViolation(GstlError, ValueError):
    pass


class ModelFormatError(GstlError, ValueError):
    pass


class MissingInterpretation(GstlError, KeyError):
    def __str__(self):
        return f"no interpretation for predicate {self.args[0]!r}"


class OutOfHorizon(GstlError, IndexError):
    pass


class HorizonExceeded(GstlError, IndexError):
    pass


class MissingBox(GstlError, ValueError):
    pass


class GstlSyntaxError(GstlError, SyntaxError):
    """Parse failure carrying a 1-based line and column."""

    def __init__(self, message, line=1, column=1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.message = message
        self.line = line
        self.column = column


class StratificationError(GstlSyntaxError):
    """A temporal operator appeared inside a spatial term."""


class AritySyntaxError(GstlSyntaxError):
    """Until interval present on m/s/f or missing on b/o/d/e."""


class MissingVariable(GstlError, KeyError):
    pass


class ResourceLimit(GstlError, RuntimeError):
    """The solver hit its decision or conflict budget before deciding."""
