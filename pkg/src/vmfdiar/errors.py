"""Exception hierarchy shared by the library and the CLI."""


class VmfDiarError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgument(VmfDiarError, ValueError):
    pass


class DimensionMismatch(VmfDiarError, ValueError):
    pass


class ZeroVector(VmfDiarError, ValueError):
    pass


class InsufficientData(VmfDiarError, ValueError):
    pass


class BadDimension(VmfDiarError, ValueError):
    pass


class EmptyCluster(VmfDiarError):
    pass


class TooFewPoints(VmfDiarError, ValueError):
    pass


class DegenerateWeight(VmfDiarError, ValueError):
    pass


class LengthMismatch(VmfDiarError, ValueError):
    pass


class DurationMismatch(VmfDiarError, ValueError):
    pass


class EmptyTable(VmfDiarError, ValueError):
    pass


class ParseError(VmfDiarError, ValueError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class RaggedRows(ParseError):
    pass


class NegativeDuration(ParseError):
    pass
