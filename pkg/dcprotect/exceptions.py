"""
Error hierarchy
Every domain error is a ValueError so callers that only care about bad input
can catch that.
"""
from typing import Optional


class DcProtectError(ValueError):
    """Base class for all domain errors"""


class TopologyParseError(DcProtectError):
    """The topology (or fixture/scenario) document is not syntactically valid"""

    def __init__(self, message: str, line: Optional[int] = None,
                 column: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.column = column
        self.field = field
        location = []
        if line is not None:
            location.append(f"line {line}")
        if column is not None:
            location.append(f"column {column}")
        if field:
            location.append(f"field '{field}'")
        suffix = f" ({', '.join(location)})" if location else ""
        super().__init__(f"{message}{suffix}")


class TopologyValidationError(DcProtectError):
    """The document parsed but describes an invalid grid"""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class FixtureError(DcProtectError):
    """Minimum fault current fixture is malformed or inconsistent with the topology"""


class NoReachableFaultsError(DcProtectError):
    """A fault current table has no finite entry to cluster"""


class ScenarioError(DcProtectError):
    """A scenario references unknown elements or cannot be simulated"""


class FrameEncodeError(DcProtectError):
    """A GOOSE frame violates the wire format limits"""


class FrameDecodeError(DcProtectError):
    """Bytes do not form a valid GOOSE frame"""


class BadMagicError(FrameDecodeError):
    pass


class TruncatedFrameError(FrameDecodeError):
    pass


class LengthMismatchError(FrameDecodeError):
    pass


class InvalidFieldError(FrameDecodeError):
    pass
