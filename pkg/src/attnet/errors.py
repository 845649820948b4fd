"""Exception types shared across the package."""


class AttnetError(Exception):
    """Base class for all package-specific errors."""


class RangeError(AttnetError, ValueError):
    """A numeric argument is outside its documented domain."""


class InvalidBcd(AttnetError, ValueError):
    """A BCD byte contains a nibble greater than 9."""


class ParseError(AttnetError, ValueError):
    """Text or a wire payload does not match the expected format."""


class EncodeError(AttnetError, ValueError):
    """A frame cannot be serialized as given."""


class TopologyError(AttnetError):
    """A radio operation names an unknown or unreachable node."""


class ReplayError(AttnetError):
    """A journal file contains a corrupt complete line."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class AlreadyEnrolled(AttnetError):
    """The card key is already on file."""


class LoadError(AttnetError):
    """A store file contains an unreadable line."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ScenarioError(ParseError):
    """A scenario file failed to parse."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
