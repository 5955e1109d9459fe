"""Exception hierarchy; each class carries the CLI exit code it maps to."""


class CitetrendError(Exception):
    exit_code = 1
    kind = "error"


class ValidationError(CitetrendError, ValueError):
    """Bad input, config or precondition."""

    exit_code = 2
    kind = "validation"


class NetworkError(CitetrendError):
    """Transport failure, HTTP error, or a replay cache miss."""

    exit_code = 3
    kind = "network"

    def __init__(self, message, status=None, progress=None):
        super().__init__(message)
        self.status = status
        self.progress = progress


class DataIntegrityError(CitetrendError):
    """Inputs disagree with each other or with a stored schema."""

    exit_code = 4
    kind = "data-integrity"


class ParseError(DataIntegrityError):
    def __init__(self, message, offset=None):
        super().__init__(message)
        self.offset = offset
