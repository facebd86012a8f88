"""Shared exception types."""


class ParseError(ValueError):
    """Malformed model or data file; message names the offending line."""

    def __init__(self, path, lineno, message):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = str(path)
        self.lineno = lineno
