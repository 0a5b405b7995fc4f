"""Exception hierarchy shared across the toolkit.

DataError covers everything caused by bad input (files, corpora,
annotations); the CLI maps it to exit code 2.  Anything else that
escapes is an internal error (exit code 3).
"""


class TagbootError(Exception):
    pass


class DataError(TagbootError):
    pass


class ParseError(DataError):
    """Malformed input file; carries the 1-based line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)
        self.line = line


class IntegrityError(DataError):
    """Structurally valid input violating a corpus invariant."""


class AlignmentError(DataError):
    """Taggings or corrections that do not line up token-for-token."""


class TrainingError(DataError):
    """Training input not usable (missing gold tags, empty corpus...)."""


class ModelError(TagbootError):
    """Model used before training or with an incompatible tagset."""


class ConfigError(DataError):
    """Bad configuration file or option combination."""
