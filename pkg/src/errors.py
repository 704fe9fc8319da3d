"""
Error types shared across the lab.

Every error derives from DCLabError so the CLI can map the whole family to
exit codes, and from the builtin it specialises so callers can keep catching
ValueError / IndexError.
"""

from typing import Iterable, Optional


class DCLabError(Exception):
    """Root of all lab errors."""


class InvalidInputError(DCLabError, ValueError):
    """Malformed numeric or geometric input."""


class ClassIndexError(DCLabError, IndexError):
    """Class index outside the admissible range."""


class ConfigurationError(DCLabError, ValueError):
    """Invalid configuration or unusable dataset."""


class UndefinedRateError(DCLabError, ValueError):
    """Missing rate requested over zero in-scope instances."""


class AnnotationParseError(DCLabError, ValueError):
    """Malformed annotation or split file."""

    def __init__(self, message: str, path: Optional[str] = None,
                 line: Optional[int] = None, column: Optional[int] = None):
        self.path = path
        self.line = line
        self.column = column
        location = path or "<input>"
        if line is not None:
            location += f":{line}:{column}"
        super().__init__(f"{location}: {message}")


class ReferentialIntegrityError(DCLabError, ValueError):
    """Dangling id references inside an annotation or split file."""

    def __init__(self, message: str, offenders: Iterable = ()):
        self.offenders = list(offenders)
        shown = ", ".join(str(o) for o in self.offenders[:20])
        more = f" (+{len(self.offenders) - 20} more)" if len(self.offenders) > 20 else ""
        super().__init__(f"{message}: {shown}{more}" if self.offenders else message)


class IncompatibleManifestError(DCLabError, ValueError):
    """Run manifests that cannot be pooled."""
