"""
Exception types shared across the constants and empirics modules.
"""
from pathlib import Path
from typing import Optional


class DomainError(ValueError):
    """An input violates a mathematical precondition (gcd(n, k) != 1, singular curve, ...)."""


class FixtureParseError(DomainError):
    """A fixture file could not be parsed; carries the file and line number."""

    def __init__(self, message: str, path: Optional[Path] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        location = ""
        if path is not None:
            location = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(f"{location}{message}")


class ResourceError(RuntimeError):
    """A configured enumeration or sieve budget would be exceeded."""
