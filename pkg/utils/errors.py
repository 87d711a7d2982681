"""
Exception types raised across the training engine.
The CLI boundary in main.py maps them onto exit codes.
"""

from typing import Sequence


class CatError(Exception):
    """Root of every error raised by this package"""


class DimensionError(CatError):
    """Two tensors (or a tensor and a layer) disagree on shape"""

    def __init__(self, message: str, left: Sequence[int] = (), right: Sequence[int] = ()):
        self.left = tuple(left)
        self.right = tuple(right)
        if self.left or self.right:
            message = f"{message}: {self.left} vs {self.right}"
        super().__init__(message)


class ValidationError(CatError):
    """An argument is outside its documented domain"""


class FormatError(CatError):
    """A binary file (IDX or checkpoint) does not match its format"""


class TruncatedFileError(FormatError, OSError):
    """A binary file ended before its header said it would"""


class AttackError(CatError):
    """PGD crafting hit a non-finite gradient"""

    def __init__(self, step: int, restart: int):
        self.step = step
        self.restart = restart
        super().__init__(f"non-finite input gradient at restart {restart}, step {step}")


class TrainingError(CatError):
    """A training-loop invariant was violated"""


class UsageError(CatError):
    """Bad command line or run configuration"""
