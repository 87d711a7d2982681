from .errors import CatError, DimensionError, ValidationError, FormatError, TruncatedFileError, AttackError, TrainingError, UsageError
from .rng import substream, draw_seed

__all__ = [
    "CatError", "DimensionError", "ValidationError", "FormatError",
    "TruncatedFileError", "AttackError", "TrainingError", "UsageError",
    "substream", "draw_seed"
]
