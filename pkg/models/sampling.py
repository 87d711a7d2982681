from dataclasses import dataclass, field
from typing import Dict

import numpy as np
import numpy.typing as npt

from utils.errors import ValidationError

NEVER_SELECTED = -1


@dataclass(frozen=True, eq=False)
class WeightTable:
    """
    Per-example EMA information-gain weights.
    Every weight starts at 1; last_selected_iter is -1 until an example is
    first drawn.
    """

    weights: npt.NDArray[np.float64]
    alpha: float
    last_selected_iter: npt.NDArray[np.int64]

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValidationError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.weights.shape != self.last_selected_iter.shape or self.weights.ndim != 1:
            raise ValidationError(
                f"weights {self.weights.shape} and last_selected_iter {self.last_selected_iter.shape} must be equal-length vectors"
            )
        if not np.all(np.isfinite(self.weights)):
            raise ValidationError("weight table holds non-finite weights")
        self.weights.setflags(write=False)
        self.last_selected_iter.setflags(write=False)

    @classmethod
    def initial(cls, n: int, alpha: float) -> "WeightTable":
        if n <= 0:
            raise ValidationError(f"weight table needs n > 0, got {n}")
        return cls(
            weights=np.ones(n, dtype=np.float64),
            alpha=float(alpha),
            last_selected_iter=np.full(n, NEVER_SELECTED, dtype=np.int64),
        )

    @property
    def size(self) -> int:
        return int(self.weights.shape[0])

    def selected_mask(self) -> npt.NDArray[np.bool_]:
        return self.last_selected_iter != NEVER_SELECTED


@dataclass(frozen=True, eq=False)
class BatchPlan:
    """Distinct dataset indices for one batch and the per-class slot counts"""

    indices: npt.NDArray[np.int64]
    per_class_quota: Dict[int, int] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return int(self.indices.shape[0])
