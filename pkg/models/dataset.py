from dataclasses import dataclass
from typing import Literal, Optional, Tuple

import numpy as np
import numpy.typing as npt

from utils.errors import ValidationError
from utils.tensor_core import Tensor, freeze

SplitTag = Literal["train", "eval"]


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    n×d features in [0, 1] with integer labels in [0, K).
    Every class must be present; class balancing depends on it.
    """

    x: Tensor
    y: npt.NDArray[np.int64]
    num_classes: int
    split_tag: SplitTag = "train"
    image_shape: Tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "x", freeze(self.x))
        y = np.ascontiguousarray(self.y, dtype=np.int64)
        y.setflags(write=False)
        object.__setattr__(self, "y", y)

        if self.x.ndim != 2:
            raise ValidationError(f"features must be an n×d matrix, got shape {self.x.shape}")
        if self.y.shape != (self.x.shape[0],):
            raise ValidationError(f"{self.y.shape[0]} labels for {self.x.shape[0]} examples")
        if self.num_classes < 2:
            raise ValidationError(f"need at least 2 classes, got {self.num_classes}")
        if self.n < self.num_classes:
            raise ValidationError(f"n={self.n} is smaller than K={self.num_classes}")
        if self.y.min() < 0 or self.y.max() >= self.num_classes:
            bad = int(np.flatnonzero((self.y < 0) | (self.y >= self.num_classes))[0])
            raise ValidationError(f"label {int(self.y[bad])} at index {bad} is outside [0, {self.num_classes})")
        if not np.all(np.isfinite(self.x)) or self.x.min() < 0.0 or self.x.max() > 1.0:
            raise ValidationError("features must be finite and lie in [0, 1]")
        counts = self.class_counts()
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            raise ValidationError(f"class {int(empty[0])} has no examples")
        if self.image_shape and int(np.prod(self.image_shape)) != self.dim:
            raise ValidationError(f"image shape {self.image_shape} does not cover {self.dim} features")

    @property
    def n(self) -> int:
        return int(self.x.shape[0])

    @property
    def dim(self) -> int:
        return int(self.x.shape[1])

    @property
    def input_shape(self) -> Tuple[int, ...]:
        return self.image_shape or (self.dim,)

    def class_counts(self) -> npt.NDArray[np.int64]:
        return np.bincount(self.y, minlength=self.num_classes)

    def subset(self, indices, split_tag: Optional[SplitTag] = None) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(
            x=self.x[indices],
            y=self.y[indices],
            num_classes=self.num_classes,
            split_tag=split_tag or self.split_tag,
            image_shape=self.image_shape,
        )


@dataclass(frozen=True, eq=False)
class ExperimentData:
    """Training split plus the held-out split used for evaluation"""

    train: Dataset
    eval: Dataset

    def eval_subset(self, limit: int) -> Dataset:
        """
        A fixed held-out subset of at most `limit` examples, taken round-robin
        over classes so every class stays represented.
        """
        if limit >= self.eval.n:
            return self.eval
        y = self.eval.y
        rank = np.zeros(y.shape[0], dtype=np.int64)
        for c in range(self.eval.num_classes):
            members = np.flatnonzero(y == c)
            rank[members] = np.arange(members.size)
        order = np.lexsort((np.arange(y.shape[0]), rank))
        return self.eval.subset(np.sort(order[:limit]), split_tag="eval")
