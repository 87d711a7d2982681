"""
Dense float64 tensor arithmetic.

Tensors are plain row-major numpy arrays frozen read-only after construction.
Nothing broadcasts implicitly except scalar-with-tensor, so a shape bug raises
DimensionError instead of producing a silently wrong answer.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Union

import numpy as np
import numpy.typing as npt
from scipy import special

from utils.errors import DimensionError, ValidationError

Tensor = npt.NDArray[np.float64]
Scalar = Union[int, float]

ELEMENTWISE_OPS = ("add", "sub", "mul", "relu", "sign", "clamp")


def as_tensor(data, shape: Optional[Sequence[int]] = None) -> Tensor:
    """Copy `data` into a frozen float64 array, optionally reshaped"""
    arr = np.array(data, dtype=np.float64, order="C", copy=True)
    if shape is not None:
        shape = tuple(int(s) for s in shape)
        if any(s <= 0 for s in shape):
            raise DimensionError("Tensor dimensions must be positive", shape, ())
        if arr.size != int(np.prod(shape)):
            raise DimensionError("Data length does not match shape", arr.shape, shape)
        arr = arr.reshape(shape)
    arr.setflags(write=False)
    return arr


def freeze(arr: np.ndarray) -> Tensor:
    """Freeze an array this module just produced (no copy)"""
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    arr.setflags(write=False)
    return arr


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError("matmul inner dimensions disagree", a.shape, b.shape)
    return freeze(a @ b)


def elementwise(
    op: str,
    a: Tensor,
    b: Optional[Union[Tensor, Scalar]] = None,
    lo: Optional[float] = None,
    hi: Optional[float] = None,
) -> Tensor:
    """
    Apply one of add, sub, mul, relu, sign, clamp.
    Binary ops take an equal-shaped tensor or a scalar for `b`.
    """
    a = np.asarray(a, dtype=np.float64)

    if op in ("add", "sub", "mul"):
        if b is None:
            raise ValidationError(f"Operation '{op}' needs a second operand")
        if not np.isscalar(b):
            b = np.asarray(b, dtype=np.float64)
            if b.shape != a.shape:
                raise DimensionError(f"Operands of '{op}' differ in shape", a.shape, b.shape)
        if op == "add":
            return freeze(a + b)
        if op == "sub":
            return freeze(a - b)
        return freeze(a * b)

    if op == "relu":
        return freeze(np.maximum(a, 0.0))

    if op == "sign":
        # np.sign(0) == 0
        return freeze(np.sign(a))

    if op == "clamp":
        if lo is None or hi is None or lo > hi:
            raise ValidationError(f"clamp needs lo <= hi, got lo={lo}, hi={hi}")
        return freeze(np.minimum(hi, np.maximum(lo, a)))

    raise ValidationError(f"Unknown elementwise op '{op}'. Valid ops: {', '.join(ELEMENTWISE_OPS)}")


def log_softmax(logits: Tensor) -> Tensor:
    """Row-wise log-softmax of a B×K logit matrix (max-subtracted)"""
    if logits.ndim != 2:
        raise DimensionError("log_softmax expects a B×K matrix", logits.shape, ())
    if logits.shape[1] < 2:
        raise ValidationError(f"log_softmax needs at least 2 classes, got {logits.shape[1]}")
    return freeze(special.log_softmax(logits, axis=1))


@dataclass(frozen=True)
class Gradients:
    """
    Gradient blocks of the mean batch loss.
    by_parameter maps a parameter id ("0.weight", "0.bias", ...) to its gradient;
    by_input is the gradient with respect to the input batch. Blocks that were
    not requested are left empty/None.
    """

    by_parameter: Dict[str, Tensor] = field(default_factory=dict)
    by_input: Optional[Tensor] = None

    def check_against(self, params: Dict[str, Tensor], x: Optional[Tensor] = None) -> None:
        for name, grad in self.by_parameter.items():
            if name not in params:
                raise ValidationError(f"Gradient for unknown parameter '{name}'")
            if grad.shape != params[name].shape:
                raise DimensionError(f"Gradient shape of '{name}' disagrees", grad.shape, params[name].shape)
        if x is not None and self.by_input is not None and self.by_input.shape != x.shape:
            raise DimensionError("Input gradient shape disagrees", self.by_input.shape, x.shape)
