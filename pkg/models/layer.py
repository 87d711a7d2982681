from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, PositiveInt, model_validator

LayerKind = Literal["dense", "relu", "conv2d", "maxpool2d", "flatten"]


class LayerSpec(BaseModel):
    """One layer of the classifier stack"""

    model_config = ConfigDict(frozen=True)

    kind: LayerKind
    in_dim: Optional[PositiveInt] = None
    out_dim: Optional[PositiveInt] = None
    in_ch: Optional[PositiveInt] = None
    out_ch: Optional[PositiveInt] = None
    kernel: Optional[PositiveInt] = None
    stride: PositiveInt = 1

    @model_validator(mode="after")
    def check_fields(self):
        required = {
            "dense": ("in_dim", "out_dim"),
            "conv2d": ("in_ch", "out_ch", "kernel"),
            "maxpool2d": ("kernel",),
        }.get(self.kind, ())
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            raise ValueError(f"{self.kind} layer needs {', '.join(missing)}")
        return self

    @classmethod
    def dense(cls, in_dim: int, out_dim: int) -> "LayerSpec":
        return cls(kind="dense", in_dim=in_dim, out_dim=out_dim)

    @classmethod
    def relu(cls) -> "LayerSpec":
        return cls(kind="relu")

    @classmethod
    def conv2d(cls, in_ch: int, out_ch: int, kernel: int, stride: int = 1) -> "LayerSpec":
        return cls(kind="conv2d", in_ch=in_ch, out_ch=out_ch, kernel=kernel, stride=stride)

    @classmethod
    def maxpool2d(cls, kernel: int) -> "LayerSpec":
        return cls(kind="maxpool2d", kernel=kernel)

    @classmethod
    def flatten(cls) -> "LayerSpec":
        return cls(kind="flatten")

    @property
    def has_params(self) -> bool:
        return self.kind in ("dense", "conv2d")

    def describe(self) -> str:
        if self.kind == "dense":
            return f"dense({self.in_dim},{self.out_dim})"
        if self.kind == "conv2d":
            return f"conv2d({self.in_ch},{self.out_ch},{self.kernel},{self.stride})"
        if self.kind == "maxpool2d":
            return f"maxpool2d({self.kernel})"
        return self.kind


def mlp_layers(in_dim: int, hidden: List[int], num_classes: int) -> List[LayerSpec]:
    """dense → relu → ... → dense"""
    layers: List[LayerSpec] = []
    prev = in_dim
    for width in hidden:
        layers.append(LayerSpec.dense(prev, width))
        layers.append(LayerSpec.relu())
        prev = width
    layers.append(LayerSpec.dense(prev, num_classes))
    return layers


def small_cnn_layers(in_ch: int, height: int, width: int, num_classes: int) -> List[LayerSpec]:
    """conv 3×3×16 → relu → pool 2 → conv 3×3×32 → relu → pool 2 → flatten → dense"""
    h, w = height, width
    h, w = (h - 2) // 2, (w - 2) // 2
    h, w = (h - 2) // 2, (w - 2) // 2
    return [
        LayerSpec.conv2d(in_ch, 16, 3),
        LayerSpec.relu(),
        LayerSpec.maxpool2d(2),
        LayerSpec.conv2d(16, 32, 3),
        LayerSpec.relu(),
        LayerSpec.maxpool2d(2),
        LayerSpec.flatten(),
        LayerSpec.dense(32 * h * w, num_classes),
    ]
