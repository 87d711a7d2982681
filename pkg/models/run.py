from pathlib import Path
from typing import Annotated, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, PositiveInt, model_validator

from models.training import TrainConfig

Command = Literal["train", "sweep", "fig1", "eval", "compare"]
Architecture = Literal["mlp", "cnn"]

MNIST_CLASSES = 10


class MnistSource(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["mnist"] = "mnist"
    images: Path
    labels: Path
    eval_images: Optional[Path] = None
    eval_labels: Optional[Path] = None
    limit: Optional[PositiveInt] = None

    @property
    def min_classes(self) -> int:
        return MNIST_CLASSES

    def paths(self) -> List[Path]:
        return [p for p in (self.images, self.labels, self.eval_images, self.eval_labels) if p is not None]


class BlobsSource(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["blobs"] = "blobs"
    n: PositiveInt = 2000
    k: PositiveInt = 2
    d: PositiveInt = 2
    spread: float = Field(default=0.05, ge=0.0)

    @property
    def min_classes(self) -> int:
        return self.k

    def paths(self) -> List[Path]:
        return []


DatasetSource = Annotated[Union[MnistSource, BlobsSource], Field(discriminator="kind")]


class RunSpec(BaseModel):
    """Everything needed to reproduce one CLI invocation"""

    model_config = ConfigDict(frozen=True)

    command: Command = "train"
    dataset: DatasetSource = Field(default_factory=BlobsSource)
    train: TrainConfig = Field(default_factory=TrainConfig)
    output_dir: Path = Path("runs")
    architecture: Architecture = "mlp"
    hidden: Optional[List[PositiveInt]] = None
    eval_fraction: float = Field(default=0.2, gt=0.0, lt=1.0)
    eval_limit: PositiveInt = 1000
    sampling_numbers: List[PositiveInt] = Field(default_factory=lambda: [128, 256, 512, 1024])
    thresholds: List[float] = Field(default_factory=lambda: [0.6, 0.7, 0.8, 0.9])
    with_baseline: bool = False
    parallel: bool = False
    num_checkpoints: PositiveInt = 11
    checkpoint: Optional[Path] = None

    @model_validator(mode="after")
    def check_eval_limit(self):
        if self.eval_limit < self.dataset.min_classes:
            raise ValueError(
                f"eval_limit {self.eval_limit} cannot cover all {self.dataset.min_classes} classes of the {self.dataset.kind} dataset"
            )
        return self

    def missing_paths(self) -> List[Path]:
        paths = list(self.dataset.paths())
        if self.command == "eval" and self.checkpoint is not None:
            paths.append(self.checkpoint)
        return [p for p in paths if not Path(p).exists()]

    def hidden_widths(self) -> List[int]:
        if self.hidden is not None:
            return list(self.hidden)
        return [256, 128] if isinstance(self.dataset, MnistSource) else [32]
