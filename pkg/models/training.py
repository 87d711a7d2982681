from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, PositiveInt

from models.attack import AttackConfig

Scheme = Literal["vanilla_at", "cat"]
GainSource = Literal["crafted", "post_update"]


class TrainConfig(BaseModel):
    """
    One adversarial-training run.
    batch_size is the vanilla-AT batch; sampling_number is the number of
    examples CAT draws (and crafts) per iteration.
    """

    model_config = ConfigDict(frozen=True)

    scheme: Scheme = "cat"
    iterations: NonNegativeInt = 300
    batch_size: PositiveInt = 128
    sampling_number: PositiveInt = 128
    alpha: float = Field(default=0.5, ge=0.0, le=1.0)
    temperature: float = Field(default=1.0, gt=0.0)
    lr: float = Field(default=0.1, gt=0.0)
    eval_every: PositiveInt = 10
    attack: AttackConfig = Field(default_factory=AttackConfig)
    eval_attack: Optional[AttackConfig] = None
    class_balanced: bool = False
    gain_source: GainSource = "crafted"
    seed: int = 0

    @property
    def evaluation_attack(self) -> AttackConfig:
        return self.eval_attack or self.attack


class MetricsRecord(BaseModel):
    """One evaluation snapshot"""

    model_config = ConfigDict(frozen=True)

    iteration: NonNegativeInt
    natural_acc: float = Field(ge=0.0, le=1.0)
    robust_acc: float = Field(ge=0.0, le=1.0)
    cumulative_crafted: NonNegativeInt
    wall_seconds: float = Field(ge=0.0)
