from dataclasses import dataclass
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, PositiveInt, model_validator

from utils.tensor_core import Tensor

AttackVariant = Literal["sign_step", "raw_gradient"]


class AttackConfig(BaseModel):
    """ℓ∞ PGD settings. Defaults are 20 sign steps and 10 restarts at ε = 0.3"""

    model_config = ConfigDict(frozen=True)

    epsilon: float = Field(default=0.3, ge=0.0)
    step_size: float = Field(default=0.075, gt=0.0)
    num_steps: PositiveInt = 20
    num_restarts: PositiveInt = 10
    clip_lo: float = 0.0
    clip_hi: float = 1.0
    variant: AttackVariant = "sign_step"
    seed: int = 0

    @model_validator(mode="after")
    def check_ranges(self):
        if self.epsilon > 0 and self.step_size > 2 * self.epsilon:
            raise ValueError(f"step_size {self.step_size} exceeds 2·epsilon ({2 * self.epsilon})")
        if not self.clip_lo < self.clip_hi:
            raise ValueError(f"clip_lo {self.clip_lo} must be below clip_hi {self.clip_hi}")
        return self

    @classmethod
    def with_quarter_step(cls, epsilon: float, **kwargs) -> "AttackConfig":
        """Config whose step size is ε/4 (the sign-PGD default)"""
        return cls(epsilon=epsilon, step_size=epsilon / 4 if epsilon > 0 else 1e-12, **kwargs)

    def reseeded(self, seed: int) -> "AttackConfig":
        return self.model_copy(update={"seed": int(seed)})


@dataclass(frozen=True, eq=False)
class AttackResult:
    """
    Strongest perturbation found per example.
    crafted_count is the number of examples crafted (B), the unit of the
    crafting budget.
    """

    delta: Tensor
    adv_log_probs: Tensor
    adv_loss: Tensor
    crafted_count: int
