from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from models.layer import LayerSpec
from utils.tensor_core import Tensor


@dataclass(frozen=True, eq=False)
class Network:
    """
    An immutable classifier: layer stack, parameters keyed "<layer>.weight" /
    "<layer>.bias", the per-example input shape and the init seed.
    Updates (sgd_step) return a new Network.
    """

    layers: Tuple[LayerSpec, ...]
    params: Dict[str, Tensor] = field(repr=False)
    input_shape: Tuple[int, ...]
    rng_seed: int = 0

    @property
    def input_dim(self) -> int:
        return int(np.prod(self.input_shape))

    @property
    def num_classes(self) -> int:
        last_dense = [spec for spec in self.layers if spec.kind == "dense"]
        return int(last_dense[-1].out_dim)

    def same_architecture(self, other: "Network") -> bool:
        return self.layers == other.layers and self.input_shape == other.input_shape

    def num_parameters(self) -> int:
        return int(sum(p.size for p in self.params.values()))


@dataclass(frozen=True, eq=False)
class LossReport:
    """Cross-entropy (nats) of a batch: mean, per example, and the log-probabilities"""

    mean_loss: float
    per_example_loss: Tensor
    log_probs: Tensor
