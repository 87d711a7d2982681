from .layer import LayerSpec, mlp_layers, small_cnn_layers
from .network import Network, LossReport
from .attack import AttackConfig, AttackResult
from .sampling import WeightTable, BatchPlan
from .training import TrainConfig, MetricsRecord
from .dataset import Dataset, ExperimentData
from .run import RunSpec, MnistSource, BlobsSource

__all__ = [
    "LayerSpec", "mlp_layers", "small_cnn_layers", "Network", "LossReport",
    "AttackConfig", "AttackResult", "WeightTable", "BatchPlan", "TrainConfig",
    "MetricsRecord", "Dataset", "ExperimentData", "RunSpec", "MnistSource",
    "BlobsSource"
]
