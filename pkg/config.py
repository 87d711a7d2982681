from pydantic_settings import BaseSettings, SettingsConfigDict
from functools import lru_cache
from typing import List, Optional

class Settings(BaseSettings):
    # Output
    OUTPUT_DIR: str = "runs"

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    SHOW_PROGRESS: bool = True

    # MNIST (IDX files, optionally gzipped)
    MNIST_TRAIN_IMAGES: Optional[str] = None
    MNIST_TRAIN_LABELS: Optional[str] = None
    MNIST_TEST_IMAGES: Optional[str] = None
    MNIST_TEST_LABELS: Optional[str] = None

    # Evaluation
    EVAL_LIMIT: int = 1000
    DEFAULT_THRESHOLDS: List[float] = [0.6, 0.7, 0.8, 0.9]

    # Reproducibility: with wall time off, metrics files are byte-identical across reruns
    RECORD_WALL_TIME: bool = True

    # Assert the EMA update rule on every CAT iteration
    CHECK_WEIGHT_INVARIANTS: bool = True

    model_config = SettingsConfigDict(
        env_prefix="CAT_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

@lru_cache()
def get_settings():
    return Settings()

settings = get_settings()
