"""
Simulator configuration from environment variables.
"""
import os
from functools import lru_cache
from pathlib import Path
from pydantic_settings import BaseSettings

# .env is in the project root (parent of hypoelim/)
ENV_FILE = Path(__file__).parent.parent / ".env"


class Settings(BaseSettings):
    # Parallelism
    workers: int = 0  # 0 = available parallelism

    # Elimination stages
    max_samples_per_stage: int = 1_000_000_000
    initial_block: int = 32  # first vectorized sampling block
    max_block: int = 65_536  # blocks double up to this size

    # GJL fixed budgets are drawn in chunks of this size
    gjl_chunk: int = 1 << 20

    # Default trials per cell when the experiment does not override them
    elimination_trials: int = 10_000
    gjl_trials: int = 100

    # Cluster maps / assumption reports kept per process
    cluster_cache_size: int = 64

    debug: bool = False

    class Config:
        env_prefix = "HYPOELIM_"
        env_file = str(ENV_FILE)
        env_file_encoding = "utf-8"
        extra = "ignore"

    def resolved_workers(self, requested: int | None = None) -> int:
        """Worker count: explicit request, then HYPOELIM_WORKERS, then CPU count."""
        count = requested if requested else self.workers
        if count and count > 0:
            return count
        return os.cpu_count() or 1


@lru_cache()
def get_settings() -> Settings:
    return Settings()


settings = get_settings()
