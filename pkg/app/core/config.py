# app/core/config.py
from functools import lru_cache
from typing import Optional, Tuple

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Runtime settings, read from RAYDIFF_* environment variables or .env."""

    model_config = SettingsConfigDict(
        env_prefix="RAYDIFF_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    APP_NAME: str = "raydiff"
    API_V1_STR: str = "/api/v1"

    log_level: str = Field(default="INFO")
    workers: int = Field(default=1, ge=1)
    nn_block_rows: int = Field(default=2048, ge=1)

    # Metric defaults
    default_weights: Tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    default_std_scope: str = "pooled"
    default_hrt_components: str = "per-feature-max"
    default_power_threshold_dbm: Optional[float] = None

    # Ingest
    position_tolerance_m: float = Field(default=1e-6, gt=0)

    # Synthetic tracer
    carrier_frequency_hz: float = Field(default=28e9, gt=0)
    power_floor_dbm: float = -200.0
    concrete_loss_db: float = Field(default=10.0, ge=0)
    glass_loss_db: float = Field(default=4.0, ge=0)
    metal_loss_db: float = Field(default=1.0, ge=0)


@lru_cache
def get_settings() -> Settings:
    return Settings()


settings = get_settings()
