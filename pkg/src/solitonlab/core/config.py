from __future__ import annotations

import os
from functools import lru_cache

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file=".env", extra="ignore")

    env: str = Field(default="local", validation_alias="APP_ENV")
    output_root: str = Field(default=".runs", validation_alias="SOLITON_OUTPUT_ROOT")
    workers: int = Field(
        default_factory=lambda: os.cpu_count() or 1, validation_alias="SOLITON_WORKERS"
    )
    strict_config: bool = Field(default=True, validation_alias="SOLITON_STRICT_CONFIG")
    log_level: str = Field(default="INFO", validation_alias="SOLITON_LOG_LEVEL")
    radial_points: int = Field(default=8192, validation_alias="SOLITON_RADIAL_POINTS")
    dvr_points: int = Field(default=2048, validation_alias="SOLITON_DVR_POINTS")
    plane_points: int = Field(default=512, validation_alias="SOLITON_PLANE_POINTS")
    commit_sha: str = Field(default="dev", validation_alias="COMMIT_SHA")


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings()
