"""Runtime settings read from the environment (and an optional .env file)"""
import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator


class Settings(BaseModel):
    log_level: str = Field(default="WARNING", description="DEBUG/INFO/WARNING/ERROR")
    json_logs: bool = Field(default=False)
    metrics_path: Optional[Path] = Field(default=None, description="Prometheus textfile destination")
    default_seed: int = Field(default=0, ge=0, le=2**64 - 1)

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, value: str) -> str:
        level = value.upper()
        if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"unknown log level {value!r}")
        return level

    @classmethod
    def from_env(cls, env_file: Optional[Path] = None) -> "Settings":
        """
        Build settings from DARTPRUNE_* variables

        A .env file in the working directory (or ``env_file``) is loaded
        first; variables already set in the environment win.
        """
        load_dotenv(dotenv_path=env_file or Path.cwd() / ".env", override=False)

        raw = {
            "log_level": os.environ.get("DARTPRUNE_LOG_LEVEL", "WARNING"),
            "json_logs": os.environ.get("DARTPRUNE_JSON_LOGS", "false").lower() == "true",
            "metrics_path": os.environ.get("DARTPRUNE_METRICS_PATH") or None,
            "default_seed": os.environ.get("DARTPRUNE_SEED", "0"),
        }
        return cls.model_validate(raw)
