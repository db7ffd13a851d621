#!/usr/bin/env python3
"""
settings.py

Process-level settings read from the environment (and a local .env file):

  - VORWAVE_THREADS   caps BLAS/OpenMP parallelism used by the sparse solves
  - VORWAVE_LOG_LEVEL default log level for the CLI

Also hosts the single place where logging handlers get configured.
"""

import logging
import os
from typing import Optional

from dotenv import load_dotenv
from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

# -----------------------------------------------------------------------------
# Configure logging
# -----------------------------------------------------------------------------
logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(message)s"

_THREAD_VARIABLES = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="VORWAVE_", extra="ignore")

    threads: Optional[int] = None
    log_level: str = "INFO"

    @field_validator("threads", mode="before")
    @classmethod
    def empty_threads_is_unset(cls, value):
        if value in ("", None):
            return None
        return value

    @field_validator("threads")
    @classmethod
    def threads_positive(cls, value):
        if value is not None and value < 1:
            raise ValueError("VORWAVE_THREADS must be a positive integer")
        return value

    @field_validator("log_level", mode="before")
    @classmethod
    def normalize_level(cls, value):
        return str(value).upper()


def load_settings() -> Settings:
    """Load .env (if present) and build the settings object from the environment."""
    load_dotenv()
    return Settings()


def apply_thread_cap(settings: Settings) -> None:
    """Export the thread cap to the numeric libraries' environment variables.

    Only effective for libraries that read these variables at load time, so the CLI
    calls this before any heavy computation starts.
    """
    if settings.threads is None:
        return
    for name in _THREAD_VARIABLES:
        os.environ[name] = str(settings.threads)
    logger.info(f"Capped internal parallelism at {settings.threads} thread(s)")


def configure_logging(level: str = "INFO") -> None:
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO), format=LOG_FORMAT)
