"""Runtime settings using pydantic-settings.

Values come from MATCONC_* environment variables, then ``.env`` and
``.env.local`` (local overrides shared). Experiment parameters live in JSON
configs (:mod:`matconc.harness.models`); these settings only cover how a
run executes. Threads and chunk size never change a result.

Usage:
    from matconc.harness.config import settings
    print(settings.threads)
"""

import logging
from pathlib import Path

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    """Runtime settings loaded from environment variables (prefix MATCONC_)."""

    model_config = SettingsConfigDict(
        env_file=(".env", ".env.local"),
        extra="ignore",
    )

    # ==========================================================================
    # EXECUTION
    # ==========================================================================

    threads: int = Field(
        default=1,
        ge=1,
        validation_alias="MATCONC_THREADS",
        description="Worker threads for Monte Carlo trials",
    )

    chunk_trials: int = Field(
        default=256,
        ge=1,
        validation_alias="MATCONC_CHUNK_TRIALS",
        description="Trials per scheduled work unit",
    )

    # ==========================================================================
    # CHECKS
    # ==========================================================================

    se_slack: float = Field(
        default=3.0,
        ge=0.0,
        validation_alias="MATCONC_SE_SLACK",
        description="Standard errors of slack in empirical <= bound checks",
    )

    directions: int = Field(
        default=1024,
        ge=1,
        validation_alias="MATCONC_DIRECTIONS",
        description="Uniform directions in a direction set",
    )

    # ==========================================================================
    # OUTPUT
    # ==========================================================================

    reports_dir: Path = Field(
        default=Path("./reports"),
        validation_alias="MATCONC_REPORTS_DIR",
        description="Default report output root",
    )

    log_level: str = Field(
        default="INFO",
        validation_alias="MATCONC_LOG_LEVEL",
        description="Logging level of the CLIs",
    )


# Singleton instance
settings = Settings.model_validate({})
