"""Configuration management for oscint.

Uses pydantic-settings for env var loading. Every field can be set through an
``OSCINT_``-prefixed environment variable or a ``.env`` file, and the CLI
overlays its flags on top (see :func:`resolve_settings`).

Environment variables:
    OSCINT_TOL        - default absolute tolerance for integrals (1e-9)
    OSCINT_PRECISION  - bits for extended-precision evaluation (256)
    OSCINT_SEED       - seed for randomized property sweeps (0)
    OSCINT_DB_PATH    - SQLite run ledger location
"""

from __future__ import annotations

import os
from enum import Enum
from functools import lru_cache
from typing import Any, Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class OutputFormat(str, Enum):
    """Structured output formats."""

    JSON = "json"
    CSV = "csv"


class Settings(BaseSettings):
    """Engine settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="OSCINT_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Accuracy
    tol: float = Field(default=1e-9, gt=0)
    precision: int = Field(default=256, ge=64)
    seed: int = 0
    output_format: OutputFormat = OutputFormat.JSON

    # Lobe engine
    max_lobes: int = Field(default=1_000_000, gt=0)

    # Extremal polynomials: convolution form for k >= conv_min_k inside the window
    conv_tol: float = Field(default=1e-11, gt=0)
    conv_min_k: int = Field(default=7, ge=1)
    conv_window: float = Field(default=3.0, gt=1)

    # Root isolation width, relative to max(1, |hi|)
    root_width: float = Field(default=1e-14, gt=0)

    # Sweeps
    sweep_n_cap: int = Field(default=12, ge=2)
    growth_threshold: float = 0.3
    discrepancy_cap: float = Field(default=0.75, gt=0)
    vdc_growth_factor: float = Field(default=2.0, gt=1)
    workers: int = Field(default=1, ge=1)

    # Run ledger
    db_path: Optional[str] = None
    record_runs: bool = True

    def engine_config(self) -> dict[str, Any]:
        """The subset of settings that determines numeric results."""
        return {
            "tol": self.tol,
            "precision": self.precision,
            "seed": self.seed,
            "max_lobes": self.max_lobes,
            "conv_tol": self.conv_tol,
            "conv_min_k": self.conv_min_k,
            "conv_window": self.conv_window,
            "root_width": self.root_width,
            "growth_threshold": self.growth_threshold,
            "discrepancy_cap": self.discrepancy_cap,
        }


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Get engine settings (cached singleton)."""
    return Settings()


def resolve_settings(overrides: dict[str, Any] | None = None) -> Settings:
    """Return settings with explicit overrides applied on top of the environment.

    ``None`` values in *overrides* mean "not given" and are ignored. The result
    is validated again so a bad flag fails the same way a bad env var does.
    """
    base = get_settings()
    update = {k: v for k, v in (overrides or {}).items() if v is not None}
    if not update:
        return base
    return Settings.model_validate({**base.model_dump(), **update})


def apply_overrides(overrides: dict[str, Any] | None = None) -> Settings:
    """Validate *overrides* and make them the active settings.

    Overrides are written back as ``OSCINT_*`` environment variables so worker
    processes started afterwards see the same configuration.
    """
    settings = resolve_settings(overrides)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if isinstance(value, Enum):
            value = value.value
        os.environ[f"OSCINT_{key.upper()}"] = str(value)
    get_settings.cache_clear()
    return settings
