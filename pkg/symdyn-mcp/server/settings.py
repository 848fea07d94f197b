"""Runtime settings, read from SYMDYN_* environment variables and a .env file."""

from fractions import Fraction
from functools import lru_cache

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class SymdynSettings(BaseSettings):
    """Tunable depths, precisions and budgets."""

    model_config = SettingsConfigDict(
        env_prefix="SYMDYN_", env_file=".env", extra="ignore"
    )

    log_level: str = "INFO"
    guard_depth: int = 64
    guard_cap: int = 1024
    truncation_depth: int = 20
    window_floor: int = 16
    leaf_scan: int = 4096
    mp_dps: int = 60
    beta_precision_bits: int = 256
    explicit_cap: int = 1 << 20
    pattern_cap: int = 1 << 22
    search_budget: int = 200_000
    default_eps: Fraction = Fraction(1, 8)
    default_delta: Fraction = Fraction(1, 2)
    dwell: int = 0

    @field_validator("default_eps", "default_delta", mode="before")
    @classmethod
    def _parse_fraction(cls, value):
        return Fraction(str(value))

    @field_validator(
        "guard_depth", "guard_cap", "truncation_depth", "window_floor", "leaf_scan", "mp_dps"
    )
    @classmethod
    def _positive(cls, value: int) -> int:
        if value < 1:
            raise ValueError("must be positive")
        return value


@lru_cache(maxsize=1)
def get_settings() -> SymdynSettings:
    """Get the process-wide settings instance."""
    return SymdynSettings()
