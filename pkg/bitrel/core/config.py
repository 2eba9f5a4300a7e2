import os
from pathlib import Path
from typing import Optional, Tuple

from pydantic import Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from bitrel.exceptions.custom_exceptions import UsageError
from bitrel.models.schemas import RunConfig, Statistic, TraceFormat, UndefinedPolicy

ALL_METRICS = "Ham,Tmt,Cls,Cos,Cov,Dep"


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="BITREL_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Corpus - defaults mirror the published experiment
    seed: int = Field(0, ge=0)
    systems: int = Field(1000, ge=1)
    samples: int = Field(10000, ge=1)
    metrics: str = ALL_METRICS
    policy: UndefinedPolicy = UndefinedPolicy.ZERO

    # Output
    out: Path = Path("bitrel-out")
    format: TraceFormat = TraceFormat.BTR
    statistic: Statistic = Statistic.BACC
    gridpoints: int = Field(256, ge=2)

    # Estimation window, START:END over sample indices
    window: Optional[str] = None

    # Execution
    jobs: Optional[int] = Field(None, ge=1)

    # Logging
    log_level: str = "INFO"
    debug: bool = False

    @field_validator("log_level")
    def validate_log_level(cls, v):
        level = v.upper()
        if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"Unknown log level: {v}")
        return level

    def run_config(self, **overrides) -> RunConfig:
        """Merge command-line overrides (None means "not given") over these settings."""
        values = {
            "seed": self.seed,
            "systems": self.systems,
            "samples": self.samples,
            "metrics": self.metrics,
            "policy": self.policy,
            "out": self.out,
            "jobs": self.jobs or os.cpu_count() or 1,
            "format": self.format,
            "statistic": self.statistic,
            "gridpoints": self.gridpoints,
            "window": parse_window(self.window),
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        try:
            return RunConfig(**values)
        except ValidationError as e:
            raise UsageError(message="Invalid run configuration", details=_describe(e)) from e


def parse_window(text: Optional[str]) -> Optional[Tuple[int, int]]:
    if text is None:
        return None
    start, sep, end = text.partition(":")
    try:
        if not sep:
            raise ValueError(text)
        return int(start), int(end)
    except ValueError:
        raise UsageError(message=f"Window must be START:END, got '{text}'", details={"window": text}) from None


def load_settings(config_file: Optional[Path] = None) -> Settings:
    if config_file is not None and not config_file.is_file():
        raise UsageError(message=f"Config file not found: {config_file}", details={"path": str(config_file)})
    try:
        if config_file is not None:
            return Settings(_env_file=config_file)
        return Settings()
    except ValidationError as e:
        raise UsageError(message="Invalid configuration", details=_describe(e)) from e


def _describe(error: ValidationError) -> list:
    return [{"field": ".".join(str(p) for p in item["loc"]), "error": item["msg"]} for item in error.errors()]


# Global settings instance
settings = Settings()
