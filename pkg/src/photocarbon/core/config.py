import logging
from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple, Type

from pydantic import BaseModel, Field, field_validator
from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
    YamlConfigSettingsSource,
)
from rich.console import Console
from rich.logging import RichHandler

from .errors import ConfigError

LOGGER_NAME = "photocarbon"


class ReportFormat(str, Enum):
    TABLE = "table"
    CSV = "csv"
    KEYVALUE = "keyvalue"


class WaferSettings(BaseModel):
    """Default wafer geometry for per-wafer conversions"""
    diameter_mm: float = Field(default=300.0, gt=0)
    edge_exclusion_mm: float = Field(default=3.0, ge=0)


class Settings(BaseSettings):
    """Main application settings"""
    log_level: str = Field(default="WARNING")
    log_format: str = Field(default="%(message)s")
    presets_path: Optional[Path] = Field(default=None)
    ci_path: Optional[Path] = Field(default=None)
    default_format: ReportFormat = Field(default=ReportFormat.TABLE)
    sweep_workers: int = Field(default=4, ge=1)
    wafer: WaferSettings = Field(default_factory=WaferSettings)
    yield_curve_defect_densities: List[float] = Field(default=[0.05, 0.1, 0.2])

    model_config = SettingsConfigDict(
        env_prefix="PHOTOCARBON_",
        env_file=".env",
        env_file_encoding="utf-8",
        env_nested_delimiter="__",
        yaml_file="photocarbon.yml",
        extra="ignore",
    )

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        level = v.upper()
        if level not in ("CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG"):
            raise ValueError(f"unknown log level {v!r}")
        return level

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: Type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        return (
            init_settings,
            env_settings,
            dotenv_settings,
            YamlConfigSettingsSource(settings_cls),
            file_secret_settings,
        )


def get_config(**overrides) -> Settings:
    """Get application configuration"""
    try:
        return Settings(**overrides)
    except Exception as e:
        raise ConfigError(
            "Failed to load configuration",
            {"error": str(e)}
        ) from e


def setup_logging(settings: Settings, quiet: bool = False, verbose: bool = False) -> logging.Logger:
    """Configure the package logger once; diagnostics always go to stderr."""
    logger = logging.getLogger(LOGGER_NAME)
    if verbose:
        level = logging.DEBUG
    elif quiet:
        level = logging.ERROR
    else:
        level = logging.getLevelName(settings.log_level)
    logger.setLevel(level)

    for handler in list(logger.handlers):
        if getattr(handler, "_photocarbon", False):
            logger.removeHandler(handler)

    handler = RichHandler(
        console=Console(stderr=True),
        show_time=False,
        show_path=False,
        markup=False,
    )
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(settings.log_format))
    handler._photocarbon = True  # type: ignore[attr-defined]
    logger.addHandler(handler)
    return logger
