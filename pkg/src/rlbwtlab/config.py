"""
Configuration for rlbwt-lab
Defaults, .env loading and RLBWT_* environment overrides
"""
import logging
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler

# Per-user configuration file location
CONFIG_PATH = Path.home() / ".rlbwt-lab.env"

OUTPUT_FORMATS = ("json", "csv", "text")

ENV_KEYS = {
    "seed": "RLBWT_SEED",
    "bound_constant": "RLBWT_BOUND_CONSTANT",
    "delta_enumeration_limit": "RLBWT_DELTA_LIMIT",
    "retry_limit": "RLBWT_RETRY_LIMIT",
    "output_format": "RLBWT_OUTPUT_FORMAT",
    "sampling_constant": "RLBWT_SAMPLING_CONSTANT",
    "comp_k": "RLBWT_COMP_K",
    "log_level": "RLBWT_LOG_LEVEL",
    "workers": "RLBWT_WORKERS",
}


@dataclass(frozen=True)
class Config:
    """Harness policy knobs. None of these are values taken from the theory."""

    seed: int = 20240101
    bound_constant: int = 64
    delta_enumeration_limit: int = 4096
    retry_limit: int = 32
    output_format: str = "text"
    sampling_constant: float = 2.0
    comp_k: int = 6
    log_level: str = "INFO"
    workers: int = 4

    def validate(self) -> "Config":
        for name in ("bound_constant", "delta_enumeration_limit", "retry_limit", "comp_k", "workers"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.sampling_constant <= 0:
            raise ValueError(f"sampling_constant must be positive, got {self.sampling_constant}")
        if self.output_format not in OUTPUT_FORMATS:
            raise ValueError(
                f"output_format must be one of {', '.join(OUTPUT_FORMATS)}, got {self.output_format!r}"
            )
        return self

    def with_overrides(self, **overrides) -> "Config":
        """Return a copy with the non-None overrides applied."""
        updates = {key: value for key, value in overrides.items() if value is not None}
        return replace(self, **updates).validate()


def load_config(env_file: Path = None) -> Config:
    """Build a Config from defaults, .env files and RLBWT_* variables."""
    load_dotenv()
    load_dotenv(env_file or CONFIG_PATH)

    values = {}
    for field in fields(Config):
        raw = os.getenv(ENV_KEYS[field.name])
        if raw is None or raw == "":
            continue
        try:
            if field.type in (int, "int"):
                values[field.name] = int(raw)
            elif field.type in (float, "float"):
                values[field.name] = float(raw)
            else:
                values[field.name] = raw.strip().lower() if field.name == "output_format" else raw.strip()
        except ValueError as exc:
            raise ValueError(f"{ENV_KEYS[field.name]}={raw!r} is not a valid {field.type}") from exc
    return Config(**values).validate()


def setup_logging(level: str = "INFO") -> logging.Logger:
    """Attach a stderr RichHandler to the package logger (idempotent)."""
    logger = logging.getLogger("rlbwtlab")
    logger.setLevel(level.upper())
    if not any(isinstance(handler, RichHandler) for handler in logger.handlers):
        handler = RichHandler(console=Console(stderr=True), show_path=False, rich_tracebacks=True)
        handler.setFormatter(logging.Formatter("%(message)s"))
        logger.addHandler(handler)
    logger.propagate = False
    return logger
