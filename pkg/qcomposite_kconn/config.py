import logging
import os
import sys

from dotenv import load_dotenv
from pydantic import BaseModel, Field

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

# Load environment variables
load_dotenv()


class Settings(BaseModel):
    log_level: str = "WARNING"
    """Root log level for the CLI."""

    log_file: str | None = None
    """Optional file that receives a copy of every log record."""

    workers: int = Field(default=1, ge=1)
    """Worker processes used for Monte Carlo trials."""

    trials: int = Field(default=500, ge=1)
    """Default number of trials per parameter point."""

    progress: bool = False
    """Show a live progress display on stderr."""


def _env_flag(value: str | None) -> bool:
    return value is not None and value.strip().lower() in {"1", "true", "yes", "on"}


def get_settings() -> Settings:
    """Read settings from QCOMP_* environment variables (and .env)."""
    raw: dict[str, object] = {}
    if level := os.environ.get("QCOMP_LOG_LEVEL"):
        raw["log_level"] = level.upper()
    if log_file := os.environ.get("QCOMP_LOG_FILE"):
        raw["log_file"] = log_file
    if workers := os.environ.get("QCOMP_WORKERS"):
        raw["workers"] = workers
    if trials := os.environ.get("QCOMP_TRIALS"):
        raw["trials"] = trials
    if "QCOMP_PROGRESS" in os.environ:
        raw["progress"] = _env_flag(os.environ["QCOMP_PROGRESS"])
    return Settings.model_validate(raw)


def configure_logging(level: str = "WARNING", log_file: str | None = None) -> None:
    # stdout carries CSV and reports, so log records go to stderr.
    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.WARNING),
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )
