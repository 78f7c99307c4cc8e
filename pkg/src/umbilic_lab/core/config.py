import os
import tempfile
from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict

from .exceptions import ScenarioConfigError


class Settings(BaseSettings):
    """Loads lab tolerances and limits from a .env file and environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="UMBILIC_LAB_", env_file=".env", extra="ignore"
    )

    PROJECT_NAME: str = "umbilic-lab"
    LOG_LEVEL: str = "INFO"

    # Caps the worker pool used for per-umbilic and per-loop evaluations.
    THREADS: int = 4

    # Certificate tolerances. EPS_CERT is absolute and gets scaled per sample
    # by (1 + H^2 + |K|).
    EPS_CERT: float = 1e-12
    EPS_EQ: float = 1e-8
    EPS_CONTACT: float = 1e-12

    # Surface kernel tolerances.
    EPS_DISC: float = 1e-12
    X_MIN_TOL: float = 1e-9

    # Property (W) analysis.
    WINDOW_FRACTION: float = 0.1
    WEDGE_SLOPE_MAX: float = -0.01
    WEDGE_SLOPE_MIN: float = -100.0

    # Winding numbers.
    MIN_LOOP_SAMPLES: int = 64
    WINDING_RETRIES: int = 4


def get_output_dir(output_dir: str | Path) -> Path:
    """Creates and returns the directory a scenario run writes into."""
    path = Path(output_dir)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ScenarioConfigError(
            f"The output directory is not valid and could not be created: {path} - Error: {e}"
        )
    return path


def atomic_write_text(path: Path, text: str) -> None:
    """Writes text through a temporary sibling file and an atomic rename."""
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise


def thread_count() -> int:
    """Returns the effective worker count, never below one."""
    return max(1, settings.THREADS)


settings = Settings()

TOOL_VERSION = "0.3.0"
