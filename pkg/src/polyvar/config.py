"""Run configuration loaded from defaults and environment variables."""

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

logger = logging.getLogger("polyvar")


def _env_int(name: str) -> int | None:
    """Read a non-negative integer from the environment, ignoring malformed values."""
    raw = os.environ.get(name, "").strip()
    if not raw:
        return None
    try:
        value = int(raw)
    except ValueError:
        logger.warning(f"Ignoring {name}={raw!r}: not an integer")
        return None
    if value < 0:
        logger.warning(f"Ignoring {name}={raw!r}: must be non-negative")
        return None
    return value


@dataclass
class Config:
    """Toolkit configuration: sampling defaults, exact-path limits and tolerances."""

    # Sampling
    DEFAULT_SAMPLES: int = 1_000_000
    BATCHES: int = 64
    SEED: int = 0

    # Concurrency
    MAX_WORKERS: int = field(default_factory=lambda: os.cpu_count() or 4)

    # Exact paths
    ENUMERATION_LIMIT: int = 20
    ORACLE_MAX_HULL_DIM: int = 3

    # Acceptance
    ORACLE_TOL: float = 1e-9
    SNC_TOL: float = 1e-12
    SE_THRESHOLD: float = 4.0

    # Optional override for the report directory (set via --out-dir or POLYVAR_OUTPUT_DIR).
    output_dir_override: Path | None = None

    @property
    def output_dir(self) -> Path:
        """Directory for reports: the override if set, else ./results."""
        if self.output_dir_override is not None:
            return self.output_dir_override
        return Path("./results")

    @property
    def sweep_dir(self) -> Path:
        """Directory for sweep CSV files."""
        return self.output_dir / "sweeps"

    @classmethod
    def from_env(cls) -> "Config":
        """Factory: read POLYVAR_* environment variables and return a Config instance.

        Reads POLYVAR_SEED, POLYVAR_THREADS and POLYVAR_OUTPUT_DIR. All other
        fields keep their default values.
        """
        config = cls()
        seed = _env_int("POLYVAR_SEED")
        if seed is not None:
            config.SEED = seed
        threads = _env_int("POLYVAR_THREADS")
        if threads:
            config.MAX_WORKERS = threads
        output_dir = os.environ.get("POLYVAR_OUTPUT_DIR", "").strip()
        if output_dir:
            config.output_dir_override = Path(output_dir)
        return config


settings = Config.from_env()


def set_output_dir(path: str | os.PathLike | None) -> None:
    """Override the report directory on the global settings.

    A falsy path (None or empty string) leaves the default in place.
    """
    if path:
        settings.output_dir_override = Path(path)
