import os
import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

from gridsched.errors import SchemaError

logger = logging.getLogger("config")

RUN_MODES = ("uncoordinated", "plain", "global", "individualized", "oracle", "w-sweep")


@dataclass
class Config:
    # --- Logging ---
    log_level: str = "INFO"
    log_format: str = "text"   # "text" or "json"

    # --- Execution ---
    workers: int = 4                 # threads for concurrent household solves
    output_dir: str = "results"
    seed: int = 7                    # synthetic profile seed
    max_iters_override: int = 0      # > 0 replaces admm.max_iters on every run

    @classmethod
    def load(cls) -> "Config":
        """Loads configuration from environment variables with sensible defaults."""

        def _env_str(key: str, default: str = "") -> str:
            return os.getenv(key, default)

        def _env_int(key: str, default: int = 0) -> int:
            val = os.getenv(key)
            if val is None:
                return default
            try:
                return int(val)
            except ValueError:
                logger.warning(f"Invalid int for {key}: {val!r}, using default {default}")
                return default

        log_level = _env_str("GRIDSCHED_LOG", "INFO").upper()
        if log_level not in ("DEBUG", "INFO", "WARNING", "ERROR"):
            logger.warning(f"Invalid log level {log_level!r}, using INFO")
            log_level = "INFO"

        log_format = _env_str("LOG_FORMAT", "text").lower()
        if log_format not in ("text", "json"):
            logger.warning(f"Invalid LOG_FORMAT {log_format!r}, using text")
            log_format = "text"

        workers = _env_int("GRIDSCHED_WORKERS", 4)
        if workers < 1:
            logger.warning(f"GRIDSCHED_WORKERS must be >= 1, got {workers}; using 1")
            workers = 1

        return cls(
            log_level=log_level,
            log_format=log_format,
            workers=workers,
            output_dir=_env_str("GRIDSCHED_OUTPUT_DIR", "results"),
            seed=_env_int("GRIDSCHED_SEED", 7),
            max_iters_override=max(0, _env_int("GRIDSCHED_MAX_ITERS", 0)),
        )


@dataclass
class RunConfig:
    """One CLI run: where the scenario comes from, what to run and where results go."""
    mode: str = "global"
    output_dir: str = "results"
    scenario_path: Optional[str] = None    # None means the reference scenario for `seed`
    seed: int = 7
    overrides: Tuple[str, ...] = field(default_factory=tuple)
    max_iters: Optional[int] = None
    tol: Optional[float] = None

    def validate(self) -> "RunConfig":
        problems = []
        if self.mode not in RUN_MODES:
            problems.append(f"mode: {self.mode!r} is not one of {', '.join(RUN_MODES)}")
        if self.max_iters is not None and self.max_iters < 1:
            problems.append(f"max_iters: must be >= 1, got {self.max_iters}")
        if self.tol is not None and self.tol <= 0:
            problems.append(f"tol: must be > 0, got {self.tol}")
        try:
            os.makedirs(self.output_dir, exist_ok=True)
            if not os.access(self.output_dir, os.W_OK):
                problems.append(f"output_dir: {self.output_dir} is not writable")
        except OSError as e:
            problems.append(f"output_dir: cannot create {self.output_dir} ({e})")
        if problems:
            raise SchemaError("; ".join(problems), problems)
        return self

    def scenario_overrides(self) -> Tuple[str, ...]:
        """User overrides plus the ones implied by --max-iters and --tol."""
        extra = []
        if self.max_iters is not None:
            extra.append(f"admm.max_iters={self.max_iters}")
        if self.tol is not None:
            extra += [f"admm.eps_primal={self.tol}", f"admm.eps_dual={self.tol}"]
        return tuple(self.overrides) + tuple(extra)
