from pydantic import validator
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "text"  # text, json

    # Parallel sweeps (0 = all cores)
    WORKERS: int = 0

    # Eigensolver
    SOLVER_TOL: float = 1e-10
    DENSE_LIMIT: int = 1024
    MATVEC_FACTOR: int = 10
    TRUNCATION_CAP: int = 2 ** 17
    TAIL_LIMIT: float = 1e-12
    QUASI_DEGENERATE_GAP: float = 1e-8  # in units of Omega
    SEED: int = 20240917

    # Detection
    JUMP_THRESHOLD: float = 0.1
    PEAK_FACTOR: float = 5.0

    # Sweeps
    FAILURE_BUDGET: float = 0.1
    OUTPUT_DIR: str = "results"

    @validator('LOG_LEVEL')
    def validate_log_level(cls, v):
        v = v.upper()
        if v not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"unknown log level {v}")
        return v

    @validator('SOLVER_TOL', 'TAIL_LIMIT', 'QUASI_DEGENERATE_GAP', 'JUMP_THRESHOLD', 'PEAK_FACTOR')
    def validate_positive(cls, v):
        if v <= 0:
            raise ValueError("must be positive")
        return v

    @validator('WORKERS')
    def validate_workers(cls, v):
        if v < 0:
            raise ValueError("worker count cannot be negative")
        return v

    class Config:
        env_file = ".env"
        env_prefix = "RABI_"
        extra = "ignore"

settings = Settings()
