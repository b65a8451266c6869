from typing import Tuple

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FILE: str = ""

    # Run ledger (empty disables it) and output location
    LEDGER_URL: str = ""
    OUTPUT_DIR: str = "runs"

    # Monte Carlo
    DEFAULT_SEED: int = 20240607
    MC_SAMPLES: int = 2**20
    MC_BATCH: int = 2**16
    MC_WORKERS: int = 1

    # Linear algebra and LP tolerances
    RANK_RTOL: float = 1e-10
    PROPORTIONAL_TOL: float = 1e-12
    SLACK_THRESHOLD: float = 1e-9

    # Kernel derivatives
    DERIVATIVE_STEPS: Tuple[float, ...] = (1e-2, 5e-3, 2.5e-3)
    DERIVATIVE_THRESHOLD: float = 1e-6
    GAMMA_AGREEMENT: float = 1e-2

    # Set representations
    ANGULAR_NODES: int = 2048
    GRID_CELLS_PER_RADIUS: int = 256
    GRID_BOX_FACTOR: float = 1.5

    # Fiber quadrature
    FIBER_NODES: int = 64
    FIBER_PANELS: int = 8

    # Orbit fitting
    ORBIT_STARTS: int = 16
    ORBIT_STOP: float = 1e-4
    ORBIT_MAX_EVALUATIONS: int = 4000

    # Spectral / flow / stability
    NU_MAX: int = 32
    FLOW_STEPS: int = 50
    FIT_MAX_RELATIVE_ERROR: float = 0.2
    ROTATION_TRIALS: int = 64

    class Config:
        env_file = ".env"
        env_prefix = "RBLL_"
        extra = "ignore"

settings = Settings()
