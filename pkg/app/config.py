from typing import Literal

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file=".env", extra="ignore")

    # Polar coordinates are undefined below this distance to the origin
    rho_min: float = 1e-6

    # Simulation defaults (a scenario's [sim] section may override them)
    sim_dt: float = 1e-3
    sim_control_dt: float = 1e-3
    sim_t_max: float = 30.0
    sim_rho_stop: float = 1e-2
    converged_zeta: float = 1e-3

    # Files
    scenarios_dir: str = "./scenarios"
    outputs_dir: str = "./outputs"

    # Verification suites
    verify_samples: int = 100_000
    verify_seed: int = 42

    # SVG paths are decimated to at most this many vertices
    svg_max_points: int = 2000

    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"


settings = Settings()
