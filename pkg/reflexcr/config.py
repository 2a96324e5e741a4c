"""
Application configuration
"""
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings"""

    model_config = SettingsConfigDict(
        env_prefix="REFLEXCR_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    # Runtime
    threads: int = 1
    log_level: str = "INFO"
    chunk_size: int = 4096

    # Holomorphy checks
    fd_step: float = 1e-5
    domain_tolerance: float = 1e-12

    # Series
    series_order: int = 64
    multi_order: int = 16
    radius_safety: float = 0.9

    # Edge-of-the-wedge quadrature
    quadrature_nodes: int = 256
    shrink_attempts: int = 6

    # Chart inverse
    newton_tolerance: float = 1e-12
    newton_max_iterations: int = 50


settings = Settings()
