"""
Configuration settings for the joint measurability / steering toolkit.
"""
from pydantic_settings import BaseSettings, SettingsConfigDict
from dotenv import load_dotenv

load_dotenv()


class Settings(BaseSettings):
    """Application settings."""

    # API Configuration
    api_title: str = "Joint Measurability & Steering API"
    api_description: str = "SDP-based joint measurability and EPR-steering decisions"
    api_version: str = "1.0.0"
    debug: bool = False

    # Server Configuration
    host: str = "0.0.0.0"
    port: int = 8000

    # Logging
    log_level: str = "INFO"

    # Conic solver
    solver: str = "CLARABEL"
    fallback_solver: str = "SCS"
    solver_max_iter: int = 200
    scs_max_iters: int = 50_000
    polish_max_columns: int = 4096

    # Tolerances
    feasibility_tol: float = 1e-8
    gap_tol: float = 1e-8
    witness_tol: float = 1e-7
    bisection_width: float = 1e-7
    hermiticity_tol: float = 1e-12
    psd_tol: float = 1e-9
    marginal_tol: float = 1e-8
    witness_offset: float = 1e-4

    # Guards
    max_parent_outcomes: int = 4096
    max_copies: int = 6

    # Fermat-Torricelli
    ft_tol: float = 1e-10
    ft_max_iter: int = 100_000

    # LHV explorer
    noisy_bell_limit: float = 0.6595
    lhv_bisection_width: float = 1e-3
    ua_grid: int = 6
    ua_random: int = 50
    extension_symmetry: str = "permutation"
    ppt_extensions: bool = False

    # Output
    sig_digits: int = 12

    # CORS Configuration
    allowed_origins: list[str] = ["http://localhost:3000"]
    allowed_credentials: bool = True
    allowed_methods: list[str] = ["*"]
    allowed_headers: list[str] = ["*"]

    model_config = SettingsConfigDict(env_file=".env", env_prefix="JMSTEER_", extra="ignore")


# Global settings instance
settings = Settings()
