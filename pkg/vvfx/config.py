"""
Configuration management via pydantic-settings.
Every field can be overridden with a VVFX_-prefixed environment variable.
"""

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # --- Parallelism ---
    threads: int = 4  # VVFX_THREADS caps every thread pool

    # --- Attenuation defaults (configuration 4: a = c, b = 0, FET) ---
    gamma_star: float = 0.9
    default_a: float = 0.5
    default_variant: str = "fet"

    # --- Closed forms ---
    series_max_terms: int = 20
    series_tol: float = 1e-12  # relative to spot
    degenerate_stdev: float = 1e-8
    touch_payout_currency: str = "domestic"

    # --- Greeks by bumping ---
    vol_bump: float = 1e-4
    spot_bump: float = 1e-4  # relative to spot

    # --- Implied vol ---
    iv_max_vol: float = 5.0
    iv_max_iter: int = 100

    # --- Smile ---
    smile_max_iter: int = 100
    smile_strike_tol: float = 1e-10
    strangle_price_tol: float = 1e-10  # relative to spot
    smile_vol_floor: float = 1e-4
    bf2vol_tol: float = 1e-6
    bracket_attempts: int = 6
    bracket_width: float = 0.01
    smile_cache_size: int = 64

    # --- Hedge portfolio ---
    hedge_cond_max: float = 1e12

    # --- First-exit-time PDE ---
    pde_nodes: int = 400
    pde_steps: int = 400
    pde_rannacher_steps: int = 4
    pde_far_stdevs: float = 8.0
    pde_richardson_tol: float = 1e-3

    # --- Monte Carlo oracle ---
    mc_paths: int = 1_000_000
    mc_steps_per_year: int = 365
    mc_seed: int = 20090108
    mc_batch_size: int = 20_000

    # --- Calibration ---
    tikhonov_lambda: float = 1e-10

    # --- Server ---
    host: str = "0.0.0.0"
    port: int = 8000
    log_level: str = "INFO"
    sentry_dsn: str = ""

    model_config = {
        "env_prefix": "VVFX_",
        "env_file": ".env",
        "env_file_encoding": "utf-8",
        "extra": "ignore",
    }


# Singleton, import this everywhere
settings = Settings()
