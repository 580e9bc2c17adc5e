"""
Application Configuration Settings

This module defines the configuration settings for the estimation toolkit.
It loads environment variables and provides default values for all
configurable parameters.

Environment Variables:
    CGGM_DEBUG: Enable debug logging (true/false)
    CGGM_HOST: HTTP service host address (default: 0.0.0.0)
    CGGM_PORT: HTTP service port number (default: 8000)
    CGGM_THREADS: Default worker budget for tuning/replicate fan-out
    CGGM_RHO: Multiplier growth factor of the augmented Lagrangian
    CGGM_PENALTY_INIT: Initial quadratic multipliers b and d
    CGGM_EPS_CD / CGGM_EPS_ALM / CGGM_EPS_DC: Convergence tolerances
    CGGM_MAX_CD / CGGM_MAX_ALM / CGGM_MAX_DC: Iteration caps
    CGGM_EPS_ZERO: Threshold below which an off-diagonal entry is zero
    CGGM_EPS_MERGE: Gap below which two estimated values share a color

Features:
    - Environment variable loading via python-dotenv
    - Configuration validation
    - Default values for all settings
"""

import os
from pathlib import Path
from dotenv import load_dotenv

# Find .env file in project root (parent directory of colored_ggm/)
env_path = Path(__file__).parent.parent / '.env'

# override=True ensures .env file values take precedence
load_dotenv(dotenv_path=env_path, override=True)


class Settings:
    """
    Toolkit settings configuration class.

    Loads configuration from environment variables and provides validation.
    All settings have defaults and can be overridden via environment variables.
    """

    def __init__(self):
        # Service configuration
        self.debug: bool = os.getenv("CGGM_DEBUG", "false").lower() == "true"
        self.host: str = os.getenv("CGGM_HOST", "0.0.0.0")
        self.port: int = int(os.getenv("CGGM_PORT", "8000"))
        self.threads: int = int(os.getenv("CGGM_THREADS", "1"))

        # Augmented Lagrangian
        self.rho: float = float(os.getenv("CGGM_RHO", "2.0"))
        self.penalty_init: float = float(os.getenv("CGGM_PENALTY_INIT", "1.0"))

        # Stopping rules of the three solver levels
        self.eps_cd: float = float(os.getenv("CGGM_EPS_CD", "1e-7"))
        self.eps_alm: float = float(os.getenv("CGGM_EPS_ALM", "1e-5"))
        self.eps_dc: float = float(os.getenv("CGGM_EPS_DC", "1e-5"))
        self.max_cd: int = int(os.getenv("CGGM_MAX_CD", "500"))
        self.max_alm: int = int(os.getenv("CGGM_MAX_ALM", "50"))
        self.max_dc: int = int(os.getenv("CGGM_MAX_DC", "20"))

        # Post-processing
        self.eps_zero: float = float(os.getenv("CGGM_EPS_ZERO", "1e-6"))
        self.eps_merge: float = float(os.getenv("CGGM_EPS_MERGE", "1e-3"))

        # Cubic root bracketing for the diagonal update
        self.root_lower: float = 1e-10
        self.root_upper_cap: float = 2.0 ** 60
        self.root_xtol: float = 1e-15

    def validate(self) -> None:
        """
        Validate that settings are within their admissible ranges.

        Raises:
            ValueError: If any setting is out of range
        """
        if self.rho <= 1:
            raise ValueError("CGGM_RHO must be greater than 1")
        if self.penalty_init <= 0:
            raise ValueError("CGGM_PENALTY_INIT must be positive")
        for name in ("eps_cd", "eps_alm", "eps_dc", "eps_zero", "eps_merge"):
            if getattr(self, name) <= 0:
                raise ValueError(f"CGGM_{name.upper()} must be positive")
        for name in ("max_cd", "max_alm", "max_dc", "threads"):
            if getattr(self, name) < 1:
                raise ValueError(f"CGGM_{name.upper()} must be at least 1")


# Global settings instance - used throughout the package
settings = Settings()
