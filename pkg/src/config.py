import yaml
import os
import logging
from functools import lru_cache
from typing import Dict, Any, Optional
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field

# Configure logger
logger = logging.getLogger(__name__)


class SolverSettings(BaseModel):
    """Numerical settings shared by every solver in the package."""

    model_config = ConfigDict(frozen=True)

    n_cap: int = Field(default=14, ge=1)
    imag_tol: float = 1e-9
    empty_entry_tol: float = 1e-10
    monomial_rtol: float = 1e-6
    residual_tol: float = 1e-9
    repeated_eig_tol: float = 1e-8
    bisection_xtol: float = 1e-14
    bracket_growth: float = Field(default=2.0, gt=1.0)
    bracket_max_expansions: int = 200

    altruistic_tol: float = 1e-12
    altruistic_max_iter: int = 10000
    altruistic_residual_tol: float = 1e-10

    horizon_factor: float = 20.0
    max_dt: float = 1e-3
    dt_factor: float = 0.01
    blowup: float = 1e12

    reproduce_n_max: int = Field(default=50, ge=2)


class ConfigManager:
    """Configuration manager for loading and accessing YAML configuration."""

    _config = None

    def __init__(self, config_path: Optional[str] = None):
        self._load_config(config_path)

    def _load_config(self, config_path: Optional[str] = None):
        """Load configuration from YAML file and override with environment variables."""
        if config_path is None:
            # Default to config.yaml in the config folder (next to this file)
            current_dir = Path(__file__).parent
            config_path = current_dir / "config" / "config.yaml"

        try:
            with open(config_path, 'r', encoding='utf-8') as file:
                self._config = yaml.safe_load(file) or {}
                logger.debug(f"Configuration loaded successfully from {config_path}")

            self._override_with_env_vars()

            return self._config
        except FileNotFoundError:
            logger.error(f"Config file not found: {config_path}")
            raise
        except yaml.YAMLError as e:
            logger.error(f"Error parsing config file: {e}")
            raise

    def _override_with_env_vars(self):
        """Override configuration values with environment variables."""
        if os.getenv('LOG_LEVEL'):
            self._config.setdefault('app', {})['log_level'] = os.getenv('LOG_LEVEL')

        n_cap = os.getenv('LQGAME_N_CAP')
        if n_cap:
            try:
                self._config.setdefault('solver', {})['n_cap'] = int(n_cap)
            except ValueError:
                raise ValueError(f"LQGAME_N_CAP must be an integer, got {n_cap!r}")
            logger.info(f"Eigen solver cap overridden from environment: N <= {n_cap}")

    def get_value(self, section: str, key: str, default: Any = None) -> Any:
        """Get a configuration value by section and key."""
        return (self._config.get(section) or {}).get(key, default)

    def solver_settings(self) -> SolverSettings:
        """Flatten the solver-related sections into a validated SolverSettings."""
        values: Dict[str, Any] = dict(self._config.get('solver') or {})
        for key, value in (self._config.get('altruistic') or {}).items():
            values[f"altruistic_{key}"] = value
        values.update(self._config.get('simulate') or {})
        for key, value in (self._config.get('reproduce') or {}).items():
            values[f"reproduce_{key}"] = value
        return SolverSettings(**values)


@lru_cache(maxsize=1)
def get_settings() -> SolverSettings:
    """Settings from the packaged config file, loaded once per process.

    Only a missing file falls back to the defaults; a malformed file or a bad
    environment override raises.
    """
    try:
        return ConfigManager().solver_settings()
    except FileNotFoundError as e:
        logger.warning(f"Packaged settings file missing: {e}, using defaults")
        return SolverSettings()
