import os
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, field_validator

from .error_handling import ConfigError

# Set up logging
LOGGER = logging.getLogger(__name__)

ENV_PREFIX = "KERNEL_LATTICE_"
DEFAULT_CONFIG_PATH = Path(__file__).parent / "config" / "lattice_config.yaml"


class ToleranceConfig(BaseModel):
    """Numerical thresholds shared by all modules"""
    tau_supp: float = 1e-12  # support detection for absolute continuity
    tau_cont: float = 0.05  # tail oscillation for continuity on sequence spaces
    tau_sc: float = 1e-6  # stochastic continuity at the end of the t-grid
    lattice: float = 1e-12
    semigroup_law: float = 1e-10
    markov_mass: float = 1e-9
    weak_continuity: float = 1e-10

    @field_validator('*')
    @classmethod
    def validate_positive(cls, v):
        if v <= 0:
            raise ValueError('tolerances must be strictly positive')
        return v


class OracleConfig(BaseModel):
    """Configuration for the brute-force positive-part oracle"""
    n_oracle: int = 12
    trials: int = 100
    max_deviation: float = 1e-12

    @field_validator('n_oracle', 'trials')
    @classmethod
    def validate_count(cls, v):
        if v < 1:
            raise ValueError('must be at least 1')
        return v


class ConvergenceConfig(BaseModel):
    """Configuration for invariant measures and convergence traces"""
    tol: float = 1e-8
    t_max: float = 128
    power_tol: float = 1e-12
    max_iterations: int = 1_000_000
    fit_window: int = 10
    grid: str = "geometric"

    @field_validator('tol', 'power_tol', 't_max')
    @classmethod
    def validate_positive(cls, v):
        if v <= 0:
            raise ValueError('must be strictly positive')
        return v

    @field_validator('fit_window')
    @classmethod
    def validate_window(cls, v):
        if v < 2:
            raise ValueError('fit_window needs at least two points')
        return v

    @field_validator('grid')
    @classmethod
    def validate_grid(cls, v):
        if v not in ('geometric', 'linear'):
            raise ValueError("grid must be 'geometric' or 'linear'")
        return v


class LoggingConfig(BaseModel):
    """Logging configuration"""
    level: str = "INFO"
    format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    file: Optional[Path] = None


class ErrorHandlingConfig(BaseModel):
    """Where command errors are recorded"""
    error_log_dir: Optional[Path] = None


class LatticeConfig(BaseModel):
    """Main configuration class"""
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)
    oracle: OracleConfig = Field(default_factory=OracleConfig)
    convergence: ConvergenceConfig = Field(default_factory=ConvergenceConfig)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)
    error_handling: ErrorHandlingConfig = Field(default_factory=ErrorHandlingConfig)
    seed: int = 0


class RunConfig(BaseModel):
    """Resolved settings for a single CLI invocation"""
    command: str
    inputs: List[Path] = Field(default_factory=list)
    output: Optional[Path] = None
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)
    n_oracle: int = 12
    tol: float = 1e-8
    seed: int = 0

    @field_validator('n_oracle')
    @classmethod
    def validate_n_oracle(cls, v):
        if v < 1:
            raise ValueError('n_oracle must be at least 1')
        return v

    @field_validator('tol')
    @classmethod
    def validate_tol(cls, v):
        if v <= 0:
            raise ValueError('tol must be strictly positive')
        return v

    @classmethod
    def from_sources(cls, config: LatticeConfig, command: str, **overrides: Any) -> "RunConfig":
        """Layer explicit CLI values (None means unset) over the loaded config"""
        tolerances = config.tolerances.model_dump()
        for key in list(tolerances):
            value = overrides.pop(key, None)
            if value is not None:
                tolerances[key] = value
        values: Dict[str, Any] = {
            "command": command,
            "tolerances": tolerances,
            "n_oracle": config.oracle.n_oracle,
            "tol": config.convergence.tol,
            "seed": config.seed,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls(**values)
        except ValidationError as e:
            raise ConfigError(f"Invalid run settings: {e}") from e


class ConfigManager:
    """Configuration manager for the kernel lattice tools"""

    def __init__(self, config_path: Optional[Path] = None):
        """Initialize configuration manager"""
        self.explicit_path = config_path is not None
        self.config_path = Path(config_path) if config_path else DEFAULT_CONFIG_PATH
        self._config = None
        self.load_config()

    def _load_yaml_config(self) -> dict:
        """Load configuration from YAML file"""
        LOGGER.debug(f"Loading configuration from {self.config_path}")

        if not self.config_path.exists():
            if self.explicit_path:
                raise FileNotFoundError(f"Configuration file not found: {self.config_path}")
            LOGGER.debug("Packaged configuration missing, using model defaults")
            return {}

        with open(self.config_path, 'r', encoding='utf-8') as f:
            config_dict = yaml.safe_load(f) or {}

        LOGGER.debug(f"Raw YAML content: {config_dict!r}")
        return config_dict

    def _apply_environment_overrides(self, config_dict: dict) -> dict:
        """Apply environment variable overrides to config"""
        for key, value in os.environ.items():
            if not key.startswith(ENV_PREFIX):
                continue

            # KERNEL_LATTICE_TOLERANCES__TAU_SUPP -> ['tolerances', 'tau_supp']
            parts = key[len(ENV_PREFIX):].lower().split('__')
            current = config_dict

            try:
                for part in parts[:-1]:
                    if part not in current or current[part] is None:
                        current[part] = {}
                    current = current[part]
                # pydantic coerces the string to the field type
                current[parts[-1]] = value
                LOGGER.debug(f"Applied environment override: {key} = {value}")

            except (KeyError, TypeError, AttributeError) as e:
                LOGGER.warning(f"Failed to apply environment override {key}: {e}")

        return config_dict

    def load_config(self) -> None:
        """Load and validate configuration"""
        try:
            load_dotenv()
            config_dict = self._load_yaml_config()
            config_dict = self._apply_environment_overrides(config_dict)
            self._config = LatticeConfig(**config_dict)
            LOGGER.debug("Configuration loaded (seed=%d)", self._config.seed)

        except Exception as e:
            LOGGER.error(f"Failed to load configuration: {e}")
            raise ConfigError(f"Configuration error: {e}") from e

    def get_config(self) -> LatticeConfig:
        """Get the validated configuration"""
        if self._config is None:
            raise ConfigError("Configuration not loaded")
        return self._config


def get_config_manager() -> ConfigManager:
    """Get the singleton config manager instance"""
    if not hasattr(get_config_manager, 'instance'):
        get_config_manager.instance = ConfigManager()
    return get_config_manager.instance
