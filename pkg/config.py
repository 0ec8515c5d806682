"""
Configuration and constants for the convex-integration toolkit.

This module provides:
- Default tolerances for every verified identity and slope fit
- Support for user-configurable settings via environment variables
- Loading run presets from YAML files
"""
import os
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

# =============================================================================
# Application Info
# =============================================================================

APP_NAME: str = "Convex Integration Desk Toolkit"
APP_VERSION: str = "1.0.0"

# =============================================================================
# Tolerances
# =============================================================================

# Relative residual for spatial spectral identities (double curl, divergence)
SPECTRAL_TOL: float = float(os.environ.get("CONVINT_SPECTRAL_TOL", "1e-8"))

# Relative residual for operator identities (div R = Id, Leray, Parseval)
OPERATOR_TOL: float = float(os.environ.get("CONVINT_OPERATOR_TOL", "1e-10"))

# Relative residual for identities involving a finite-difference time derivative
FD_TOL: float = float(os.environ.get("CONVINT_FD_TOL", "1e-4"))

# Cancellation and inverse-divergence reconstruction of the new stress
CANCELLATION_TOL: float = float(os.environ.get("CONVINT_CANCELLATION_TOL", "1e-6"))

# Allowed |measured - predicted| for building-block slopes
BLOCK_SLOPE_TOL: float = float(os.environ.get("CONVINT_BLOCK_SLOPE_TOL", "0.15"))

# Allowed |measured - predicted| for the decorrelation / stationary-phase lemmas
LEMMA_SLOPE_TOL: float = float(os.environ.get("CONVINT_LEMMA_SLOPE_TOL", "0.2"))

# Mean of an input to the inverse divergence, relative to its L^2 norm
MEAN_FREE_TOL: float = float(os.environ.get("CONVINT_MEAN_FREE_TOL", "1e-12"))

# Partition of unity must sum to one within this
PARTITION_TOL: float = float(os.environ.get("CONVINT_PARTITION_TOL", "1e-12"))

# Geometric decomposition reconstruction residual
DECOMPOSITION_TOL: float = float(os.environ.get("CONVINT_DECOMPOSITION_TOL", "1e-10"))

# =============================================================================
# Desk-Scale Defaults
# =============================================================================

DEFAULT_SEED: int = int(os.environ.get("CONVINT_SEED", "20240601"))
DEFAULT_GRID: int = int(os.environ.get("CONVINT_GRID", "32"))
DEFAULT_TIME_SAMPLES: int = int(os.environ.get("CONVINT_TIME_SAMPLES", "65"))
DEFAULT_PERIOD: float = 1.0

# A local solve aborts when its H^3 norm grows by this factor
BLOWUP_FACTOR: float = float(os.environ.get("CONVINT_BLOWUP_FACTOR", "10"))

# Samples per radius in the epsilon_u search
EPSILON_U_SAMPLES: int = int(os.environ.get("CONVINT_EPSILON_U_SAMPLES", "10000"))

# Grid points per finest jet length scale (N >= RESOLUTION_FACTOR * lambda * N_Lambda);
# about two grid spacings per tube radius
RESOLUTION_FACTOR: int = 12

# Desk overrides for the subdivision (the literal rule is unreachable numerically)
DEFAULT_SUBDIVISIONS: int = 8
DEFAULT_OVERLAP: float = 1.0 / 64.0

DEFAULT_ETA_STAR: str = "1/2"
DEFAULT_A: int = 2

# Dyadic lambda sweep used by scaling and decay reports
DEFAULT_LAMBDAS: List[int] = [8, 16, 32]

PASS: str = "PASS"
FAIL: str = "FAIL - Review Required"


# =============================================================================
# Flexible Configuration System
# =============================================================================

class Config:
    """
    Configuration manager that supports:
    - Environment variables
    - Custom YAML configuration files
    - Run presets
    - Runtime overrides
    """

    _instance: Optional["Config"] = None
    _presets: Dict[str, Any] = {}
    _settings: Dict[str, Any] = {}

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._instance._load_defaults()
            cls._instance._load_custom_config()
        return cls._instance

    def _load_defaults(self) -> None:
        """Load default settings."""
        self._settings = {
            "spectral_tol": SPECTRAL_TOL,
            "operator_tol": OPERATOR_TOL,
            "fd_tol": FD_TOL,
            "cancellation_tol": CANCELLATION_TOL,
            "block_slope_tol": BLOCK_SLOPE_TOL,
            "lemma_slope_tol": LEMMA_SLOPE_TOL,
            "mean_free_tol": MEAN_FREE_TOL,
            "partition_tol": PARTITION_TOL,
            "decomposition_tol": DECOMPOSITION_TOL,

            "seed": DEFAULT_SEED,
            "grid": DEFAULT_GRID,
            "time_samples": DEFAULT_TIME_SAMPLES,
            "period": DEFAULT_PERIOD,
            "blowup_factor": BLOWUP_FACTOR,
            "epsilon_u_samples": EPSILON_U_SAMPLES,
            "subdivisions": DEFAULT_SUBDIVISIONS,
            "overlap": DEFAULT_OVERLAP,
            "eta_star": DEFAULT_ETA_STAR,
            "a": DEFAULT_A,
            "lambdas": list(DEFAULT_LAMBDAS),
        }

    def _load_custom_config(self) -> None:
        """Load custom configuration from a YAML file if available."""
        config_paths = [
            Path.cwd() / "config.yaml",
            Path.cwd() / "config.yml",
            Path(__file__).parent / "config.yaml",
            Path.home() / ".convint" / "config.yaml",
        ]

        for config_path in config_paths:
            if config_path.exists():
                try:
                    with open(config_path, 'r', encoding='utf-8') as f:
                        custom_config = yaml.safe_load(f) or {}
                        self._settings.update(custom_config)
                        print(f"Loaded config from {config_path}")
                        break
                except Exception as e:
                    print(f"Warning: Could not load config from {config_path}: {e}")

        self._load_presets()

    def _load_presets(self) -> None:
        """Load run presets from YAML."""
        preset_paths = [
            Path.cwd() / "presets.yaml",
            Path.cwd() / "presets.yml",
            Path(__file__).parent / "presets.yaml",
            Path.home() / ".convint" / "presets.yaml",
        ]

        for preset_path in preset_paths:
            if preset_path.exists():
                try:
                    with open(preset_path, 'r', encoding='utf-8') as f:
                        self._presets = (yaml.safe_load(f) or {}).get("presets", {})
                        break
                except Exception as e:
                    print(f"Warning: Could not load presets from {preset_path}: {e}")

    def get(self, key: str, default: Any = None) -> Any:
        """Get a configuration value."""
        return self._settings.get(key, default)

    def set(self, key: str, value: Any) -> None:
        """Set a configuration value at runtime."""
        self._settings[key] = value

    @property
    def presets(self) -> Dict[str, Any]:
        """Get the named run presets."""
        return self._presets

    def preset(self, name: str) -> Dict[str, Any]:
        """Get one preset merged over the desk defaults."""
        if name not in self._presets:
            raise KeyError(f"Unknown preset: {name}")
        merged = {
            "grid": self.get("grid"),
            "time_samples": self.get("time_samples"),
            "lambdas": self.get("lambdas"),
            "eta_star": self.get("eta_star"),
            "subdivisions": self.get("subdivisions"),
            "overlap": self.get("overlap"),
        }
        merged.update(self._presets[name])
        return merged

    @property
    def tolerances(self) -> Dict[str, float]:
        """All tolerances as one audit block."""
        return {
            key: float(value) for key, value in self._settings.items()
            if key.endswith("_tol")
        }

    def reload(self) -> None:
        """Reload configuration from files."""
        self._load_defaults()
        self._load_custom_config()


def get_config() -> Config:
    """Get the global configuration instance."""
    return Config()


def tolerance(name: str) -> float:
    """Look up one tolerance by short name (``spectral`` → ``spectral_tol``)."""
    return float(get_config().get(f"{name}_tol"))
