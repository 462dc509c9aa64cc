"""Deterministic simulation and control stack for a small hover-capable AUV."""

__version__ = "0.1.0"

from .vehicle import (
    EnvironmentConfig,
    VehicleConfig,
    apply_patch,
    load_config,
    load_reference_config,
)

__all__ = [
    "EnvironmentConfig",
    "VehicleConfig",
    "apply_patch",
    "load_config",
    "load_reference_config",
    "__version__",
]
