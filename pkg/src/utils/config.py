"""
Configuration loading for the spatial prediction toolkit.

Defaults are defined in code and deep-merged with ``config.yaml`` so that a
missing or partial file still yields a complete configuration.
"""

import copy
import logging
import os
from typing import Any, Dict, Optional

import yaml

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = os.path.join(os.path.dirname(__file__), '..', '..', 'config.yaml')

DEFAULTS: Dict[str, Any] = {
    'geometry': {
        'duplicate_tolerance': 1e-12,
    },
    'trend': {
        'tol': 1e-6,
        'max_iter': 50,
    },
    'variogram': {
        'n_bins': 15,
    },
    'kriging': {
        'drift_degree': 0,
        'rcond_threshold': 1e-14,
        'pure_nugget_fallback': False,
    },
    'spline': {
        'gcv_grid_size': 40,
        'gcv_low': 1e-6,
        'gcv_high': 1e4,
        'tie_tolerance': 1e-12,
    },
    'crossval': {
        'refit_policy': 'fixed',
    },
    'logging': {
        'level': 'WARNING',
    },
}


def _deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(path: Optional[str] = None) -> Dict[str, Any]:
    """
    Load the toolkit configuration.

    Args:
        path: Path to a YAML file. Defaults to the repository ``config.yaml``.

    Returns:
        Complete configuration dictionary (built-in defaults overlaid with the file)

    Raises:
        ValueError: If the file exists but does not contain a YAML mapping
    """
    config_path = path or DEFAULT_CONFIG_PATH

    if not os.path.exists(config_path):
        if path is not None:
            raise FileNotFoundError(f"Configuration file not found: {config_path}")
        logger.debug(f"No configuration file at {config_path}, using built-in defaults")
        return copy.deepcopy(DEFAULTS)

    with open(config_path, 'r', encoding='utf-8') as f:
        loaded = yaml.safe_load(f) or {}

    if not isinstance(loaded, dict):
        raise ValueError(f"Configuration file {config_path} must contain a mapping")

    logger.debug(f"Loaded configuration from {config_path}")
    return _deep_merge(DEFAULTS, loaded)
