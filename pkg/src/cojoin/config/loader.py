"""Configuration loader"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Any, Callable, Optional

import yaml

from .schema import EngineConfig

# Default config file names
USER_CONFIG_DIR = ".cojoin"
USER_CONFIG_FILE = "config.yaml"
PROJECT_CONFIG_FILE = ".cojoin.yaml"

# Environment variable -> (section, field, parser)
ENV_OVERRIDES: dict[str, tuple[str, str, Callable[[str], Any]]] = {
    "COJOIN_BLOCK_SIZE": ("allocator", "block_size", int),
    "COJOIN_ARENA_BYTES": ("allocator", "arena_bytes", int),
    "COJOIN_DELTA": ("scheduler", "delta", float),
    "COJOIN_GROUPS": ("scheduler", "groups", int),
    "COJOIN_HANDOFF_CAP": ("scheduler", "handoff_cap", int),
    "COJOIN_PASS_BITS": ("partition", "pass_bits", int),
    "COJOIN_PASSES": ("partition", "passes", int),
    "COJOIN_SEED": ("bench", "seed", int),
}


def get_user_config_path() -> Path:
    """Get user configuration file path"""
    return Path.home() / USER_CONFIG_DIR / USER_CONFIG_FILE


def get_project_config_path(project_root: Optional[Path] = None) -> Path:
    """Get project configuration file path"""
    root = project_root or Path.cwd()
    return root / PROJECT_CONFIG_FILE


def _deep_merge(base: dict[str, Any], override: dict[str, Any]) -> dict[str, Any]:
    """Deep merge two dictionaries"""
    result = base.copy()

    for key, value in override.items():
        if key in result and isinstance(result[key], dict) and isinstance(value, dict):
            result[key] = _deep_merge(result[key], value)
        else:
            result[key] = value

    return result


def _apply_env_vars(config_data: dict[str, Any]) -> dict[str, Any]:
    """Apply environment variable overrides"""
    for var, (section, name, parse) in ENV_OVERRIDES.items():
        raw = os.getenv(var)
        if raw is None or raw == "":
            continue
        try:
            config_data.setdefault(section, {})[name] = parse(raw)
        except ValueError:
            pass

    if arch := os.getenv("COJOIN_ARCH"):
        config_data["architecture"] = arch
    if mode := os.getenv("COJOIN_TABLE_MODE"):
        config_data["table_mode"] = mode

    return config_data


def _load_yaml_file(path: Path) -> dict[str, Any]:
    """Load a YAML configuration file"""
    if not path.exists():
        return {}

    try:
        with open(path, encoding="utf-8") as f:
            data = yaml.safe_load(f)
            return data if isinstance(data, dict) else {}
    except Exception:
        return {}


def load_config(
    project_root: Optional[Path] = None,
    user_config_path: Optional[Path] = None,
    project_config_path: Optional[Path] = None,
) -> EngineConfig:
    """
    Load configuration from multiple sources.

    Priority (highest to lowest):
    1. Environment variables
    2. Project config (.cojoin.yaml)
    3. User config (~/.cojoin/config.yaml)
    4. Default values

    Args:
        project_root: Project root directory (default: cwd)
        user_config_path: Custom user config path
        project_config_path: Custom project config path

    Returns:
        Merged EngineConfig object
    """
    config_data: dict[str, Any] = {}

    user_path = user_config_path or get_user_config_path()
    user_data = _load_yaml_file(user_path)
    if user_data:
        config_data = _deep_merge(config_data, user_data)

    project_path = project_config_path or get_project_config_path(project_root)
    project_data = _load_yaml_file(project_path)
    if project_data:
        config_data = _deep_merge(config_data, project_data)

    config_data = _apply_env_vars(config_data)

    return EngineConfig(**config_data)


def save_config(config: EngineConfig, path: Path) -> None:
    """Save configuration to file"""
    path.parent.mkdir(parents=True, exist_ok=True)

    # Convert to dict, excluding defaults
    data = config.model_dump(mode="json", exclude_defaults=True)

    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(data, f, default_flow_style=False, allow_unicode=True)


def init_user_config(force: bool = False) -> Path:
    """Write a commented default user configuration.

    Args:
        force: If True, overwrite existing config file

    Returns:
        Path to config file
    """
    config_path = get_user_config_path()
    config_path.parent.mkdir(parents=True, exist_ok=True)

    if config_path.exists() and not force:
        return config_path

    default_config = """# cojoin configuration
# Location: ~/.cojoin/config.yaml

allocator:
  block_size: 2048        # bytes per global cursor grant
  # arena_bytes: 536870912

hashtable:
  bucket_factor: 1.0      # buckets = next pow2 >= factor * |R|
  seed: 0

partition:
  pass_bits: 6
  passes: 2

scheduler:
  delta: 0.02             # ratio grid step
  groups: 1               # workload groups (divergence reduction)
  handoff_cap: 1024

link:                     # discrete mode only
  latency: 0.000015       # seconds
  bandwidth: 3221225472   # bytes/second

architecture: coupled
table_mode: shared
"""
    config_path.write_text(default_config, encoding="utf-8")
    return config_path
