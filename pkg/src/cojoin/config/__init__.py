"""Configuration module"""

from .loader import (
    get_project_config_path,
    get_user_config_path,
    init_user_config,
    load_config,
    save_config,
)
from .schema import (
    AllocatorConfig,
    Algorithm,
    Architecture,
    BenchConfig,
    EngineConfig,
    HashTableConfig,
    LinkConfig,
    PartitionConfig,
    Scheme,
    SchedulerConfig,
    TableMode,
)

__all__ = [
    "EngineConfig",
    "AllocatorConfig",
    "HashTableConfig",
    "PartitionConfig",
    "SchedulerConfig",
    "LinkConfig",
    "BenchConfig",
    "Algorithm",
    "Architecture",
    "Scheme",
    "TableMode",
    "load_config",
    "save_config",
    "init_user_config",
    "get_user_config_path",
    "get_project_config_path",
]
