"""Configuration constants and settings for partbench."""

import os
from pathlib import Path

from dotenv import dotenv_values, load_dotenv
from platformdirs import user_data_dir

from part_bench.errors import ConfigError

load_dotenv()

DEFAULT_K_VALUES = [4]
DEFAULT_HOP_COUNT = 2
DEFAULT_WARP_HOPS = 2
DEFAULT_HYBRID_PREHOP = 1
DEFAULT_EPSILON = 0.03
DEFAULT_SEED = 42
DEFAULT_REPETITIONS = 3
DEFAULT_WORKERS = 4
DEFAULT_UNIVERSITIES = 2

COARSENING_FLOOR = 100
COARSENING_PER_PART = 20
BYTES_PER_BINDING = 8

ENCODED_DIR = "encoded"
DATASET_FILE = "dataset.bin"
NODES_DICT_FILE = "nodes.dict"
PREDS_DICT_FILE = "preds.dict"
GRAPH_FILE = "graph.metis"
PARTITION_MAP_FILE = "partition.map"
LOCK_FILE = "bench.lock"

CONFIG_KEYS = {
    "dataset",
    "universities",
    "hub_fraction",
    "strategies",
    "k",
    "n_hop",
    "hybrid_prehop",
    "workload",
    "prefixes",
    "seed",
    "epsilon",
    "repetitions",
    "out_dir",
    "metis_partition_file",
    "workers",
}


def get_default_out_dir() -> Path:
    """Get the output directory from environment, falling back to the user data dir."""
    env_dir = os.getenv("PARTBENCH_OUT_DIR")
    if env_dir:
        return Path(env_dir)
    return Path(user_data_dir("partbench"))


def get_worker_count() -> int:
    """Get the per-partition worker pool size from environment."""
    value = os.getenv("PARTBENCH_WORKERS")
    if not value:
        return DEFAULT_WORKERS
    try:
        return max(1, int(value))
    except ValueError:
        raise ConfigError(f"PARTBENCH_WORKERS must be an integer, got '{value}'")


def load_config_file(path: str | Path) -> dict[str, str]:
    """
    Load a flat key=value benchmark configuration file.

    Args:
        path: Path to the configuration file

    Returns:
        Mapping of configuration keys to raw string values

    Raises:
        ConfigError: If the file is missing or contains unknown keys
    """
    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigError(f"Config file '{config_path}' does not exist")

    values = {key.strip().lower(): value for key, value in dotenv_values(config_path).items() if value is not None}
    unknown = sorted(set(values) - CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"Unknown config keys: {', '.join(unknown)}")

    return values
