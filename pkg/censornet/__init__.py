"""
censornet simulates how limiting the number of friends survey respondents may
name (outdegree censoring) biases least-squares estimates of autocorrelation,
peer contagion and friend-count effects on social networks.
"""

from .config import ExperimentConfig, parse_config
from .montecarlo import (
    read_records,
    run_experiment,
    run_replication,
    sample_scenario,
    summarize,
    write_records,
)

# Update this when bumping version in pyproject.toml!
__version__ = "0.1.0"
__all__ = [
    "ExperimentConfig",
    "parse_config",
    "read_records",
    "run_experiment",
    "run_replication",
    "sample_scenario",
    "summarize",
    "write_records",
]
