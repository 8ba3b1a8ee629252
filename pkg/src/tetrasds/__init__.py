"""Discrete-event simulator of short-data transfer over a TETRA cell's
shared control channel, with delay, failure-probability and peak
age-of-information experiment harnesses."""

from .config import ConfigError, ScenarioConfig
from .metrics import Aggregate, RunSummary, aggregate
from .run import run_point, run_replication, run_sweep, simulate, summarize

__all__ = [
    "Aggregate",
    "ConfigError",
    "RunSummary",
    "ScenarioConfig",
    "aggregate",
    "run_point",
    "run_replication",
    "run_sweep",
    "simulate",
    "summarize",
]

__version__ = "0.1.0"
