"""Experiment configuration, presets, comparison harness and CLI."""

from .config import ExperimentModel, dump_config, load_config, parse_config
from .experiment import (
    CompareReport,
    ExperimentReport,
    make_target,
    oracle_compare,
    quartile_bands,
    run_experiment,
    theory_table,
)
from .presets import preset, preset_names

__all__ = [
    "CompareReport",
    "ExperimentModel",
    "ExperimentReport",
    "dump_config",
    "load_config",
    "make_target",
    "oracle_compare",
    "parse_config",
    "preset",
    "preset_names",
    "quartile_bands",
    "run_experiment",
    "theory_table",
]
