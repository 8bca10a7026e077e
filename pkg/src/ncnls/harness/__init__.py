"""Configuration, experiment commands, manifests and the ``ncnls`` CLI."""
from .cli import main
from .commands import COMMAND_TABLE, cmd_evolve, cmd_propagator, cmd_scatter, cmd_verify
from .config import COMMANDS, ConfigError, ExperimentConfig, load_config, parse_config_text, parse_entries
from .manifest import Check, RunManifest, write_csv

__all__ = [
    "COMMANDS",
    "COMMAND_TABLE",
    "Check",
    "ConfigError",
    "ExperimentConfig",
    "RunManifest",
    "cmd_evolve",
    "cmd_propagator",
    "cmd_scatter",
    "cmd_verify",
    "load_config",
    "main",
    "parse_config_text",
    "parse_entries",
    "write_csv",
]
