"""Command-line surface: run configuration, artifacts and subcommands."""

from backend.api.artifacts import read_csv, write_csv, write_json
from backend.api.cli import build_parser, main
from backend.api.run_config import RunConfig

__all__ = ["RunConfig", "build_parser", "main", "read_csv", "write_csv", "write_json"]
