"""
Artifact Writers
CSV and JSON outputs stamped with the run's config hash.
"""

import json
import math
from pathlib import Path
from typing import Any, Union

import numpy as np
import pandas as pd
import structlog

logger = structlog.get_logger()

FLOAT_FORMAT = "%.17g"


def _plain(value: Any) -> Any:
    """JSON-ready copy: numpy scalars and arrays unwrapped, NaN and inf as null."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def write_csv(frame: pd.DataFrame, path: Union[str, Path], config_hash: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        handle.write(f"# config_hash={config_hash}\n")
        frame.to_csv(handle, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info("Artifact written", path=str(path), rows=len(frame))
    return path


def write_json(payload: dict, path: Union[str, Path], config_hash: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {"config_hash": config_hash, **_plain(payload)}
    path.write_text(json.dumps(document, indent=2, allow_nan=False) + "\n", encoding="utf-8")
    logger.info("Artifact written", path=str(path))
    return path


def read_csv(path: Union[str, Path]) -> pd.DataFrame:
    """Read an artifact CSV, skipping the hash comment."""
    return pd.read_csv(path, comment="#")
