"""Run directories, the flat config file, and environment overrides.

Precedence: defaults < config file < TRAJVID_* environment variables < flags.
Every run directory records the exact resolved config it executed with.
"""
from __future__ import annotations

import dataclasses
import json
import os
import time
from pathlib import Path

from ..config import TrainConfig, config_hash, dataclass_from_dict
from ..errors import ConfigInvalid

ENV_PREFIX = "TRAJVID_"

# harness-level keys accepted in the flat file beyond TrainConfig's
EXTRA_KEYS = {
    "count": int,
    "data_dir": str,
    "out_dir": str,
    "mode": str,
    "checkpoint": str,
    "episodes": int,
    "hidden_dim": int,
    "num_blocks": int,
    "num_heads": int,
    "num_objects": int,
    "policy_hidden_dim": int,
    "rgb_only": bool,
    "port": int,
    "runs_dir": str,
    "queue_capacity": int,
    "worker_count": int,
}

_TRAIN_FIELDS = {f.name: f.type for f in dataclasses.fields(TrainConfig)}


def _coerce(key: str, raw: str):
    if key in _TRAIN_FIELDS:
        current = getattr(TrainConfig(), key)
        target = type(current)
    elif key in EXTRA_KEYS:
        target = EXTRA_KEYS[key]
    else:
        raise ConfigInvalid(f"unknown config key: {key}")
    if target is bool:
        return raw.lower() in ("1", "true", "yes", "on")
    return target(raw)


def load_flat_config(path: str | Path | None, overrides: dict | None = None) -> dict:
    """Merge file, environment, and flag overrides into one flat dict."""
    merged: dict = {}
    if path is not None:
        data = json.loads(Path(path).read_text())
        if not isinstance(data, dict):
            raise ConfigInvalid("config file must contain a flat JSON object")
        for k, v in data.items():
            if k not in _TRAIN_FIELDS and k not in EXTRA_KEYS:
                raise ConfigInvalid(f"unknown config key: {k}")
            merged[k] = v
    for env_key, raw in sorted(os.environ.items()):
        if env_key.startswith(ENV_PREFIX):
            key = env_key[len(ENV_PREFIX):].lower()
            merged[key] = _coerce(key, raw)
    for k, v in (overrides or {}).items():
        if v is not None:
            merged[k] = v
    return merged


def train_config_from(merged: dict) -> TrainConfig:
    subset = {k: v for k, v in merged.items() if k in _TRAIN_FIELDS}
    return dataclass_from_dict(TrainConfig, subset)


def make_run_dir(runs_dir: str | Path, resolved: dict, label: str = "run") -> Path:
    """<runs_dir>/<label>-<timestamp>-<config hash>/ with the resolved config."""
    h = config_hash(resolved)
    stamp = time.strftime("%Y%m%d-%H%M%S", time.gmtime())
    base = Path(runs_dir) / f"{label}-{stamp}-{h[:8]}"
    run = base
    for k in range(1, 1000):
        try:
            run.mkdir(parents=True, exist_ok=False)
            break
        except FileExistsError:
            run = base.with_name(f"{base.name}-{k}")
    (run / "resolved_config.json").write_text(json.dumps(resolved, indent=1, sort_keys=True))
    return run
