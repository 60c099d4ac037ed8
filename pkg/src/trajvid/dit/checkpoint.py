"""Checkpoint archive: one .npz of named parameter arrays plus config JSON.

The config hash is embedded and verified on load so a checkpoint can never be
silently applied to a model with different dimensions.
"""
from __future__ import annotations

import dataclasses
import io
import json
from pathlib import Path

import numpy as np
import torch

from ..config import config_hash
from ..errors import ConfigMismatch, MissingCheckpoint


def save_checkpoint(path: str | Path, model: torch.nn.Module, config, kind: str, extra: dict | None = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays = {k: v.detach().cpu().numpy() for k, v in model.state_dict().items()}
    meta = {
        "kind": kind,
        "config": dataclasses.asdict(config),
        "config_hash": config_hash(config),
        "extra": extra or {},
    }
    buf = io.BytesIO()
    np.savez(buf, __meta__=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8), **arrays)
    path.write_bytes(buf.getvalue())


def load_checkpoint(path: str | Path) -> tuple[dict, dict]:
    """Returns (state arrays, meta)."""
    path = Path(path)
    if not path.exists():
        raise MissingCheckpoint(str(path))
    with np.load(path) as z:
        meta = json.loads(bytes(z["__meta__"]).decode())
        state = {k: z[k] for k in z.files if k != "__meta__"}
    return state, meta


def restore_model(path: str | Path, model: torch.nn.Module, config, kind: str) -> dict:
    """Load a checkpoint into `model`, verifying kind, hash, and shapes."""
    state, meta = load_checkpoint(path)
    if meta["kind"] != kind:
        raise ConfigMismatch(f"checkpoint kind {meta['kind']!r} != expected {kind!r}")
    if meta["config_hash"] != config_hash(config):
        raise ConfigMismatch(
            f"checkpoint config hash {meta['config_hash']} != model config hash {config_hash(config)}"
        )
    own = model.state_dict()
    if set(own) != set(state):
        raise ConfigMismatch("checkpoint parameter names do not match the model")
    for k, v in state.items():
        if tuple(own[k].shape) != tuple(v.shape):
            raise ConfigMismatch(f"parameter {k} shape {v.shape} != model {tuple(own[k].shape)}")
    model.load_state_dict({k: torch.from_numpy(v.copy()) for k, v in state.items()})
    return meta
