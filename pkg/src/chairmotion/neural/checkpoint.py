"""Versioned binary checkpoints: parameters + normalization stats + metadata.

npz under the hood; float arrays are stored verbatim, so save -> load -> save
is bit-exact. Metadata rides along as a JSON blob.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .normalizer import Normalizer

CHECKPOINT_VERSION = 1


class CheckpointError(RuntimeError):
    pass


def save_checkpoint(
    path: str | Path,
    meta: dict,
    params: dict[str, np.ndarray],
    normalizers: dict[str, Normalizer] | None = None,
) -> None:
    payload: dict[str, np.ndarray] = {}
    header = {"version": CHECKPOINT_VERSION, "meta": meta}
    payload["__header__"] = np.frombuffer(
        json.dumps(header, sort_keys=True).encode("utf-8"), dtype=np.uint8
    )
    for name, arr in params.items():
        payload[f"p/{name}"] = np.asarray(arr)
    for nname, norm in (normalizers or {}).items():
        for key, arr in norm.arrays().items():
            payload[f"n/{nname}/{key}"] = arr
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as f:
        np.savez(f, **payload)
    tmp.replace(path)


def load_checkpoint(
    path: str | Path,
) -> tuple[dict, dict[str, np.ndarray], dict[str, Normalizer]]:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    with np.load(path, allow_pickle=False) as data:
        if "__header__" not in data:
            raise CheckpointError(f"{path}: missing checkpoint header")
        header = json.loads(bytes(data["__header__"]).decode("utf-8"))
        if header.get("version") != CHECKPOINT_VERSION:
            raise CheckpointError(
                f"{path}: unsupported checkpoint version {header.get('version')}"
            )
        params: dict[str, np.ndarray] = {}
        norm_arrays: dict[str, dict[str, np.ndarray]] = {}
        for key in data.files:
            if key.startswith("p/"):
                params[key[2:]] = data[key]
            elif key.startswith("n/"):
                _, nname, field = key.split("/", 2)
                norm_arrays.setdefault(nname, {})[field] = data[key]
    normalizers = {k: Normalizer.from_arrays(v) for k, v in norm_arrays.items()}
    return header["meta"], params, normalizers


def restore_module_params(module, params: dict[str, np.ndarray], prefix: str = "") -> None:
    """Copy stored arrays into a module's parameters by name."""
    for name, p in module.parameters():
        key = prefix + name
        if key not in params:
            raise CheckpointError(f"checkpoint missing parameter '{key}'")
        stored = params[key]
        if stored.shape != p.shape:
            raise CheckpointError(
                f"parameter '{key}' shape {stored.shape} != expected {p.shape}"
            )
        p[...] = stored
