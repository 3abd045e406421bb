"""Parameter checkpoint container.

Layout (format ``hpntsp-checkpoint`` version 1): a numpy ``.npz`` archive.
Every array entry is a named float64 array stored row-major with its shape
in the ``.npy`` header. The entry ``__meta__`` holds a UTF-8 JSON document
with at least ``{"format": "hpntsp-checkpoint", "version": 1}``; callers add
their own keys (model config, epoch, ...). Names are free-form strings,
conventionally ``<group>/<dotted.parameter.name>``.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

FORMAT = "hpntsp-checkpoint"
VERSION = 1
_META = "__meta__"


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, arrays: dict[str, np.ndarray], meta: dict | None = None) -> None:
    if _META in arrays:
        raise CheckpointError(f"{_META!r} is reserved")
    header = {"format": FORMAT, "version": VERSION, **(meta or {})}
    payload = {k: np.ascontiguousarray(v, dtype=np.float64) for k, v in arrays.items()}
    payload[_META] = np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8)
    path = Path(path)
    with open(path, "wb") as fh:
        np.savez(fh, **payload)


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    with np.load(Path(path), allow_pickle=False) as npz:
        if _META not in npz.files:
            raise CheckpointError(f"{path}: no metadata entry, not a checkpoint")
        meta = json.loads(npz[_META].tobytes().decode())
        if meta.get("format") != FORMAT:
            raise CheckpointError(f"{path}: unknown format {meta.get('format')!r}")
        if meta.get("version") != VERSION:
            raise CheckpointError(f"{path}: unsupported version {meta.get('version')}")
        arrays = {k: npz[k].astype(np.float64) for k in npz.files if k != _META}
    return arrays, meta
