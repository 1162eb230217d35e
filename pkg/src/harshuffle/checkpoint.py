"""Model checkpoints: one binary container shared by both models.

Layout: magic line ``HSCKPT1\\n``, 8-byte big-endian header length, a
UTF-8 JSON header ``{"kind": ..., "config": {...}, "tensors":
[[name, shape], ...]}``, then the raw float64 little-endian buffers
concatenated in header order.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .autodiff import Tensor

_MAGIC = b"HSCKPT1\n"


def save_checkpoint(
    path: str | Path, kind: str, config: dict, params: list[tuple[str, Tensor]]
) -> None:
    header = {
        "kind": kind,
        "config": config,
        "tensors": [[name, list(t.data.shape)] for name, t in params],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with Path(path).open("wb") as fh:
        fh.write(_MAGIC)
        fh.write(len(blob).to_bytes(8, "big"))
        fh.write(blob)
        for _, t in params:
            fh.write(np.ascontiguousarray(t.data, dtype="<f8").tobytes())


def load_checkpoint(path: str | Path) -> tuple[str, dict, dict[str, np.ndarray]]:
    """Returns (kind, config, name -> array)."""
    with Path(path).open("rb") as fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        size = int.from_bytes(fh.read(8), "big")
        header = json.loads(fh.read(size).decode("utf-8"))
        tensors = {}
        for name, shape in header["tensors"]:
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise ValueError(f"{path}: truncated tensor {name}")
            tensors[name] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    return header["kind"], header["config"], tensors


def restore_params(params: list[tuple[str, Tensor]], tensors: dict[str, np.ndarray]) -> None:
    """Copy loaded arrays into existing parameter tensors, by name."""
    for name, t in params:
        if name not in tensors:
            raise ValueError(f"checkpoint missing tensor {name}")
        if tensors[name].shape != t.data.shape:
            raise ValueError(
                f"tensor {name}: checkpoint shape {tensors[name].shape} != model {t.data.shape}"
            )
        t.data[...] = tensors[name]
