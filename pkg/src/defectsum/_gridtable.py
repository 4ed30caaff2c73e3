"""Shared text format for sampled grids (potentials, cutoff samples).

A grid table is a JSON object::

    {"format": "gridtable", "version": 1,
     "bbox": [[lo, hi], ...],          # one pair per axis
     "shape": [n1, ...],
     "values": [...],                  # C-order flattened
     "mask": [...] | null,             # optional booleans, C-order
     "tau": 0.0}

Values are stored with full repr precision by the json module, so a
table round-trips losslessly.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import ConfigFormatError

FORMAT = "gridtable"
VERSION = 1


def save_grid(path, bbox, values, mask=None, tau: float = 0.0) -> None:
    values = np.asarray(values, dtype=float)
    obj = {
        "format": FORMAT,
        "version": VERSION,
        "bbox": [[float(lo), float(hi)] for lo, hi in bbox],
        "shape": list(values.shape),
        "values": values.ravel(order="C").tolist(),
        "mask": None if mask is None else np.asarray(mask, dtype=bool).ravel(order="C").tolist(),
        "tau": float(tau),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True)
        fh.write("\n")


def load_grid(path):
    """Returns (bbox, values, mask, tau)."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigFormatError(f"grid table is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict) or obj.get("format") != FORMAT:
        raise ConfigFormatError("not a gridtable file")
    if obj.get("version") != VERSION:
        raise ConfigFormatError(f"unsupported gridtable version {obj.get('version')!r}")
    allowed = {"format", "version", "bbox", "shape", "values", "mask", "tau"}
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigFormatError(f"unknown gridtable keys: {sorted(unknown)}")
    shape = tuple(int(s) for s in obj["shape"])
    values = np.asarray(obj["values"], dtype=float).reshape(shape, order="C")
    mask = obj.get("mask")
    if mask is not None:
        mask = np.asarray(mask, dtype=bool).reshape(shape, order="C")
    bbox = tuple((float(lo), float(hi)) for lo, hi in obj["bbox"])
    if len(bbox) != values.ndim:
        raise ConfigFormatError("bbox rank does not match value rank")
    return bbox, values, mask, float(obj.get("tau", 0.0))
