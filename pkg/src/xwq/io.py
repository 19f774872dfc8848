"""Deterministic on-disk formats: binary arrays with JSON sidecars and CSV tables."""
from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

SCHEMA = "xwq-array-v1"


def _canonical(obj):
    """Convert numpy scalars/arrays inside metadata to plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _canonical(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dump_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_canonical(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_array(path, values, meta: dict | None = None) -> list[Path]:
    """Write a complex array as little-endian float64 (re, im) pairs in row-major order.

    A sidecar ``<path>.json`` records the schema version, shape and ``meta``.
    Returns the two paths written.
    """
    path = Path(path)
    arr = np.ascontiguousarray(np.asarray(values, dtype=np.complex128))
    pairs = np.empty(arr.shape + (2,), dtype="<f8")
    pairs[..., 0] = arr.real
    pairs[..., 1] = arr.imag
    path.write_bytes(pairs.tobytes(order="C"))
    side = path.with_name(path.name + ".json")
    dump_json(side, {"schema": SCHEMA, "dtype": "complex128", "layout": "row-major (re, im) little-endian float64",
                     "shape": list(arr.shape), "meta": meta or {}})
    return [path, side]


def read_array(path):
    """Inverse of :func:`write_array`; returns (values, sidecar dict)."""
    path = Path(path)
    side = json.loads(path.with_name(path.name + ".json").read_text(encoding="utf-8"))
    if side.get("schema") != SCHEMA:
        raise ValueError(f"unsupported array schema {side.get('schema')!r}")
    raw = np.frombuffer(path.read_bytes(), dtype="<f8").reshape(tuple(side["shape"]) + (2,))
    return raw[..., 0] + 1j * raw[..., 1], side


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows) -> Path:
    """Comma-separated table with a header row; floats use round-trip repr."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def write_columns(path, header, *columns) -> Path:
    return write_csv(path, header, zip(*columns))


def sha256(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
