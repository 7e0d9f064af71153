"""Activation preprocessing and persistence.

RSAM layout (little-endian)::

    b"RSAM" | u16 version=1 | u8 dtype (1=f32, 2=f64) | u8 ndim (2 or 4)
    | ndim x u64 extents | row-major payload

A manifest is JSON ``{"probe_id": str, "layers": [{"name": str, "path": str}, ...]}``
with paths resolved relative to the manifest's directory.
"""
from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyResult, FormatError, ManifestError
from .metrics import DataMatrix, as_matrix

MAGIC = b"RSAM"
VERSION = 1
_DTYPES = {1: np.dtype("<f4"), 2: np.dtype("<f8")}
_DTYPE_CODES = {np.dtype("float32"): 1, np.dtype("float64"): 2}
_HEADER = struct.Struct("<4sHBB")


def _check_tensor(t) -> np.ndarray:
    t = np.asarray(t)
    if t.ndim != 4:
        raise ValueError(f"activation tensor must be frames x channels x height x width, got {t.ndim}-D")
    if min(t.shape) < 1:
        raise ValueError(f"activation tensor extents must be >= 1, got {t.shape}")
    if not np.isfinite(t).all():
        raise ValueError("activation tensor contains NaN or Inf")
    return t


def global_average_pool(t) -> np.ndarray:
    """Average each feature map over its spatial extent: (F, C, H, W) -> (F, C)."""
    t = _check_tensor(t).astype(np.float64, copy=False)
    f, c, h, w = t.shape
    if h == w == 1:
        return t.reshape(f, c).copy()
    return t.mean(axis=(2, 3))


def decimate(m, factor: int):
    """Keep every ``factor``-th row starting from row 0.

    Accepts a DataMatrix (returns a DataMatrix) or any array (returns an array).
    """
    if int(factor) != factor or factor < 1:
        raise ValueError(f"decimation factor must be a positive integer, got {factor!r}")
    values = m.values if isinstance(m, DataMatrix) else np.asarray(m)
    if values.shape[0] < 1:
        raise EmptyResult("cannot decimate a matrix with no rows")
    out = values[:: int(factor)].copy()
    if isinstance(m, DataMatrix):
        return DataMatrix(out, m.label)
    return out


def decimate_frames(t, factor: int) -> np.ndarray:
    """Frame-stride decimation of a (F, C, H, W) tensor."""
    return decimate(_check_tensor(t), factor)


def write_matrix(path, m, dtype="float64"):
    """Write a 2-D matrix or 4-D activation tensor as RSAM."""
    values = m.values if isinstance(m, DataMatrix) else np.asarray(m)
    dt = np.dtype(dtype)
    if dt not in _DTYPE_CODES:
        raise ValueError(f"RSAM stores float32 or float64, not {dt}")
    if values.ndim not in (2, 4):
        raise ValueError(f"RSAM stores 2-D or 4-D arrays, got {values.ndim}-D")
    if not np.isfinite(values).all():
        raise ValueError("refusing to write NaN or Inf")
    payload = np.ascontiguousarray(values, dtype=dt.newbyteorder("<"))
    header = _HEADER.pack(MAGIC, VERSION, _DTYPE_CODES[dt], values.ndim)
    header += struct.pack(f"<{values.ndim}Q", *values.shape)
    with open(path, "wb") as f:
        f.write(header)
        f.write(payload.tobytes())


def read_array(path) -> np.ndarray:
    """Read an RSAM file into a float64 array (2-D or 4-D)."""
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: file too short for an RSAM header ({len(data)} bytes)")
    magic, version, code, ndim = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported RSAM version {version}")
    if code not in _DTYPES:
        raise FormatError(f"{path}: unknown dtype code {code}")
    if ndim not in (2, 4):
        raise FormatError(f"{path}: ndim must be 2 or 4, got {ndim}")
    off = _HEADER.size
    if len(data) < off + 8 * ndim:
        raise FormatError(f"{path}: truncated header")
    shape = struct.unpack_from(f"<{ndim}Q", data, off)
    off += 8 * ndim
    dt = _DTYPES[code]
    expected = math.prod(shape) * dt.itemsize
    actual = len(data) - off
    if actual != expected:
        raise FormatError(
            f"{path}: payload is {actual} bytes, expected {expected} for shape {shape}"
        )
    values = np.frombuffer(data, dtype=dt, offset=off).reshape(shape)
    if not np.isfinite(values).all():
        raise FormatError(f"{path}: payload contains NaN or Inf")
    return values.astype(np.float64)


def read_matrix(path, label: str | None = None) -> DataMatrix:
    values = read_array(path)
    if values.ndim != 2:
        raise FormatError(f"{path}: expected a 2-D matrix, found {values.ndim}-D")
    return DataMatrix(values, label)


@dataclass(frozen=True)
class ActivationSet:
    """Named layer activations, in depth order, measured on one probe set."""

    probe_id: str
    layers: tuple[DataMatrix, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ManifestError("activation set has no layers")
        names = [m.label for m in layers]
        if any(not n for n in names):
            raise ManifestError("every layer needs a name")
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise ManifestError(f"duplicate layer names: {dupes}")
        rows = {m.label: m.n_obs for m in layers}
        if len(set(rows.values())) > 1:
            raise ManifestError(f"layers disagree on n_obs: {rows}")
        object.__setattr__(self, "layers", layers)

    @property
    def names(self) -> list[str]:
        return [m.label for m in self.layers]

    @property
    def n_obs(self) -> int:
        return self.layers[0].n_obs

    def __len__(self):
        return len(self.layers)

    def __getitem__(self, name: str) -> DataMatrix:
        for m in self.layers:
            if m.label == name:
                return m
        raise KeyError(name)

    @classmethod
    def from_arrays(cls, probe_id: str, named) -> ActivationSet:
        return cls(probe_id, tuple(as_matrix(v, name) for name, v in named))


def load_activation_set(manifest_path) -> ActivationSet:
    manifest_path = Path(manifest_path)
    try:
        doc = json.loads(manifest_path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ManifestError(f"manifest not found: {manifest_path}") from None
    except json.JSONDecodeError as e:
        raise ManifestError(f"{manifest_path}: invalid JSON ({e})") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("layers"), list):
        raise ManifestError(f"{manifest_path}: expected an object with a 'layers' list")
    if not doc["layers"]:
        raise ManifestError(f"{manifest_path}: empty layer list")
    layers = []
    for entry in doc["layers"]:
        try:
            name, rel = entry["name"], entry["path"]
        except (TypeError, KeyError):
            raise ManifestError(f"{manifest_path}: layer entries need 'name' and 'path'") from None
        path = manifest_path.parent / rel
        if not path.is_file():
            raise ManifestError(f"{manifest_path}: layer {name!r} file missing: {path}")
        layers.append(read_matrix(path, name))
    return ActivationSet(str(doc.get("probe_id", "")), tuple(layers))


def write_activation_set(out_dir, aset: ActivationSet, manifest_name="manifest.json") -> Path:
    """Write one RSAM file per layer plus a manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for m in aset.layers:
        fname = f"{m.label}.rsam"
        write_matrix(out_dir / fname, m)
        entries.append({"name": m.label, "path": fname})
    manifest = out_dir / manifest_name
    manifest.write_text(
        json.dumps({"probe_id": aset.probe_id, "layers": entries}, indent=2) + "\n",
        encoding="utf-8",
    )
    return manifest


__all__ = [
    "ActivationSet", "global_average_pool", "decimate", "decimate_frames",
    "write_matrix", "read_array", "read_matrix", "load_activation_set",
    "write_activation_set", "MAGIC",
]
