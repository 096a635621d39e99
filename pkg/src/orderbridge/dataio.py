"""Artifact formats: sample CSV, grid binary, JSON manifests, configs.

Every artifact the pipeline exchanges goes through here so formats
stay stable: the Monte Carlo sample table (CSV with a fixed column
schema), scalar fields on regular grids (a small self-describing
binary), JSON run manifests written atomically, and INI run configs
validated against explicit schemas.
"""
from __future__ import annotations

import configparser
import hashlib
import json
import os
import struct
import time
from pathlib import Path

import numpy as np

from .montecarlo import SampleRecord, N_ETA


class ValidationError(ValueError):
    """Bad user input: malformed config, schema mismatch, bad value."""


# --- sample records CSV -------------------------------------------------

RECORD_COLUMNS = (
    ["T", "mode"]
    + [f"phi{k}" for k in range(N_ETA)]
    + [f"kappa{k}" for k in range(N_ETA)]
    + [f"eta{k}" for k in range(N_ETA)]
    + [f"mu{k}" for k in range(N_ETA)]
    + [f"var{k}" for k in range(N_ETA)]
    + ["steps", "seed", "converged"]
)


def _fmt(v) -> str:
    if isinstance(v, (np.floating, float)):
        return repr(float(v))
    return str(v)


def write_records(path, records, append: bool = False) -> None:
    path = Path(path)
    new = not (append and path.exists() and path.stat().st_size > 0)
    with open(path, "a" if append else "w") as f:
        if new:
            f.write(",".join(RECORD_COLUMNS) + "\n")
        for rec in records:
            d = rec.as_dict() if isinstance(rec, SampleRecord) else rec
            f.write(",".join(_fmt(d[c]) for c in RECORD_COLUMNS) + "\n")


def read_records(path) -> list[dict]:
    rows = []
    with open(path) as f:
        header = f.readline().strip().split(",")
        if header != list(RECORD_COLUMNS):
            raise ValidationError(f"unexpected sample CSV header in {path}")
        for line in f:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            row = {}
            for c, p in zip(RECORD_COLUMNS, parts):
                if c == "mode":
                    row[c] = p
                elif c in ("steps", "seed", "converged"):
                    row[c] = int(p)
                else:
                    row[c] = float(p)
            rows.append(row)
    return rows


def records_arrays(rows: list[dict]) -> dict[str, np.ndarray]:
    """Column arrays for numeric work; eta/mu/var/phi/kappa stacked (n,7)."""
    out = {}
    if not rows:
        out["T"] = np.zeros(0)
        for name in ("phi", "kappa", "eta", "mu", "var"):
            out[name] = np.zeros((0, N_ETA))
        out["converged"] = np.zeros(0, dtype=bool)
        return out
    out["T"] = np.array([r["T"] for r in rows])
    for name in ("phi", "kappa", "eta", "mu", "var"):
        out[name] = np.array([[r[f"{name}{k}"] for k in range(N_ETA)] for r in rows])
    out["converged"] = np.array([bool(r["converged"]) for r in rows])
    return out


# --- grid binary --------------------------------------------------------

_GRID_MAGIC = b"OBGR"
_DTYPE_TAGS = {0: np.dtype("<f8"), 1: np.dtype("<f4")}
_TAG_OF = {v: k for k, v in _DTYPE_TAGS.items()}


def write_grid(path, array: np.ndarray) -> None:
    """Row-major scalar field: 16-byte header (magic, dims, dtype tag)."""
    a = np.asarray(array)
    if a.ndim != 2:
        raise ValidationError("grid arrays are 2d")
    dt = np.dtype("<f4") if a.dtype == np.float32 else np.dtype("<f8")
    header = _GRID_MAGIC + struct.pack("<IIHH", a.shape[0], a.shape[1],
                                       _TAG_OF[dt], 0)
    with open(path, "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(a, dtype=dt).tobytes())


def read_grid(path) -> np.ndarray:
    with open(path, "rb") as f:
        header = f.read(16)
        if len(header) != 16 or header[:4] != _GRID_MAGIC:
            raise ValidationError(f"{path} is not a grid file")
        rows, cols, tag, _ = struct.unpack("<IIHH", header[4:])
        if tag not in _DTYPE_TAGS:
            raise ValidationError(f"unknown grid dtype tag {tag}")
        dt = _DTYPE_TAGS[tag]
        data = f.read()
    expect = rows * cols * dt.itemsize
    if len(data) != expect:
        raise ValidationError(f"grid payload truncated: {len(data)} != {expect}")
    return np.frombuffer(data, dtype=dt).reshape(rows, cols).copy()


# --- manifests ----------------------------------------------------------

def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def write_manifest(path, config: dict, seeds: dict | list | int,
                   artifacts: dict | None = None,
                   constants: dict | None = None,
                   wall_time_s: float | None = None,
                   extra: dict | None = None) -> dict:
    """Atomic JSON manifest describing one pipeline run."""
    doc = {
        "config": config,
        "config_hash": config_hash(config),
        "seeds": seeds,
        "wall_time_s": wall_time_s,
        "written_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "artifacts": artifacts or {},
        "constants": constants or {},
    }
    if extra:
        doc.update(extra)
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True, default=str)
        f.write("\n")
    os.replace(tmp, path)
    return doc


def read_manifest(path) -> dict:
    with open(path) as f:
        return json.load(f)


# --- INI configs --------------------------------------------------------

def _parse_value(raw: str, kind: str):
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "str":
            return raw
        if kind == "floats":
            return [float(p) for p in raw.replace(",", " ").split()]
        if kind == "ints":
            return [int(p) for p in raw.replace(",", " ").split()]
    except ValueError as exc:
        raise ValidationError(f"cannot parse {raw!r} as {kind}") from exc
    raise ValidationError(f"unknown schema kind {kind!r}")


def load_config(path, section: str, schema: dict[str, tuple]) -> dict:
    """Read one INI section against a {key: (kind, default)} schema.

    Unknown keys are rejected; missing keys take defaults; a None
    default marks the key required. Environment variables named
    ORDERBRIDGE_<KEY> override file values.
    """
    cp = configparser.ConfigParser()
    if path is not None:
        read = cp.read(str(path))
        if not read:
            raise ValidationError(f"config file {path} not found or unreadable")
    present = dict(cp[section]) if cp.has_section(section) else {}
    unknown = set(present) - set(schema)
    if unknown:
        raise ValidationError(
            f"unknown keys in [{section}]: {', '.join(sorted(unknown))}")
    out = {}
    for key, (kind, default) in schema.items():
        env = os.environ.get(f"ORDERBRIDGE_{key.upper()}")
        if env is not None:
            out[key] = _parse_value(env, kind)
        elif key in present:
            out[key] = _parse_value(present[key], kind)
        elif default is None:
            raise ValidationError(f"missing required key {key!r} in [{section}]")
        else:
            out[key] = default
    return out
