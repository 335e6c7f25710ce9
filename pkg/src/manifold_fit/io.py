"""Point-cloud files.

CSV: header ``x0,x1,...,x{D-1}``, one point per row, values written with
``repr`` so floats round-trip exactly.  A sidecar ``<stem>.json`` manifest
records ``{kind, d, D, params, seed, sigma, n}``.

Binary (``.mfpc``): magic ``b"MFPC"``, version ``u32``, ``n`` as ``u64``,
``D`` as ``u32``, then ``n * D`` little-endian ``f64`` values row by row.
"""
import csv
import json
import struct
from pathlib import Path

import numpy as np

from .validation import as_point_cloud

MAGIC = b"MFPC"
VERSION = 1
_HEADER = struct.Struct("<4sIQI")


def manifest_path(path):
    return Path(path).with_suffix(".json")


def write_csv(path, points, manifest=None):
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"x{j}" for j in range(points.shape[1])])
        for row in points:
            writer.writerow([repr(float(v)) for v in row])
    if manifest is not None:
        write_manifest(path, {**manifest, "n": len(points), "D": points.shape[1]})
    return path


def read_csv(path):
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or any(h != f"x{j}" for j, h in enumerate(header)):
            raise ValueError(f"{path}: expected header x0,x1,..., got {header}")
        rows = [[float(v) for v in row] for row in reader if row]
    if not rows:
        return np.empty((0, len(header)))
    return as_point_cloud(rows, name=str(path))


def write_binary(path, points):
    points = np.ascontiguousarray(np.atleast_2d(points), dtype="<f8")
    n, D = points.shape
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n, D))
        fh.write(points.tobytes())
    return path


def read_binary(path):
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, version, n, D = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    body = data[_HEADER.size:]
    if len(body) != 8 * n * D:
        raise ValueError(f"{path}: expected {n * D} values, found {len(body) // 8}")
    arr = np.frombuffer(body, dtype="<f8").astype(np.float64).reshape(n, D)
    return as_point_cloud(arr, name=str(path)) if n else arr


def write_points(path, points, manifest=None):
    """Write by extension: ``.mfpc`` is binary, anything else CSV."""
    path = Path(path)
    if path.suffix == ".mfpc":
        write_binary(path, points)
        if manifest is not None:
            points = np.atleast_2d(points)
            write_manifest(path, {**manifest, "n": len(points), "D": points.shape[1]})
        return path
    return write_csv(path, points, manifest)


def read_points(path):
    path = Path(path)
    with path.open("rb") as fh:
        head = fh.read(4)
    return read_binary(path) if head == MAGIC else read_csv(path)


def write_manifest(path, manifest):
    target = manifest_path(path)
    target.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return target


def read_manifest(path):
    target = manifest_path(path)
    if not target.exists():
        return None
    return json.loads(target.read_text())
