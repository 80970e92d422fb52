"""Binary checkpoints, schema'd CSV, and verdict JSON with atomic writes.

Checkpoint layout (little endian):
    bytes 0..11   magic  b"PRANDTLCKPT\\0"
    bytes 12..15  version u32 (currently 1)
    header        nx u32, ny u32, x_period f64, y_max f64, t f64, dt f64,
                  noslip_flag u32, beta f64 (0 when no-slip), ell f64,
                  theta f64, k u32
    payload       row-major float64 u values, nx*ny entries

Reads reproduce the field bit-exactly; every mismatch error names the
offending byte offset or the mismatched values.
"""

import json
import math
import os
import struct
import tempfile

import numpy as np

from prandtl.calculus import Field
from prandtl.grid import Grid, build_grid

MAGIC = b"PRANDTLCKPT\x00"
VERSION = 1
_HEADER = struct.Struct("<IIddddIdddI")


def _atomic_write(path: str, payload: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-ckpt-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def checkpoint_write(path: str, field: Field, t: float, dt: float, beta: float,
                     ell: float, theta: float, k: int) -> None:
    grid = field.grid
    noslip = 1 if math.isinf(beta) else 0
    header = _HEADER.pack(
        grid.nx, grid.ny, grid.x_period, grid.y_max, t, dt,
        noslip, 0.0 if noslip else beta, ell, theta, k,
    )
    payload = MAGIC + struct.pack("<I", VERSION) + header
    payload += np.ascontiguousarray(field.values, dtype="<f8").tobytes()
    _atomic_write(path, payload)


class CheckpointError(RuntimeError):
    pass


def checkpoint_read(path: str, expected_grid: Grid | None = None):
    """Read a checkpoint; returns (Field, meta dict)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 16:
        raise CheckpointError(f"truncated checkpoint: {len(blob)} bytes < 16-byte magic")
    if blob[:12] != MAGIC:
        raise CheckpointError(f"bad magic at offset 0: {blob[:12]!r}")
    (version,) = struct.unpack_from("<I", blob, 12)
    if version != VERSION:
        raise CheckpointError(f"unsupported version {version} at offset 12")
    if len(blob) < 16 + _HEADER.size:
        raise CheckpointError(f"truncated header: file ends at offset {len(blob)}")
    fields = _HEADER.unpack_from(blob, 16)
    nx, ny, x_period, y_max, t, dt, noslip, beta, ell, theta, k = fields
    expected_len = 16 + _HEADER.size + 8 * nx * ny
    if len(blob) != expected_len:
        raise CheckpointError(
            f"payload length mismatch: expected {expected_len} bytes, "
            f"file ends at offset {len(blob)}"
        )
    grid = build_grid(nx, ny, x_period, y_max)
    if expected_grid is not None:
        for name, got, want in (
            ("nx", nx, expected_grid.nx),
            ("ny", ny, expected_grid.ny),
            ("x_period", x_period, expected_grid.x_period),
            ("y_max", y_max, expected_grid.y_max),
        ):
            if got != want:
                raise CheckpointError(
                    f"checkpoint {name}={got} does not match configured {name}={want}"
                )
    values = np.frombuffer(
        blob, dtype="<f8", count=nx * ny, offset=16 + _HEADER.size
    ).reshape(nx, ny).copy()
    meta = {
        "t": t,
        "dt": dt,
        "beta": math.inf if noslip else beta,
        "ell": ell,
        "theta": theta,
        "k": k,
    }
    return Field(grid, values), meta


# ---------------------------------------------------------------------------
# CSV and JSON artifacts
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(path: str, columns: list[str], types: list[str], rows: list) -> None:
    """CSV with a leading schema row (#schema,name:type,...)."""
    if len(columns) != len(types):
        raise ValueError("schema mismatch: columns vs types")
    lines = ["#schema," + ",".join(f"{c}:{t}" for c, t in zip(columns, types))]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    _atomic_write(path, ("\n".join(lines) + "\n").encode())


def write_verdicts(path: str, config_hash: str, checks: dict, extra: dict | None = None) -> None:
    """JSON verdict file; every check maps to {passed, details}."""
    doc = {
        "config_hash": config_hash,
        "all_passed": bool(all(c["passed"] for c in checks.values())),
        "checks": checks,
    }
    if extra:
        doc["extra"] = extra
    blob = json.dumps(doc, indent=2, sort_keys=True, default=_json_default)
    _atomic_write(path, (blob + "\n").encode())


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    raise TypeError(f"not JSON serializable: {type(obj)}")


def read_verdicts(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
