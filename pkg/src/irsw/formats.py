"""Binary containers and CSV export.

Checkpoint files (magic ``IRSW``): version u16 LE, blob count u32 LE, then
per blob: name length u16 LE, UTF-8 name, ndim u8, dims u32 LE each, float64
LE row-major payload.

Tensor containers (magic ``IRST``): version u16 LE, dtype code u8
(0 = float32, 1 = float64), ndim u8, dims u32 LE each, LE row-major payload.
Multiple records may be concatenated in one file; readers consume until EOF.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

CHECKPOINT_MAGIC = b"IRSW"
TENSOR_MAGIC = b"IRST"
FORMAT_VERSION = 1

_DTYPE_CODES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}


def save_checkpoint(path, blobs):
    """Write named float64 arrays; ``blobs`` is an iterable of (name, array)."""
    blobs = list(blobs)
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<H", FORMAT_VERSION))
        fh.write(struct.pack("<I", len(blobs)))
        for name, arr in blobs:
            # note: ascontiguousarray would promote 0-d arrays to shape (1,)
            arr = np.asarray(arr, dtype="<f8", order="C")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", arr.ndim))
            for dim in arr.shape:
                fh.write(struct.pack("<I", dim))
            fh.write(arr.tobytes())


def load_checkpoint(path):
    """Read back (name, float64 array) pairs in file order."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"not a checkpoint file (magic {magic!r})")
        (version,) = struct.unpack("<H", fh.read(2))
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        (count,) = struct.unpack("<I", fh.read(4))
        blobs = []
        for _ in range(count):
            (name_len,) = struct.unpack("<H", fh.read(2))
            name = fh.read(name_len).decode("utf-8")
            (ndim,) = struct.unpack("<B", fh.read(1))
            dims = struct.unpack(f"<{ndim}I", fh.read(4 * ndim)) if ndim else ()
            n_items = int(np.prod(dims)) if ndim else 1
            payload = fh.read(8 * n_items)
            if len(payload) != 8 * n_items:
                raise ValueError(f"truncated payload for blob {name!r}")
            blobs.append((name, np.frombuffer(payload, dtype="<f8").reshape(dims).copy()))
        return blobs


def _dtype_code(arr):
    if arr.dtype == np.float32:
        return 0
    if arr.dtype == np.float64:
        return 1
    raise ValueError(f"unsupported dtype {arr.dtype}; convert to float32/float64 first")


def write_tensor_record(fh, arr):
    arr = np.ascontiguousarray(arr)
    code = _dtype_code(arr)
    fh.write(TENSOR_MAGIC)
    fh.write(struct.pack("<H", FORMAT_VERSION))
    fh.write(struct.pack("<B", code))
    fh.write(struct.pack("<B", arr.ndim))
    for dim in arr.shape:
        fh.write(struct.pack("<I", dim))
    fh.write(arr.astype(_DTYPE_CODES[code]).tobytes())


def read_tensor_record(fh):
    """Read one record, or return None at EOF."""
    magic = fh.read(4)
    if not magic:
        return None
    if magic != TENSOR_MAGIC:
        raise ValueError(f"not a tensor record (magic {magic!r})")
    (version,) = struct.unpack("<H", fh.read(2))
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported container version {version}")
    (code,) = struct.unpack("<B", fh.read(1))
    if code not in _DTYPE_CODES:
        raise ValueError(f"unknown dtype code {code}")
    (ndim,) = struct.unpack("<B", fh.read(1))
    dims = struct.unpack(f"<{ndim}I", fh.read(4 * ndim)) if ndim else ()
    dtype = _DTYPE_CODES[code]
    n_items = int(np.prod(dims)) if ndim else 1
    payload = fh.read(dtype.itemsize * n_items)
    if len(payload) != dtype.itemsize * n_items:
        raise ValueError("truncated tensor record")
    return np.frombuffer(payload, dtype=dtype).reshape(dims).copy()


def save_tensors(path, arrays):
    with open(path, "wb") as fh:
        for arr in arrays:
            write_tensor_record(fh, arr)


def load_tensors(path):
    out = []
    with open(path, "rb") as fh:
        while True:
            arr = read_tensor_record(fh)
            if arr is None:
                return out
            out.append(arr)


def save_tensor(path, arr):
    save_tensors(path, [arr])


def load_tensor(path):
    arrays = load_tensors(path)
    if len(arrays) != 1:
        raise ValueError(f"expected exactly one tensor record in {path}, found {len(arrays)}")
    return arrays[0]


# -- result rows ---------------------------------------------------------------

RESULT_HEADER = "method,b,snr_db,nmse,wall_time_ms,flop_estimate"


@dataclass
class ResultRow:
    method: str
    b: int
    snr_db: float
    nmse: float
    wall_time_ms: float
    flop_estimate: float

    def __post_init__(self):
        if self.nmse < 0:
            raise ValueError("nmse must be non-negative")


def _fmt(x):
    # %.17g round-trips float64 exactly and always shows >= 9 significant digits
    # for non-trivial values.
    return format(float(x), ".17g")


def export_results(rows, path):
    lines = [RESULT_HEADER]
    for row in rows:
        lines.append(
            f"{row.method},{row.b},{_fmt(row.snr_db)},{_fmt(row.nmse)},"
            f"{_fmt(row.wall_time_ms)},{_fmt(row.flop_estimate)}"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_results(path):
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if not lines or lines[0] != RESULT_HEADER:
        raise ValueError("missing or malformed results header")
    rows = []
    for line in lines[1:]:
        method, b, snr, nm, wt, fe = line.split(",")
        rows.append(ResultRow(method, int(b), float(snr), float(nm), float(wt), float(fe)))
    return rows
