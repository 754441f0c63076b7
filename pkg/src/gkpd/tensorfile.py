"""Self-describing tensor file: a short text header followed by raw scalars.

Layout::

    GKPD-TENSOR 1
    name: conv1.weight
    dtype: f64
    shape: 64,3,7,7
    byteorder: little
    offset: 0000000097
    end
    <payload: prod(shape) little-endian scalars, row-major>

``offset`` is the byte position of the payload and is always written with ten
digits, so it equals the header length.  Readers accept any ``offset`` at or
after the end of the header.  ``dtype`` is ``f32`` or ``f64``; loaders widen to
float64 by default.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import GkpdError

MAGIC = "GKPD-TENSOR"
VERSION = 1
DTYPES = {"f32": np.dtype("<f4"), "f64": np.dtype("<f8")}
_MAX_HEADER = 4096


class TensorFileError(GkpdError, OSError):
    """Malformed or unreadable tensor file."""


@dataclass(frozen=True)
class TensorHeader:
    name: str
    dtype: str
    shape: tuple[int, ...]
    offset: int

    @property
    def nbytes(self) -> int:
        return int(np.prod(self.shape)) * DTYPES[self.dtype].itemsize


def encode(array, name: str = "tensor", dtype: str = "f64") -> bytes:
    """Serialise ``array`` to the file format."""
    if dtype not in DTYPES:
        raise TensorFileError(f"unsupported dtype {dtype!r}")
    if "\n" in name or not name.strip():
        raise TensorFileError("tensor name must be a non-empty single line")
    arr = np.ascontiguousarray(np.asarray(array), dtype=DTYPES[dtype])
    if arr.ndim == 0:
        arr = arr.reshape(1)
    shape = ",".join(str(s) for s in arr.shape)

    def header(offset: int) -> bytes:
        lines = [
            f"{MAGIC} {VERSION}",
            f"name: {name.strip()}",
            f"dtype: {dtype}",
            f"shape: {shape}",
            "byteorder: little",
            f"offset: {offset:010d}",
            "end",
        ]
        return ("\n".join(lines) + "\n").encode("utf-8")

    head = header(len(header(0)))
    return head + arr.tobytes(order="C")


def write_tensor(path, array, name: str | None = None, dtype: str = "f64") -> None:
    path = Path(path)
    blob = encode(array, name or path.stem, dtype)
    try:
        path.write_bytes(blob)
    except OSError as exc:
        raise TensorFileError(f"cannot write {path}: {exc}") from exc


def parse_header(blob: bytes) -> TensorHeader:
    """Parse and validate the header; never touches the payload."""
    end = blob.find(b"\nend\n", 0, _MAX_HEADER)
    if end < 0:
        raise TensorFileError("header terminator not found")
    try:
        lines = blob[:end].decode("utf-8").split("\n")
    except UnicodeDecodeError as exc:
        raise TensorFileError("header is not valid UTF-8") from exc
    header_len = end + len(b"\nend\n")
    if lines[0] != f"{MAGIC} {VERSION}":
        raise TensorFileError(f"bad magic/version line {lines[0]!r}")
    fields = {}
    for line in lines[1:]:
        key, sep, value = line.partition(": ")
        if not sep or key in fields:
            raise TensorFileError(f"malformed header line {line!r}")
        fields[key] = value
    missing = {"name", "dtype", "shape", "byteorder", "offset"} - fields.keys()
    if missing:
        raise TensorFileError(f"header missing fields: {sorted(missing)}")
    if fields["dtype"] not in DTYPES:
        raise TensorFileError(f"unsupported dtype {fields['dtype']!r}")
    if fields["byteorder"] != "little":
        raise TensorFileError(f"unsupported byte order {fields['byteorder']!r}")
    try:
        shape = tuple(int(s) for s in fields["shape"].split(","))
        offset = int(fields["offset"])
    except ValueError as exc:
        raise TensorFileError(f"bad shape or offset: {exc}") from exc
    if not shape or any(s < 1 for s in shape):
        raise TensorFileError(f"invalid shape {shape}")
    if offset < header_len:
        raise TensorFileError(f"offset {offset} overlaps the header ({header_len} bytes)")
    return TensorHeader(fields["name"], fields["dtype"], shape, offset)


def decode(blob: bytes, widen: bool = True) -> tuple[np.ndarray, TensorHeader]:
    head = parse_header(blob)
    payload = blob[head.offset :]
    if len(payload) != head.nbytes:
        raise TensorFileError(
            f"payload is {len(payload)} bytes, header implies {head.nbytes}"
        )
    arr = np.frombuffer(payload, dtype=DTYPES[head.dtype]).reshape(head.shape)
    return (arr.astype(np.float64) if widen else arr.copy()), head


def read_tensor(path, widen: bool = True) -> tuple[np.ndarray, TensorHeader]:
    """Load a tensor file.  The array is widened to float64 unless ``widen`` is false."""
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise TensorFileError(f"cannot read {path}: {exc}") from exc
    try:
        return decode(blob, widen)
    except TensorFileError as exc:
        raise TensorFileError(f"{path}: {exc}") from None


def replace_atomically(files: dict[Path, bytes]) -> None:
    """Write several files so that either all of them appear or none do."""
    temps = []
    try:
        for path, blob in files.items():
            tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
            tmp.write_bytes(blob)
            temps.append((tmp, path))
        for tmp, path in temps:
            os.replace(tmp, path)
    except OSError as exc:
        for tmp, _ in temps:
            tmp.unlink(missing_ok=True)
        raise TensorFileError(f"cannot write output: {exc}") from exc
