"""Binary descriptor and correspondence file formats.

Both formats are little-endian regardless of host byte order and round-trip
bit-exactly. Descriptor files carry one subset's N x D float32 matrix with
its image ids; correspondence files carry the matched keypoint pixel pairs
of one (A, B) image pair.
"""
from __future__ import annotations

import io
import os
import struct
from dataclasses import dataclass
from typing import BinaryIO

import numpy as np

from ._io import atomic_write_bytes
from .errors import DataIntegrityError, DegenerateDescriptorError, FormatError, TruncationError

DESCRIPTOR_MAGIC = b"VPRD"
CORRESPONDENCE_MAGIC = b"VPRC"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class DescriptorSet:
    """Global descriptors for one subset: row i belongs to image_ids[i]."""

    subset: str
    image_ids: tuple[str, ...]
    data: np.ndarray
    method_tag: str

    def __post_init__(self):
        if self.subset not in ("A", "B"):
            raise DataIntegrityError(f"subset must be 'A' or 'B', got {self.subset!r}")
        object.__setattr__(self, "image_ids", tuple(self.image_ids))
        data = np.asarray(self.data, dtype=np.float32)
        if data.ndim != 2:
            raise DataIntegrityError(f"descriptor data must be 2-D, got shape {data.shape}")
        if data.shape[0] != len(self.image_ids):
            raise DataIntegrityError(
                f"{data.shape[0]} descriptor rows but {len(self.image_ids)} image ids"
            )
        if data.size and not np.all(np.isfinite(data)):
            raise DataIntegrityError("descriptor data contains non-finite entries")
        if data.shape[0]:
            norms = np.linalg.norm(data.astype(np.float64), axis=1)
            if np.any(norms == 0.0):
                bad = [self.image_ids[i] for i in np.flatnonzero(norms == 0.0)[:5]]
                raise DegenerateDescriptorError(
                    f"zero-norm descriptor rows for image ids {bad}"
                )
        data = data.copy()
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def count(self) -> int:
        return self.data.shape[0]

    @property
    def dimension(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class CorrespondenceSet:
    """Matched keypoints of one image pair as (x_a, y_a, x_b, y_b) pixel rows."""

    image_id_a: str
    image_id_b: str
    points: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float32)
        if points.size == 0:
            points = points.reshape(0, 4)
        if points.ndim != 2 or points.shape[1] != 4:
            raise DataIntegrityError(
                f"correspondence points must be M x 4, got shape {points.shape}"
            )
        if points.size and not np.all(np.isfinite(points)):
            raise DataIntegrityError("correspondence points contain non-finite entries")
        if len(np.unique(points, axis=0)) != len(points):
            raise DataIntegrityError("correspondence rows must be distinct point pairs")
        points = points.copy()
        points.setflags(write=False)
        object.__setattr__(self, "points", points)

    def __len__(self) -> int:
        return self.points.shape[0]


# ---------------------------------------------------------------------------
# Wire helpers

_MAX_STRING = 0xFFFF


def _pack_string(value: str) -> bytes:
    raw = value.encode("utf-8")
    if len(raw) > _MAX_STRING:
        raise FormatError(f"string of {len(raw)} bytes exceeds the u16 length prefix")
    return struct.pack("<H", len(raw)) + raw


class _Reader:
    def __init__(self, handle: BinaryIO, name: str):
        self._handle = handle
        self._name = name

    def exact(self, n: int, what: str) -> bytes:
        chunk = self._handle.read(n)
        if len(chunk) != n:
            raise TruncationError(
                f"{self._name}: file ended inside {what} "
                f"(wanted {n} bytes, got {len(chunk)})"
            )
        return chunk

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.exact(struct.calcsize(fmt), what))

    def string(self, what: str) -> str:
        (length,) = self.unpack("<H", f"{what} length")
        return self.exact(length, what).decode("utf-8")

    def expect_eof(self) -> None:
        if self._handle.read(1):
            raise FormatError(f"{self._name}: trailing bytes after the payload")


def _write_sink(sink, payload: bytes) -> None:
    if isinstance(sink, (str, os.PathLike)):
        atomic_write_bytes(sink, payload)
    else:
        sink.write(payload)


def _open_source(source) -> tuple[BinaryIO, str, bool]:
    if isinstance(source, (str, os.PathLike)):
        return open(source, "rb"), str(source), True
    name = getattr(source, "name", "<stream>")
    return source, str(name), False


# ---------------------------------------------------------------------------
# Descriptor files


def write_descriptor_file(dset: DescriptorSet, sink) -> None:
    """Serialize a DescriptorSet; path sinks are written atomically."""
    buf = io.BytesIO()
    buf.write(DESCRIPTOR_MAGIC)
    buf.write(struct.pack("<H", FORMAT_VERSION))
    buf.write(_pack_string(dset.method_tag))
    buf.write(dset.subset.encode("ascii"))
    buf.write(struct.pack("<II", dset.count, dset.dimension))
    for image_id in dset.image_ids:
        buf.write(_pack_string(image_id))
    buf.write(np.ascontiguousarray(dset.data, dtype="<f4").tobytes())
    _write_sink(sink, buf.getvalue())


def read_descriptor_file(source) -> DescriptorSet:
    handle, name, owned = _open_source(source)
    try:
        r = _Reader(handle, name)
        magic = r.exact(4, "magic")
        if magic != DESCRIPTOR_MAGIC:
            raise FormatError(f"{name}: bad magic {magic!r}, expected {DESCRIPTOR_MAGIC!r}")
        (version,) = r.unpack("<H", "version")
        if version != FORMAT_VERSION:
            raise FormatError(f"{name}: unsupported version {version}")
        method_tag = r.string("method_tag")
        subset = r.exact(1, "subset byte").decode("ascii", errors="replace")
        if subset not in ("A", "B"):
            raise FormatError(f"{name}: subset byte must be 'A' or 'B', got {subset!r}")
        n, d = r.unpack("<II", "matrix header")
        image_ids = tuple(r.string(f"image id {i}") for i in range(n))
        payload = r.exact(n * d * 4, "descriptor matrix")
        r.expect_eof()
    finally:
        if owned:
            handle.close()
    data = np.frombuffer(payload, dtype="<f4").reshape(n, d)
    return DescriptorSet(subset=subset, image_ids=image_ids, data=data, method_tag=method_tag)


# ---------------------------------------------------------------------------
# Correspondence files


def write_correspondence_file(cset: CorrespondenceSet, sink) -> None:
    buf = io.BytesIO()
    buf.write(CORRESPONDENCE_MAGIC)
    buf.write(struct.pack("<H", FORMAT_VERSION))
    buf.write(_pack_string(cset.image_id_a))
    buf.write(_pack_string(cset.image_id_b))
    buf.write(struct.pack("<I", len(cset)))
    buf.write(np.ascontiguousarray(cset.points, dtype="<f4").tobytes())
    _write_sink(sink, buf.getvalue())


def read_correspondence_file(source) -> CorrespondenceSet:
    handle, name, owned = _open_source(source)
    try:
        r = _Reader(handle, name)
        magic = r.exact(4, "magic")
        if magic != CORRESPONDENCE_MAGIC:
            raise FormatError(
                f"{name}: bad magic {magic!r}, expected {CORRESPONDENCE_MAGIC!r}"
            )
        (version,) = r.unpack("<H", "version")
        if version != FORMAT_VERSION:
            raise FormatError(f"{name}: unsupported version {version}")
        image_id_a = r.string("image_id_a")
        image_id_b = r.string("image_id_b")
        (m,) = r.unpack("<I", "row count")
        payload = r.exact(m * 16, "correspondence rows")
        r.expect_eof()
    finally:
        if owned:
            handle.close()
    points = np.frombuffer(payload, dtype="<f4").reshape(m, 4)
    return CorrespondenceSet(image_id_a=image_id_a, image_id_b=image_id_b, points=points)
