"""Feature-map tensors and their NPY on-disk interchange format.

Files are NPY v1.0/v2.0, little-endian ``<f4`` or ``<f8``, C-contiguous,
rank 3 ``(C, H, W)`` or rank 4 ``(B, C, H, W)``.  Fortran-ordered files are
rejected rather than transposed: a silent axis permutation is the most
dangerous failure mode for channel/height/width semantics.

In-memory data is always float64 regardless of the stored precision; the
stored precision is remembered so a save/load round trip is bit-exact at
that precision.
"""

from __future__ import annotations

import ast
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    IoError,
    MalformedHeader,
    NonFiniteData,
    PayloadLengthError,
    RankError,
    UnsupportedDtype,
)

_MAGIC = b"\x93NUMPY"
_DESCR_TO_PRECISION = {"<f4": "float32", "<f8": "float64"}
_PRECISION_TO_DESCR = {v: k for k, v in _DESCR_TO_PRECISION.items()}


@dataclass(frozen=True)
class FeatureMap:
    """One layer's activations for one sample, shape (C, H, W).

    ``data`` is a read-only float64 array; ``precision`` records the
    on-disk element type ("float32" or "float64").
    """

    data: np.ndarray
    precision: str = "float64"

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.data, dtype=np.float64))
        if arr.ndim != 3:
            raise RankError(f"feature map must be rank 3 (C, H, W), got rank {arr.ndim}")
        if min(arr.shape) < 1:
            raise RankError(f"feature map dimensions must be >= 1, got {arr.shape}")
        if self.precision not in _PRECISION_TO_DESCR:
            raise UnsupportedDtype(f"precision must be float32 or float64, got {self.precision!r}")
        if not np.isfinite(arr).all():
            idx = int(np.flatnonzero(~np.isfinite(arr.ravel()))[0])
            raise NonFiniteData(idx)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape


@dataclass(frozen=True)
class FeatureMapBatch:
    """Non-empty, shape- and precision-homogeneous sequence of FeatureMap."""

    samples: tuple[FeatureMap, ...] = field(default_factory=tuple)

    def __post_init__(self):
        samples = tuple(self.samples)
        if not samples:
            raise RankError("a feature-map batch must contain at least one sample")
        first = samples[0]
        for m in samples[1:]:
            if m.shape != first.shape:
                raise RankError(f"batch is not shape-homogeneous: {m.shape} vs {first.shape}")
            if m.precision != first.precision:
                raise RankError("batch mixes stored precisions")
        object.__setattr__(self, "samples", samples)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.samples[0].shape

    @property
    def precision(self) -> str:
        return self.samples[0].precision

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def __getitem__(self, i: int) -> FeatureMap:
        return self.samples[i]


def _read_header(f) -> tuple[tuple[int, ...], str]:
    """Parse an NPY header, returning (shape, descr)."""
    magic = f.read(len(_MAGIC))
    if magic != _MAGIC:
        raise MalformedHeader(f"bad magic {magic!r}")
    version = f.read(2)
    if len(version) != 2:
        raise MalformedHeader("truncated version field")
    major, _minor = version[0], version[1]
    if major == 1:
        raw = f.read(2)
        if len(raw) != 2:
            raise MalformedHeader("truncated header length")
        (header_len,) = struct.unpack("<H", raw)
    elif major == 2:
        raw = f.read(4)
        if len(raw) != 4:
            raise MalformedHeader("truncated header length")
        (header_len,) = struct.unpack("<I", raw)
    else:
        raise MalformedHeader(f"unsupported NPY version {major}.{_minor}")
    header = f.read(header_len)
    if len(header) != header_len:
        raise MalformedHeader("truncated header dict")
    try:
        meta = ast.literal_eval(header.decode("latin1").strip())
    except (ValueError, SyntaxError) as exc:
        raise MalformedHeader(f"unparsable header dict: {exc}") from exc
    if not isinstance(meta, dict) or set(meta) != {"descr", "fortran_order", "shape"}:
        raise MalformedHeader(f"header dict has wrong keys: {sorted(meta) if isinstance(meta, dict) else meta!r}")
    descr = meta["descr"]
    if descr not in _DESCR_TO_PRECISION:
        raise UnsupportedDtype(f"unsupported descr {descr!r}; expected '<f4' or '<f8'")
    if meta["fortran_order"] is not False:
        raise MalformedHeader("fortran_order=True files are rejected, not transposed")
    shape = meta["shape"]
    if not (isinstance(shape, tuple) and all(isinstance(d, int) for d in shape)):
        raise MalformedHeader(f"shape is not a tuple of ints: {shape!r}")
    return shape, descr


def _check_finite(flat: np.ndarray) -> None:
    finite = np.isfinite(flat)
    if not finite.all():
        raise NonFiniteData(int(np.flatnonzero(~finite)[0]))


def load_feature_maps(path) -> FeatureMapBatch:
    """Load a rank-3 or rank-4 NPY file as a validated FeatureMapBatch.

    Rank-3 input becomes a batch of one.  Raises MalformedHeader,
    UnsupportedDtype, RankError, PayloadLengthError, NonFiniteData, or
    IoError.
    """
    try:
        with open(path, "rb") as f:
            shape, descr = _read_header(f)
            payload = f.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if len(shape) not in (3, 4):
        raise RankError(f"expected rank 3 or 4, got rank {len(shape)} {shape}")
    if min(shape) < 1:
        raise RankError(f"dimensions must be >= 1, got {shape}")
    dtype = np.dtype(descr)
    expected = int(np.prod(shape)) * dtype.itemsize
    if len(payload) != expected:
        raise PayloadLengthError(
            f"declared shape {shape} needs {expected} payload bytes, file has {len(payload)}"
        )
    flat = np.frombuffer(payload, dtype=dtype)
    _check_finite(flat)
    arr = flat.reshape(shape).astype(np.float64)
    if arr.ndim == 3:
        arr = arr[np.newaxis]
    precision = _DESCR_TO_PRECISION[descr]
    return FeatureMapBatch(tuple(FeatureMap(arr[b], precision) for b in range(arr.shape[0])))


def load_matrix(path) -> np.ndarray:
    """Load a rank-2 NPY matrix (e.g. channel-adapter weights) as float64."""
    try:
        with open(path, "rb") as f:
            shape, descr = _read_header(f)
            payload = f.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if len(shape) != 2:
        raise RankError(f"expected a rank-2 matrix, got rank {len(shape)} {shape}")
    dtype = np.dtype(descr)
    expected = int(np.prod(shape)) * dtype.itemsize
    if len(payload) != expected:
        raise PayloadLengthError(
            f"declared shape {shape} needs {expected} payload bytes, file has {len(payload)}"
        )
    flat = np.frombuffer(payload, dtype=dtype)
    _check_finite(flat)
    return flat.reshape(shape).astype(np.float64)


def _build_header(shape: tuple[int, ...], descr: str) -> bytes:
    meta = "{'descr': '%s', 'fortran_order': False, 'shape': %s, }" % (
        descr,
        repr(tuple(int(d) for d in shape)),
    )
    # pad header (magic + version + length + dict + '\n') to a 64-byte multiple
    base = len(_MAGIC) + 2 + 2
    pad = 64 - (base + len(meta) + 1) % 64
    if pad == 64:
        pad = 0
    meta = meta + " " * pad + "\n"
    return _MAGIC + bytes([1, 0]) + struct.pack("<H", len(meta)) + meta.encode("latin1")


def save_feature_maps(batch: FeatureMapBatch, path) -> None:
    """Write a batch as a rank-4 NPY file at the batch's stored precision."""
    arr = np.stack([m.data for m in batch]).astype(_PRECISION_TO_DESCR[batch.precision])
    header = _build_header(arr.shape, _PRECISION_TO_DESCR[batch.precision])
    try:
        with open(path, "wb") as f:
            f.write(header)
            f.write(np.ascontiguousarray(arr).tobytes())
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
