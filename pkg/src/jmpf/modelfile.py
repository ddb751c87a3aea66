"""Versioned binary model files.

Layout (little-endian)::

    b"JMPF" | u32 format version | u32 kind | u32 payload length | payload | u32 crc32(payload)

The payload is a tagged tree of values (None, bool, i64, f64, str, ndarray,
list, dict). Arrays are stored as raw bytes with their dtype and shape, so a
save/load round trip is bit-exact.
"""
from __future__ import annotations

import dataclasses
import enum
import struct
import zlib

import numpy as np

from .forest import Forest, ForestConfig, Task, Tree
from .imageio import _atomic_write
from .numerics import PcaBasis
from .pipeline import ForestModel, Standardizer
from .rotation import RotationModel
from .srpipe import PatchConfig, SRModel

MAGIC = b"JMPF"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIII")


class Kind(enum.IntEnum):
    FOREST_CLASSIFIER = 1
    FOREST_REGRESSOR = 2
    SR_MODEL = 3


class ModelFileError(ValueError):
    """Base class for unreadable model files."""


class BadMagicError(ModelFileError):
    pass


class VersionMismatchError(ModelFileError):
    pass


class TruncatedPayloadError(ModelFileError):
    pass


class CorruptPayloadError(ModelFileError):
    pass


# --- value codec -----------------------------------------------------------

_NONE, _BOOL, _INT, _FLOAT, _STR, _ARRAY, _LIST, _DICT = range(8)
_ARRAY_DTYPES = {"<f8", "<i8", "<i4", "<u1", "|u1", "|b1"}


def _enc_str(s: str, out: list) -> None:
    b = s.encode("utf-8")
    out.append(struct.pack("<I", len(b)))
    out.append(b)


def _encode(v, out: list) -> None:
    if v is None:
        out.append(bytes([_NONE]))
    elif isinstance(v, (bool, np.bool_)):
        out.append(bytes([_BOOL, int(bool(v))]))
    elif isinstance(v, (int, np.integer)):
        out.append(bytes([_INT]) + struct.pack("<q", int(v)))
    elif isinstance(v, (float, np.floating)):
        out.append(bytes([_FLOAT]) + struct.pack("<d", float(v)))
    elif isinstance(v, str):
        out.append(bytes([_STR]))
        _enc_str(v, out)
    elif isinstance(v, np.ndarray):
        a = np.ascontiguousarray(v)
        a = a.astype(a.dtype.newbyteorder("<"), copy=False)
        if a.dtype.str not in _ARRAY_DTYPES:
            raise TypeError(f"unsupported array dtype {a.dtype}")
        out.append(bytes([_ARRAY]))
        _enc_str(a.dtype.str, out)
        out.append(struct.pack("<I", a.ndim) + struct.pack(f"<{a.ndim}I", *a.shape))
        out.append(a.tobytes())
    elif isinstance(v, (list, tuple)):
        out.append(bytes([_LIST]) + struct.pack("<I", len(v)))
        for item in v:
            _encode(item, out)
    elif isinstance(v, dict):
        out.append(bytes([_DICT]) + struct.pack("<I", len(v)))
        for k, item in v.items():
            _enc_str(str(k), out)
            _encode(item, out)
    else:
        raise TypeError(f"cannot encode {type(v).__name__}")


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = memoryview(buf)
        self.pos = 0

    def take(self, n: int) -> memoryview:
        if self.pos + n > len(self.buf):
            raise TruncatedPayloadError("payload ends inside a value")
        chunk = self.buf[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        s = struct.calcsize(fmt)
        return struct.unpack(fmt, self.take(s))

    def string(self) -> str:
        (n,) = self.unpack("<I")
        return bytes(self.take(n)).decode("utf-8")

    def value(self):
        tag = self.take(1)[0]
        if tag == _NONE:
            return None
        if tag == _BOOL:
            return bool(self.take(1)[0])
        if tag == _INT:
            return self.unpack("<q")[0]
        if tag == _FLOAT:
            return self.unpack("<d")[0]
        if tag == _STR:
            return self.string()
        if tag == _ARRAY:
            dt = self.string()
            if dt not in _ARRAY_DTYPES:
                raise CorruptPayloadError(f"unknown array dtype {dt!r}")
            (ndim,) = self.unpack("<I")
            shape = self.unpack(f"<{ndim}I")
            dtype = np.dtype(dt)
            nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
            return np.frombuffer(self.take(nbytes), dtype=dtype).reshape(shape).astype(dtype.newbyteorder("="))
        if tag == _LIST:
            (n,) = self.unpack("<I")
            return [self.value() for _ in range(n)]
        if tag == _DICT:
            (n,) = self.unpack("<I")
            d = {}
            for _ in range(n):
                k = self.string()
                d[k] = self.value()
            return d
        raise CorruptPayloadError(f"unknown value tag {tag}")


# --- model <-> plain values -------------------------------------------------

def _config_to_dict(cfg) -> dict:
    return {k: (v.value if isinstance(v, enum.Enum) else v) for k, v in dataclasses.asdict(cfg).items()}


def _forest_to_dict(f: Forest) -> dict:
    trees = [{k: getattr(t, k) for k in ("feature", "threshold", "left", "right", "slot",
                                          "leaf_values", "leaf_counts")} for t in f.trees]
    return {"config": _config_to_dict(f.config), "trees": trees, "n_features": f.n_features,
            "n_outputs": f.n_outputs, "squeeze_output": f.squeeze_output}


def _forest_from_dict(d: dict) -> Forest:
    trees = [Tree(**t) for t in d["trees"]]
    return Forest(ForestConfig(**d["config"]), trees, d["n_features"], d["n_outputs"], d["squeeze_output"])


def _rotation_to_dict(r: RotationModel | None):
    if r is None:
        return None
    return {"mean": r.mean, "R": r.R, "loss_trace": r.loss_trace, "iterations": r.iterations, "seed": r.seed}


def _rotation_from_dict(d):
    return None if d is None else RotationModel(**d)


def _to_payload(model) -> tuple[Kind, dict]:
    if isinstance(model, SRModel):
        return Kind.SR_MODEL, {
            "patch": dataclasses.asdict(model.patch),
            "pca": {"mean": model.pca.mean, "components": model.pca.components,
                    "explained_variance": model.pca.explained_variance},
            "rotation": _rotation_to_dict(model.rotation),
            "forest": _forest_to_dict(model.forest),
            "meta": dict(model.meta),
        }
    if isinstance(model, ForestModel):
        kind = Kind.FOREST_CLASSIFIER if model.task is Task.CLASSIFICATION else Kind.FOREST_REGRESSOR
        return kind, {
            "standardizer": {"mean": model.standardizer.mean, "scale": model.standardizer.scale},
            "rotation": _rotation_to_dict(model.rotation),
            "forest": _forest_to_dict(model.forest),
            "class_labels": model.class_labels,
        }
    raise TypeError(f"cannot save {type(model).__name__}")


def _from_payload(kind: Kind, d: dict):
    try:
        if kind is Kind.SR_MODEL:
            return SRModel(PatchConfig(**d["patch"]), PcaBasis(**d["pca"]),
                           _rotation_from_dict(d["rotation"]), _forest_from_dict(d["forest"]), d["meta"])
        return ForestModel(Standardizer(**d["standardizer"]), _rotation_from_dict(d["rotation"]),
                           _forest_from_dict(d["forest"]), d["class_labels"])
    except (KeyError, TypeError) as exc:
        raise CorruptPayloadError(f"payload does not describe a {kind.name}: {exc}") from None


# --- public API --------------------------------------------------------------

def dumps(model) -> bytes:
    kind, payload = _to_payload(model)
    parts: list = []
    _encode(payload, parts)
    body = b"".join(parts)
    if len(body) >= 2 ** 32:
        raise ValueError("model payload exceeds the 4 GiB format limit")
    return _HEADER.pack(MAGIC, FORMAT_VERSION, int(kind), len(body)) + body + struct.pack("<I", zlib.crc32(body))


def loads(data: bytes):
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagicError("not a JMPF model file")
    if len(data) < _HEADER.size:
        raise TruncatedPayloadError("file ends inside the header")
    _, version, kind, length = _HEADER.unpack_from(data)
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"model format version {version}, this build reads {FORMAT_VERSION}")
    try:
        kind = Kind(kind)
    except ValueError:
        raise CorruptPayloadError(f"unknown model kind {kind}") from None
    end = _HEADER.size + length
    if len(data) < end + 4:
        raise TruncatedPayloadError(f"payload is {len(data) - _HEADER.size} bytes, header says {length} + 4")
    body = data[_HEADER.size:end]
    (crc,) = struct.unpack_from("<I", data, end)
    if zlib.crc32(body) != crc:
        raise CorruptPayloadError("payload checksum mismatch")
    r = _Reader(body)
    payload = r.value()
    if r.pos != len(body):
        raise CorruptPayloadError("trailing bytes after payload")
    return _from_payload(kind, payload)


def save_model(path, model) -> None:
    """Serialize ``model`` to ``path``; the write is atomic (temp file + rename)."""
    _atomic_write(path, dumps(model))


def load_model(path):
    with open(path, "rb") as fh:
        return loads(fh.read())
