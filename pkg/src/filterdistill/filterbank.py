"""Filter bank data model and (de)serialization.

Two on-disk representations are supported:

* "MKFB v1" binary, little-endian:
  bytes 0-3 ASCII ``MKFB``, u32 version (=1), u32 k, u32 count C,
  u32 meta_flag (1 = provenance table present, 0 = absent);
  if meta_flag=1: C records of (u32 layer_index, u32 channel_index);
  payload: C*k*k float32, filter-major, row-major within each filter.

* JSON manifest: ``{"version": 1, "k": 7, "filters": [{"layer": .., "channel": ..,
  "values": [.. k*k floats row-major ..]}, ...]}`` with sorted keys and
  shortest round-trip decimal rendering of the float32 values.

Values live in memory as float64 but are exactly float32-representable after
any load, so round-trips are bitwise at float32 precision in both formats.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadMagic,
    DuplicateEntry,
    IoFailure,
    KMismatch,
    NonFiniteValue,
    TruncatedFile,
    UnsupportedVersion,
)

MAGIC = b"MKFB"
VERSION = 1
_HEADER = struct.Struct("<4sIIII")
_META_REC = struct.Struct("<II")


@dataclass(frozen=True)
class Filter:
    """A single k x k spatial kernel."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"filter values must be square, got shape {v.shape}")
        k = v.shape[0]
        if k < 1 or k % 2 == 0:
            raise ValueError(f"kernel side must be odd and positive, got {k}")
        if not np.all(np.isfinite(v)):
            raise NonFiniteValue("filter contains NaN or Inf")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def k(self) -> int:
        return self.values.shape[0]

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Filter):
            return NotImplemented
        return self.values.shape == other.values.shape and bool(
            np.array_equal(self.values, other.values)
        )

    def __hash__(self):
        return hash(self.values.tobytes())


@dataclass(frozen=True)
class BankEntry:
    layer_index: int
    channel_index: int
    filter: Filter

    def __post_init__(self):
        if self.layer_index < 0 or self.channel_index < 0:
            raise ValueError("layer/channel indices must be nonnegative")


class FilterBank:
    """An immutable, ordered collection of same-sized filters with provenance."""

    def __init__(self, k: int, entries):
        if k < 1 or k % 2 == 0:
            raise ValueError(f"kernel side must be odd and positive, got {k}")
        entries = tuple(entries)
        seen = set()
        for e in entries:
            if e.filter.k != k:
                raise KMismatch(
                    f"filter at layer {e.layer_index} channel {e.channel_index} "
                    f"has k={e.filter.k}, bank has k={k}"
                )
            key = (e.layer_index, e.channel_index)
            if key in seen:
                raise DuplicateEntry(f"duplicate (layer, channel) = {key}")
            seen.add(key)
        self._k = k
        self._entries = entries

    @classmethod
    def from_filters(cls, filters, k=None) -> "FilterBank":
        """Bank with synthetic provenance (layer 0, channel = position)."""
        filters = list(filters)
        if k is None:
            if not filters:
                raise ValueError("k required for an empty bank")
            k = filters[0].k
        return cls(k, [BankEntry(0, i, f) for i, f in enumerate(filters)])

    @property
    def k(self) -> int:
        return self._k

    @property
    def entries(self) -> tuple:
        return self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    def __getitem__(self, i) -> BankEntry:
        return self._entries[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, FilterBank):
            return NotImplemented
        return (
            self._k == other._k
            and len(self) == len(other)
            and all(
                a.layer_index == b.layer_index
                and a.channel_index == b.channel_index
                and a.filter == b.filter
                for a, b in zip(self._entries, other._entries)
            )
        )

    def matrix(self) -> np.ndarray:
        """The (C, k*k) matrix of flattened filters, float64."""
        if not self._entries:
            return np.zeros((0, self._k * self._k))
        return np.stack([e.filter.flat() for e in self._entries])

    def subset(self, indices) -> "FilterBank":
        return FilterBank(self._k, [self._entries[i] for i in indices])

    def to_bytes(self) -> bytes:
        out = [_HEADER.pack(MAGIC, VERSION, self._k, len(self._entries), 1)]
        for e in self._entries:
            out.append(_META_REC.pack(e.layer_index, e.channel_index))
        for e in self._entries:
            out.append(e.filter.flat().astype("<f4").tobytes())
        return b"".join(out)

    def content_hash(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()


@dataclass
class BankStats:
    count: int
    mean_norm: float
    mean_abs_mean: float
    per_layer_counts: dict = field(default_factory=dict)


def bank_stats(bank: FilterBank) -> BankStats:
    if len(bank) == 0:
        return BankStats(count=0, mean_norm=0.0, mean_abs_mean=0.0)
    m = bank.matrix()
    per_layer = {}
    for e in bank:
        per_layer[e.layer_index] = per_layer.get(e.layer_index, 0) + 1
    return BankStats(
        count=len(bank),
        mean_norm=float(np.mean(np.linalg.norm(m, axis=1))),
        mean_abs_mean=float(np.mean(np.abs(np.mean(m, axis=1)))),
        per_layer_counts=per_layer,
    )


def _f32_exact(values) -> np.ndarray:
    """Round to float32 and return as float64 (exactly representable)."""
    return np.asarray(values, dtype=np.float32).astype(np.float64)


def bank_from_bytes(data: bytes) -> FilterBank:
    if len(data) < _HEADER.size:
        raise TruncatedFile(f"file too short for header ({len(data)} bytes)")
    magic, version, k, count, meta_flag = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise UnsupportedVersion(f"unsupported version {version}")
    if k < 1 or k % 2 == 0:
        raise TruncatedFile(f"invalid kernel side {k}")
    off = _HEADER.size
    if meta_flag == 1:
        need = count * _META_REC.size
        if len(data) < off + need:
            raise TruncatedFile("provenance table truncated")
        meta = [
            _META_REC.unpack_from(data, off + i * _META_REC.size) for i in range(count)
        ]
        off += need
    elif meta_flag == 0:
        meta = [(0, i) for i in range(count)]
    else:
        raise TruncatedFile(f"invalid meta_flag {meta_flag}")
    need = count * k * k * 4
    if len(data) < off + need:
        raise TruncatedFile("payload truncated")
    payload = np.frombuffer(data, dtype="<f4", count=count * k * k, offset=off)
    if not np.all(np.isfinite(payload)):
        raise NonFiniteValue("payload contains NaN or Inf")
    values = payload.astype(np.float64).reshape(count, k, k)
    entries = [
        BankEntry(layer, chan, Filter(values[i]))
        for i, (layer, chan) in enumerate(meta)
    ]
    return FilterBank(k, entries)


def _float32_repr(x: float) -> float:
    # Shortest decimal that round-trips to the same float32. Parsing the numpy
    # shortest string back to float64 keeps JSON rendering equally short.
    return float(str(np.float32(x)))


def bank_to_json(bank: FilterBank) -> str:
    obj = {
        "version": VERSION,
        "k": bank.k,
        "filters": [
            {
                "layer": e.layer_index,
                "channel": e.channel_index,
                "values": [_float32_repr(v) for v in e.filter.flat()],
            }
            for e in bank
        ],
    }
    return json.dumps(obj, sort_keys=True, indent=1)


def bank_from_json(text: str) -> FilterBank:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BadMagic(f"not a JSON manifest: {exc}") from exc
    if not isinstance(obj, dict) or "version" not in obj:
        raise BadMagic("JSON manifest missing version")
    if obj["version"] != VERSION:
        raise UnsupportedVersion(f"unsupported version {obj['version']}")
    k = int(obj["k"])
    entries = []
    for rec in obj.get("filters", []):
        vals = np.asarray(rec["values"], dtype=np.float64)
        if vals.size != k * k:
            raise TruncatedFile(
                f"filter record has {vals.size} values, expected {k * k}"
            )
        if not np.all(np.isfinite(vals)):
            raise NonFiniteValue("filter record contains NaN or Inf")
        entries.append(
            BankEntry(
                int(rec["layer"]),
                int(rec["channel"]),
                Filter(_f32_exact(vals).reshape(k, k)),
            )
        )
    return FilterBank(k, entries)


def save_bank(bank: FilterBank, path, format: str = "binary") -> None:
    try:
        if format == "binary":
            with open(path, "wb") as fh:
                fh.write(bank.to_bytes())
        elif format == "json":
            with open(path, "w") as fh:
                fh.write(bank_to_json(bank))
                fh.write("\n")
        else:
            raise ValueError(f"unknown format {format!r}")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_bank(path, format: str = None) -> FilterBank:
    """Load a bank; format is sniffed from the file when not given."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if format is None:
        format = "binary" if data[:4] == MAGIC else "json"
    if format == "binary":
        return bank_from_bytes(data)
    if format == "json":
        return bank_from_json(data.decode("utf-8"))
    raise ValueError(f"unknown format {format!r}")
