"""Readers/writers for the toolkit's on-disk interchange formats.

The bridge talks to the distillation toolkit only through files, so the
formats are implemented here independently:

- MKFB v1 filter banks: little-endian header ``<4sIIII`` (magic ``MKFB``,
  version 1, kernel side k, entry count, meta flag), then an optional
  provenance table of ``<II`` (layer, channel) records when the meta flag
  is 1, then ``count * k * k`` float32 values row-major.
- Assignment CSV with header ``layer,channel,candidate,a,b,residual``:
  target filter at (layer, channel) is approximated by
  ``a * normalized(candidates[candidate]) + b``.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass

import numpy as np

from .errors import BadMagic, TruncatedFile, UnsupportedVersion, ZeroVariance

MKFB_MAGIC = b"MKFB"
MKFB_VERSION = 1
_HEADER = struct.Struct("<4sIIII")
_META_REC = struct.Struct("<II")

EPSILON_ZERO = 1e-12


@dataclass(frozen=True)
class Bank:
    k: int
    values: np.ndarray  # (count, k, k) float64
    provenance: tuple  # of (layer, channel)

    def __len__(self):
        return self.values.shape[0]


def read_bank(path) -> Bank:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise TruncatedFile(f"{path}: too short for header")
    magic, version, k, count, meta_flag = _HEADER.unpack_from(data, 0)
    if magic != MKFB_MAGIC:
        raise BadMagic(f"{path}: bad magic {magic!r}")
    if version != MKFB_VERSION:
        raise UnsupportedVersion(f"{path}: version {version}")
    off = _HEADER.size
    if meta_flag == 1:
        need = count * _META_REC.size
        if len(data) < off + need:
            raise TruncatedFile(f"{path}: provenance table truncated")
        prov = tuple(
            _META_REC.unpack_from(data, off + i * _META_REC.size)
            for i in range(count)
        )
        off += need
    else:
        prov = tuple((0, i) for i in range(count))
    need = count * k * k * 4
    if len(data) < off + need:
        raise TruncatedFile(f"{path}: payload truncated")
    payload = np.frombuffer(data, dtype="<f4", count=count * k * k, offset=off)
    return Bank(
        k=k,
        values=payload.astype(np.float64).reshape(count, k, k),
        provenance=prov,
    )


def write_bank(values, provenance, path) -> None:
    values = np.asarray(values, dtype=np.float64)
    count, k, _ = values.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MKFB_MAGIC, MKFB_VERSION, k, count, 1))
        for layer, channel in provenance:
            fh.write(_META_REC.pack(layer, channel))
        fh.write(values.astype("<f4").tobytes())


def normalize(values: np.ndarray) -> np.ndarray:
    """Center and unit-scale one k x k filter (the toolkit's x-hat)."""
    centered = values - values.mean()
    norm = np.linalg.norm(centered)
    if norm <= EPSILON_ZERO:
        raise ZeroVariance("constant filter cannot be normalized")
    return centered / norm


@dataclass(frozen=True)
class AssignmentRow:
    candidate: int
    a: float
    b: float
    residual: float


def read_assignment(path) -> dict:
    """Assignment CSV as a {(layer, channel): AssignmentRow} mapping."""
    with open(path, newline="") as fh:
        return {
            (int(r["layer"]), int(r["channel"])): AssignmentRow(
                candidate=int(r["candidate"]),
                a=float(r["a"]),
                b=float(r["b"]),
                residual=float(r["residual"]),
            )
            for r in csv.DictReader(fh)
        }


def write_assignment(rows: dict, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["layer", "channel", "candidate", "a", "b", "residual"])
        for (layer, channel), row in sorted(rows.items()):
            writer.writerow(
                [layer, channel, row.candidate, f"{row.a:.9g}",
                 f"{row.b:.9g}", f"{row.residual:.9g}"]
            )
