"""The bundled set of 8 universal 7x7 depthwise filters.

Values are embedded exactly as published, at 2-decimal precision, stored as
float32-representable constants. Filters are numbered 1..8 in docs and
exported with provenance (layer 0, channel = number - 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import analytic
from .filterbank import BankEntry, Filter, FilterBank, _f32_exact, save_bank

_MASTER_VALUES = (
    # Filter 1
    (
        (-0.01, -0.02, -0.01, -0.00, -0.01, -0.02, -0.01),
        (-0.02, -0.02, -0.00, 0.00, -0.01, -0.02, -0.01),
        (-0.01, -0.02, 0.01, -0.11, -0.00, -0.01, -0.01),
        (-0.03, -0.05, -0.09, -0.23, -0.06, -0.05, -0.03),
        (-0.03, -0.06, 0.02, 0.94, 0.04, -0.06, -0.03),
        (-0.02, -0.02, 0.00, 0.12, 0.01, -0.02, -0.02),
        (-0.02, -0.02, 0.01, 0.09, 0.00, -0.02, -0.02),
    ),
    # Filter 2
    (
        (-0.00, -0.01, -0.02, -0.05, -0.04, -0.02, -0.00),
        (-0.02, -0.02, -0.02, -0.04, -0.03, -0.02, -0.03),
        (-0.02, -0.00, -0.01, -0.06, 0.06, -0.01, -0.01),
        (0.00, 0.04, -0.06, -0.46, 0.85, 0.13, 0.07),
        (0.00, 0.01, 0.01, -0.12, 0.07, 0.02, 0.01),
        (-0.01, -0.01, -0.01, -0.05, -0.03, -0.01, -0.01),
        (0.00, -0.01, -0.01, -0.04, 0.00, -0.01, 0.00),
    ),
    # Filter 3
    (
        (-0.03, -0.02, -0.02, 0.07, -0.02, -0.03, -0.03),
        (-0.03, -0.02, 0.01, 0.14, 0.01, -0.02, -0.03),
        (-0.03, -0.04, 0.10, 0.88, 0.11, -0.05, -0.04),
        (-0.02, -0.02, -0.08, -0.36, -0.09, -0.03, -0.03),
        (-0.02, -0.00, -0.05, -0.14, -0.05, -0.01, -0.02),
        (-0.01, -0.01, 0.01, 0.01, 0.00, -0.01, -0.01),
        (-0.01, 0.00, 0.00, 0.01, 0.01, 0.00, -0.00),
    ),
    # Filter 4
    (
        (-0.04, -0.03, -0.02, -0.01, 0.00, -0.00, -0.01),
        (-0.04, -0.01, -0.04, -0.01, 0.03, 0.01, -0.01),
        (-0.01, 0.00, 0.03, -0.05, 0.00, 0.02, 0.01),
        (0.04, 0.08, 0.87, -0.35, -0.30, -0.00, -0.00),
        (-0.02, 0.00, 0.05, -0.01, -0.05, -0.00, -0.00),
        (-0.03, -0.01, -0.01, 0.00, 0.00, 0.00, -0.02),
        (-0.04, -0.02, -0.01, -0.01, -0.00, -0.00, -0.00),
    ),
    # Filter 5
    (
        (0.05, 0.02, 0.04, 0.01, -0.04, -0.02, -0.07),
        (0.04, 0.03, 0.05, 0.02, -0.02, -0.01, -0.07),
        (0.10, 0.09, 0.19, 0.02, -0.17, -0.06, -0.09),
        (0.20, 0.20, 0.54, -0.03, -0.53, -0.20, -0.22),
        (0.09, 0.08, 0.19, 0.01, -0.22, -0.09, -0.11),
        (0.04, 0.03, 0.07, 0.01, -0.04, -0.02, -0.07),
        (0.05, 0.02, 0.05, -0.00, -0.04, -0.03, -0.07),
    ),
    # Filter 6
    (
        (-0.07, -0.05, -0.08, -0.16, -0.07, -0.04, -0.06),
        (-0.03, -0.01, -0.06, -0.14, -0.04, 0.00, -0.03),
        (-0.03, -0.04, -0.22, -0.47, -0.22, -0.03, -0.04),
        (-0.01, -0.01, 0.01, 0.02, 0.01, -0.00, 0.00),
        (0.02, 0.03, 0.20, 0.68, 0.20, 0.02, 0.03),
        (-0.00, 0.02, 0.06, 0.16, 0.05, 0.01, 0.01),
        (0.02, 0.03, 0.05, 0.14, 0.06, 0.03, 0.04),
    ),
    # Filter 7
    (
        (-0.01, -0.01, -0.01, -0.02, -0.02, -0.00, -0.01),
        (-0.01, -0.00, -0.02, -0.05, -0.01, -0.00, -0.01),
        (-0.01, -0.01, -0.04, -0.06, -0.05, -0.01, -0.01),
        (-0.01, -0.03, -0.01, 0.98, -0.02, -0.04, -0.02),
        (-0.01, -0.01, -0.05, -0.07, -0.06, -0.02, -0.02),
        (-0.01, -0.01, -0.01, -0.05, -0.01, -0.00, -0.01),
        (-0.01, -0.01, -0.02, -0.03, -0.02, -0.01, -0.01),
    ),
    # Filter 8
    (
        (-0.04, -0.04, -0.04, -0.02, -0.04, -0.03, -0.04),
        (-0.04, -0.03, -0.04, -0.04, -0.04, -0.03, -0.04),
        (-0.04, -0.04, -0.02, 0.16, -0.01, -0.04, -0.04),
        (-0.02, -0.04, 0.16, 0.92, 0.15, -0.04, -0.02),
        (-0.04, -0.05, -0.03, 0.15, -0.03, -0.05, -0.04),
        (-0.04, -0.03, -0.04, -0.04, -0.04, -0.03, -0.04),
        (-0.04, -0.04, -0.04, -0.02, -0.04, -0.03, -0.04),
    ),
)

MASTER_COUNT = 8
MASTER_K = 7


@dataclass(frozen=True)
class MasterSet:
    filters: tuple  # 8 Filters, position i holds filter number i+1

    def bank(self) -> FilterBank:
        return FilterBank(
            MASTER_K,
            [BankEntry(0, i, f) for i, f in enumerate(self.filters)],
        )


def get_masters() -> MasterSet:
    return MasterSet(
        filters=tuple(
            Filter(_f32_exact(np.array(vals, dtype=np.float64)))
            for vals in _MASTER_VALUES
        )
    )


def get_master_bank() -> FilterBank:
    return get_masters().bank()


@dataclass(frozen=True)
class MasterReportRow:
    number: int  # 1-based
    mean: float
    norm: float
    best_family: str
    similarity: float


def verify_masters():
    """Empirical report: per-filter mean/norm, best analytic family, and the
    8x8 matrix of pairwise absolute centered cosine similarities."""
    bank = get_master_bank()
    rows = []
    family = analytic.master_report(bank)
    for (i, best, fits), entry in zip(family, bank):
        flat = entry.filter.flat()
        rows.append(
            MasterReportRow(
                number=i + 1,
                mean=float(np.mean(flat)),
                norm=float(np.linalg.norm(flat)),
                best_family=best,
                similarity=fits[best].similarity,
            )
        )
    m = bank.matrix()
    centered = m - m.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(centered, axis=1)
    cosines = np.abs(centered @ centered.T) / np.outer(norms, norms)
    return rows, cosines


def export_masters(path, format: str = "binary") -> None:
    save_bank(get_master_bank(), path, format=format)
