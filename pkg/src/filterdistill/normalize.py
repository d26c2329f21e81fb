"""Filter normalization: subtract the mean, scale to unit Euclidean length.

The transform is idempotent and invertible; the original mean and centered
norm are kept alongside the normalized values so that
``original_norm * values + original_mean`` reconstructs the input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ZeroVariance
from .filterbank import Filter, FilterBank

EPSILON_ZERO = 1e-12


@dataclass(frozen=True)
class NormalizedFilter:
    values: np.ndarray  # k x k, zero mean, unit Euclidean norm
    original_mean: float
    original_norm: float

    @property
    def k(self) -> int:
        return self.values.shape[0]

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def reconstruct(self) -> np.ndarray:
        return self.original_norm * self.values + self.original_mean


def normalize_values(values: np.ndarray, epsilon_zero: float = EPSILON_ZERO):
    """Normalize a raw array; returns (normalized, mean, centered_norm)."""
    v = np.asarray(values, dtype=np.float64)
    mean = float(np.mean(v))
    centered = v - mean
    norm = float(np.linalg.norm(centered))
    if norm <= epsilon_zero:
        raise ZeroVariance(f"constant filter (centered norm {norm:.3e})")
    return centered / norm, mean, norm


def normalize_filter(f: Filter, epsilon_zero: float = EPSILON_ZERO) -> NormalizedFilter:
    values, mean, norm = normalize_values(f.values, epsilon_zero)
    values.setflags(write=False)
    return NormalizedFilter(values=values, original_mean=mean, original_norm=norm)


def normalize_bank(bank: FilterBank, epsilon_zero: float = EPSILON_ZERO):
    """Normalize every filter in order; constant filters are reported, not dropped.

    Returns (normalized_filters, rejected_indices) where rejected_indices are
    positions in the bank whose filters were constant.
    """
    normalized = []
    rejected = []
    for i, entry in enumerate(bank):
        try:
            normalized.append(normalize_filter(entry.filter, epsilon_zero))
        except ZeroVariance:
            rejected.append(i)
    return normalized, rejected
