"""Closed-form linear-shift regression of target filters onto candidates.

For a candidate x and target y the best a, b minimizing ||y - (a*xhat + b)||
collapse, once the candidate is centered and scaled to unit norm (xhat), to

    a = <xhat, y>        b = mean(y)

and the attained minimum satisfies residual^2 = ||y - mean(y)||^2 - a^2.
The batched form computes every (candidate, target) pair with one matrix
product instead of materializing P*C reconstructions.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    CoverageGap,
    EmptyCandidates,
    HashMismatch,
    IndexOutOfRange,
    IoFailure,
    KMismatch,
    ZeroVariance,
)
from .filterbank import BankEntry, Filter, FilterBank
from .normalize import normalize_filter, normalize_values


@dataclass(frozen=True)
class LinearShiftFit:
    candidate_index: int
    a: float
    b: float
    residual: float


@dataclass(frozen=True)
class Assignment:
    entries: tuple  # one LinearShiftFit per bank entry, bank order
    candidate_set_id: str  # content hash of the candidate bank
    target_bank_id: str = ""  # content hash of the fitted bank, "" if unknown

    def __len__(self):
        return len(self.entries)


class BatchFit(NamedTuple):
    """P x C arrays of scale, offset and residual per (candidate, target)."""

    a: np.ndarray
    b: np.ndarray
    residual: np.ndarray


def fit_pair(candidate: Filter, target: Filter) -> LinearShiftFit:
    if candidate.k != target.k:
        raise KMismatch(f"candidate k={candidate.k} vs target k={target.k}")
    xhat = normalize_filter(candidate).flat()
    y = target.flat()
    b = float(np.mean(y))
    a = float(xhat @ y)
    centered_sq = float(np.sum((y - b) ** 2))
    residual = float(np.sqrt(max(centered_sq - a * a, 0.0)))
    return LinearShiftFit(candidate_index=0, a=a, b=b, residual=residual)


def _normalized_candidate_matrix(candidates: FilterBank) -> np.ndarray:
    rows = []
    for i, entry in enumerate(candidates):
        try:
            norm, _, _ = normalize_values(entry.filter.values)
        except ZeroVariance as exc:
            raise ZeroVariance(f"candidate {i} is constant") from exc
        rows.append(norm.reshape(-1))
    return np.stack(rows)


def fit_batched(candidates: FilterBank, targets: FilterBank) -> BatchFit:
    if candidates.k != targets.k:
        raise KMismatch(f"candidates k={candidates.k} vs targets k={targets.k}")
    if len(candidates) == 0:
        raise EmptyCandidates("no candidates to fit against")
    xhat = _normalized_candidate_matrix(candidates)  # (P, k^2)
    y = targets.matrix().T  # (k^2, C)
    a = xhat @ y  # (P, C)
    ymean = np.mean(y, axis=0)  # (C,)
    centered_sq = np.sum((y - ymean) ** 2, axis=0)  # (C,)
    residual = np.sqrt(np.maximum(centered_sq[None, :] - a * a, 0.0))
    b = np.broadcast_to(ymean, a.shape).copy()
    return BatchFit(a=a, b=b, residual=residual)


def assign_best(candidates: FilterBank, targets: FilterBank) -> Assignment:
    fits = fit_batched(candidates, targets)
    # argmin over candidates; np.argmin takes the first (lowest index) on ties
    best = np.argmin(fits.residual, axis=0)
    entries = tuple(
        LinearShiftFit(
            candidate_index=int(p),
            a=float(fits.a[p, c]),
            b=float(fits.b[p, c]),
            residual=float(fits.residual[p, c]),
        )
        for c, p in enumerate(best)
    )
    return Assignment(
        entries=entries,
        candidate_set_id=candidates.content_hash(),
        target_bank_id=targets.content_hash(),
    )


def replace_bank(
    bank: FilterBank, candidates: FilterBank, assignment: Assignment
) -> FilterBank:
    if assignment.candidate_set_id != candidates.content_hash():
        raise HashMismatch("assignment was fitted against different candidates")
    if assignment.target_bank_id and assignment.target_bank_id != bank.content_hash():
        raise HashMismatch("assignment was fitted against a different bank")
    if len(assignment) != len(bank):
        raise HashMismatch(
            f"assignment has {len(assignment)} entries, bank has {len(bank)}"
        )
    xhat = _normalized_candidate_matrix(candidates)
    entries = []
    for bank_entry, fit in zip(bank, assignment.entries):
        if not 0 <= fit.candidate_index < len(candidates):
            raise IndexOutOfRange(f"candidate index {fit.candidate_index}")
        values = fit.a * xhat[fit.candidate_index] + fit.b
        entries.append(
            BankEntry(
                bank_entry.layer_index,
                bank_entry.channel_index,
                Filter(values.reshape(bank.k, bank.k)),
            )
        )
    return FilterBank(bank.k, entries)


def coverage(assignment: Assignment, threshold: float) -> float:
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    if len(assignment) == 0:
        return 1.0
    hits = sum(1 for fit in assignment.entries if fit.residual <= threshold)
    return hits / len(assignment)


# -- assignment CSV (header: layer,channel,candidate,a,b,residual) ----------

def save_assignment_csv(assignment: Assignment, bank: FilterBank, path) -> None:
    if len(assignment) != len(bank):
        raise HashMismatch("assignment/bank length mismatch")
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["layer", "channel", "candidate", "a", "b", "residual"])
            for entry, fit in zip(bank, assignment.entries):
                writer.writerow(
                    [
                        entry.layer_index,
                        entry.channel_index,
                        fit.candidate_index,
                        f"{fit.a:.9g}",
                        f"{fit.b:.9g}",
                        f"{fit.residual:.9g}",
                    ]
                )
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_assignment_csv(path, bank: FilterBank, candidates: FilterBank) -> Assignment:
    """Rebind a CSV assignment to the given banks.

    Rows must cover exactly the bank's (layer, channel) set; the candidate
    hash is recomputed from the provided candidate bank.
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    by_key = {}
    for row in rows:
        key = (int(row["layer"]), int(row["channel"]))
        if key in by_key:
            raise CoverageGap(f"duplicate assignment row for {key}")
        by_key[key] = LinearShiftFit(
            candidate_index=int(row["candidate"]),
            a=float(row["a"]),
            b=float(row["b"]),
            residual=float(row["residual"]),
        )
    entries = []
    for entry in bank:
        key = (entry.layer_index, entry.channel_index)
        if key not in by_key:
            raise CoverageGap(f"no assignment row for bank entry {key}")
        entries.append(by_key.pop(key))
    if by_key:
        raise CoverageGap(f"{len(by_key)} assignment rows match no bank entry")
    return Assignment(
        entries=tuple(entries),
        candidate_set_id=candidates.content_hash(),
        target_bank_id=bank.content_hash(),
    )
