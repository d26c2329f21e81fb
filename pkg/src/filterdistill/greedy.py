"""Greedy backward elimination over a candidate filter set.

At each step every single-candidate removal is scored by re-fitting the
target bank against the reduced candidate set and evaluating the objective;
the removal with the highest post-removal objective is committed (ties go to
the lowest candidate index). The intrinsic objective is the negated total
squared assignment residual; an external objective shells out to a
user-supplied evaluator command.

Evaluator subprocess protocol: the command is invoked with two positional
arguments (path to a candidates MKFB file, path to an assignment CSV) and
must print a single decimal number - the objective, higher is better - on
the first line of stdout and exit 0.
"""

from __future__ import annotations

import csv
import shlex
import subprocess
import tempfile
import warnings
from dataclasses import dataclass
from pathlib import Path

from .errors import DegenerateTraceWarning, EmptyCandidates, EvaluatorFailure, IoFailure
from .filterbank import FilterBank, save_bank
from .linfit import assign_best, save_assignment_csv
from .manifold import (
    AutoencoderModel,
    neighborhood_codes,
    sample_around,
    sample_uniform,
    uniform_codes,
)

INTRINSIC_RESIDUAL = "intrinsic_residual"
EXTERNAL_COMMAND = "external_command"


@dataclass(frozen=True)
class Objective:
    kind: str = INTRINSIC_RESIDUAL
    command: str = ""  # external_command only

    def __post_init__(self):
        if self.kind not in (INTRINSIC_RESIDUAL, EXTERNAL_COMMAND):
            raise ValueError(f"unknown objective kind {self.kind!r}")
        if self.kind == EXTERNAL_COMMAND and not self.command:
            raise ValueError("external objective requires a command")

    def evaluate(self, candidates: FilterBank, targets: FilterBank) -> float:
        assignment = assign_best(candidates, targets)
        if self.kind == INTRINSIC_RESIDUAL:
            return -sum(fit.residual**2 for fit in assignment.entries)
        with tempfile.TemporaryDirectory(prefix="fdk-eval-") as tmp:
            cand_path = Path(tmp) / "candidates.mkfb"
            assign_path = Path(tmp) / "assignment.csv"
            save_bank(candidates, cand_path)
            save_assignment_csv(assignment, targets, assign_path)
            argv = shlex.split(self.command) + [str(cand_path), str(assign_path)]
            try:
                proc = subprocess.run(argv, capture_output=True, text=True, timeout=3600)
            except OSError as exc:
                raise EvaluatorFailure(f"cannot launch evaluator: {exc}") from exc
            if proc.returncode != 0:
                raise EvaluatorFailure(
                    f"evaluator exited {proc.returncode}: {proc.stderr.strip()[:200]}"
                )
            first = proc.stdout.splitlines()[0].strip() if proc.stdout else ""
            try:
                return float(first)
            except ValueError as exc:
                raise EvaluatorFailure(
                    f"evaluator output not a number: {first!r}"
                ) from exc


@dataclass(frozen=True)
class GreedyStep:
    removed_candidate_index: int
    remaining_count: int
    objective_value: float  # objective after this removal


@dataclass(frozen=True)
class GreedyTrace:
    steps: tuple
    survivors: tuple  # indices into the original candidate set
    initial_objective: float


def greedy_eliminate(
    targets: FilterBank,
    candidates: FilterBank,
    objective: Objective,
    stop_at: int = 1,
) -> GreedyTrace:
    if len(candidates) == 0:
        raise EmptyCandidates("no candidates to eliminate from")
    if not 1 <= stop_at <= len(candidates):
        raise ValueError(f"stop_at must be in [1, {len(candidates)}]")
    remaining = list(range(len(candidates)))
    initial = objective.evaluate(candidates, targets)
    steps = []
    while len(remaining) > stop_at:
        best_idx = None
        best_val = None
        for idx in remaining:
            reduced = candidates.subset([i for i in remaining if i != idx])
            val = objective.evaluate(reduced, targets)
            if best_val is None or val > best_val:
                best_val = val
                best_idx = idx
        remaining.remove(best_idx)
        steps.append(
            GreedyStep(
                removed_candidate_index=best_idx,
                remaining_count=len(remaining),
                objective_value=best_val,
            )
        )
    return GreedyTrace(
        steps=tuple(steps), survivors=tuple(remaining), initial_objective=initial
    )


def two_round_search(
    targets: FilterBank,
    model: AutoencoderModel,
    round1_n: int,
    keep_top: int,
    per_center: int,
    objective: Objective,
    stop_at: int,
    delta: float = None,
):
    """Uniform sampling + greedy, then local expansion + a second greedy round.

    Returns (round1 trace, round2 trace, survivor FilterBank). The round-2
    pool is the round-1 survivors followed by the decoded neighborhood
    samples; delta defaults to half a round-1 grid cell.
    """
    if not 1 <= keep_top <= round1_n:
        raise ValueError("keep_top must be in [1, round1_n]")
    if delta is None:
        delta = 1.0 / (2 * (round1_n - 1))
    pool1 = sample_uniform(model, round1_n)
    trace1 = greedy_eliminate(targets, pool1, objective, stop_at=keep_top)
    codes1 = uniform_codes(round1_n)
    survivor_codes = [codes1[i] for i in sorted(trace1.survivors)]
    survivor_filters = [pool1[i].filter for i in sorted(trace1.survivors)]
    neighbors = sample_around(model, survivor_codes, per_center, delta)
    pool2 = FilterBank.from_filters(
        survivor_filters + [e.filter for e in neighbors], k=model.k
    )
    trace2 = greedy_eliminate(targets, pool2, objective, stop_at=stop_at)
    final = pool2.subset(sorted(trace2.survivors))
    return trace1, trace2, final


def elbow_index(trace: GreedyTrace, drop_fraction: float = 0.01) -> int:
    """Remaining-count just above the first below-threshold objective.

    Threshold is initial - drop_fraction * |initial - final|. A flat curve
    has no elbow: a DegenerateTraceWarning is issued and the final
    remaining-count is returned.
    """
    if not trace.steps:
        raise ValueError("empty trace")
    if not 0.0 < drop_fraction < 1.0:
        raise ValueError("drop_fraction must be in (0, 1)")
    final = trace.steps[-1].objective_value
    span = abs(trace.initial_objective - final)
    if span == 0.0:
        warnings.warn(
            "objective curve is flat; no elbow", DegenerateTraceWarning, stacklevel=2
        )
        return trace.steps[-1].remaining_count
    threshold = trace.initial_objective - drop_fraction * span
    for step in trace.steps:
        if step.objective_value < threshold:
            return step.remaining_count + 1
    return trace.steps[-1].remaining_count


# -- trace CSV (header: step,removed_candidate,remaining_count,objective) ----

def save_trace_csv(trace: GreedyTrace, path) -> None:
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "removed_candidate", "remaining_count", "objective"])
            writer.writerow([0, "", len(trace.steps) + len(trace.survivors),
                             f"{trace.initial_objective:.9g}"])
            for i, step in enumerate(trace.steps, start=1):
                writer.writerow(
                    [
                        i,
                        step.removed_candidate_index,
                        step.remaining_count,
                        f"{step.objective_value:.9g}",
                    ]
                )
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_trace_csv(path) -> GreedyTrace:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise IoFailure(f"{path}: empty trace file")
    initial = float(rows[0]["objective"])
    total = int(rows[0]["remaining_count"])
    steps = tuple(
        GreedyStep(
            removed_candidate_index=int(r["removed_candidate"]),
            remaining_count=int(r["remaining_count"]),
            objective_value=float(r["objective"]),
        )
        for r in rows[1:]
    )
    removed = {s.removed_candidate_index for s in steps}
    survivors = tuple(i for i in range(total) if i not in removed)
    return GreedyTrace(steps=steps, survivors=survivors, initial_objective=initial)
