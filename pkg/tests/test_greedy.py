import itertools
import os
import stat
import sys
import textwrap

import numpy as np
import pytest

from filterdistill.errors import (
    DegenerateTraceWarning,
    EmptyCandidates,
    EvaluatorFailure,
)
from filterdistill.filterbank import BankEntry, Filter, FilterBank
from filterdistill.greedy import (
    EXTERNAL_COMMAND,
    INTRINSIC_RESIDUAL,
    GreedyStep,
    GreedyTrace,
    Objective,
    elbow_index,
    greedy_eliminate,
    load_trace_csv,
    save_trace_csv,
    two_round_search,
)
from filterdistill.linfit import assign_best
from filterdistill.masterkeys import get_master_bank
from filterdistill.normalize import normalize_filter

from conftest import random_bank, random_filter


def orthogonal_generators(count=3, k=7, seed=5):
    """Centered, mutually orthogonal unit filters."""
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(k * k, count + 1))
    m[:, 0] = 1.0  # force the constant direction into the basis, then drop it
    q, _ = np.linalg.qr(m)
    return [Filter(q[:, i + 1].reshape(k, k)) for i in range(count)]


def shifts_bank(generators, per_gen, rng, noise=0.01):
    entries = []
    for i in range(per_gen * len(generators)):
        g = normalize_filter(generators[i % len(generators)]).values
        v = (
            rng.uniform(0.5, 2.0) * g
            + rng.uniform(-0.2, 0.2)
            + rng.normal(scale=noise, size=g.shape)
        )
        entries.append(BankEntry(0, i, Filter(v)))
    return FilterBank(generators[0].k, entries)


def total_sq_residual(candidates, targets):
    return sum(f.residual**2 for f in assign_best(candidates, targets).entries)


class TestGreedyEliminate:
    def test_exact_span_single_candidate(self, rng):
        x = normalize_filter(random_filter(rng))
        cand = FilterBank.from_filters([Filter(x.values)])
        targets = FilterBank.from_filters(
            [Filter(2 * x.values + 3), Filter(-1 * x.values + 1)]
        )
        trace = greedy_eliminate(targets, cand, Objective(), stop_at=1)
        assert trace.steps == ()
        assert trace.survivors == (0,)
        assert trace.initial_objective == pytest.approx(0.0, abs=1e-10)

    def test_decoys_removed_first_and_survivors_optimal(self, rng):
        gens = orthogonal_generators(3)
        targets = shifts_bank(gens, 10, rng)
        decoys = [random_filter(rng) for _ in range(2)]
        candidates = FilterBank.from_filters(gens + decoys)
        trace = greedy_eliminate(targets, candidates, Objective(), stop_at=3)
        removed = [s.removed_candidate_index for s in trace.steps]
        assert sorted(removed) == [3, 4]
        assert sorted(trace.survivors) == [0, 1, 2]
        # exhaustive oracle: greedy survivors are the best 3-subset
        best_subset = min(
            itertools.combinations(range(5), 3),
            key=lambda idx: total_sq_residual(candidates.subset(idx), targets),
        )
        assert sorted(trace.survivors) == sorted(best_subset)

    def test_empty_candidates(self, rng):
        with pytest.raises(EmptyCandidates):
            greedy_eliminate(random_bank(rng, 3), FilterBank(7, []), Objective())

    def test_intrinsic_curve_monotone(self, rng):
        candidates = random_bank(rng, 8)
        targets = random_bank(rng, 40)
        trace = greedy_eliminate(targets, candidates, Objective(), stop_at=1)
        values = [trace.initial_objective] + [s.objective_value for s in trace.steps]
        assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))

    def test_trace_replay(self, rng):
        candidates = random_bank(rng, 6)
        targets = random_bank(rng, 30)
        trace = greedy_eliminate(targets, candidates, Objective(), stop_at=1)
        remaining = list(range(6))
        for step in trace.steps:
            remaining.remove(step.removed_candidate_index)
            replayed = -total_sq_residual(candidates.subset(remaining), targets)
            assert replayed == pytest.approx(step.objective_value, abs=1e-9)

    def test_remaining_count_decrements(self, rng):
        candidates = random_bank(rng, 5)
        targets = random_bank(rng, 10)
        trace = greedy_eliminate(targets, candidates, Objective(), stop_at=2)
        assert [s.remaining_count for s in trace.steps] == [4, 3, 2]


class TestExternalObjective:
    def _script(self, tmp_path, body):
        path = tmp_path / "evaluator.py"
        path.write_text(
            "#!/usr/bin/env python3\n" + textwrap.dedent(body)
        )
        path.chmod(path.stat().st_mode | stat.S_IXUSR)
        return f"{sys.executable} {path}"

    def test_distinct_candidate_count_objective(self, rng, tmp_path):
        # mock evaluator: -(number of distinct candidates actually used).
        # Candidate 0 is a decoy no target is assigned to; every removal ties
        # at -3, so the documented tie-break removes the zero-use decoy first.
        cmd = self._script(
            tmp_path,
            """
            import csv, sys
            with open(sys.argv[2]) as fh:
                used = {row["candidate"] for row in csv.DictReader(fh)}
            print(-len(used))
            """,
        )
        gens = orthogonal_generators(4)
        decoy, gens = gens[0], gens[1:]
        entries = []
        for i in range(30):
            # targets lean slightly toward the decoy so that removing their
            # generator folds them onto it, keeping the used-count at 3
            g = normalize_filter(gens[i % 3]).values
            v = rng.uniform(0.8, 1.2) * g + 0.1 * decoy.values
            entries.append(BankEntry(0, i, Filter(v)))
        targets = FilterBank(7, entries)
        candidates = FilterBank.from_filters([decoy] + gens)
        objective = Objective(EXTERNAL_COMMAND, cmd)
        trace = greedy_eliminate(targets, candidates, objective, stop_at=3)
        assert trace.initial_objective == -3.0  # decoy never wins a target
        assert trace.steps[0].removed_candidate_index == 0
        assert sorted(trace.survivors) == [1, 2, 3]

    def test_nonzero_exit(self, rng, tmp_path):
        cmd = self._script(tmp_path, "import sys; sys.exit(3)")
        with pytest.raises(EvaluatorFailure):
            Objective(EXTERNAL_COMMAND, cmd).evaluate(
                random_bank(rng, 2), random_bank(rng, 3)
            )

    def test_unparsable_output(self, rng, tmp_path):
        cmd = self._script(tmp_path, "print('not a number')")
        with pytest.raises(EvaluatorFailure):
            Objective(EXTERNAL_COMMAND, cmd).evaluate(
                random_bank(rng, 2), random_bank(rng, 3)
            )


class TestElbow:
    def _trace(self, values, total):
        steps = tuple(
            GreedyStep(i, total - 1 - i, v) for i, v in enumerate(values[1:])
        )
        return GreedyTrace(steps=steps, survivors=(), initial_objective=values[0])

    def test_flat_curve_degenerate(self):
        trace = self._trace([-1.0, -1.0, -1.0, -1.0], total=4)
        with pytest.warns(DegenerateTraceWarning):
            assert elbow_index(trace) == trace.steps[-1].remaining_count

    def test_step_curve(self):
        # drop happens when the count goes below 3
        values = [0.0, 0.0, 0.0, 0.0, -10.0, -10.0]
        trace = self._trace(values, total=6)
        for frac in (0.05, 0.5, 0.9):
            assert elbow_index(trace, frac) == 3

    def test_masters_plus_decoys_elbow_at_8(self, rng):
        masters = get_master_bank()
        targets = shifts_bank([e.filter for e in masters], 30, rng)
        decoys = [random_filter(rng) for _ in range(12)]
        candidates = FilterBank.from_filters(
            [e.filter for e in masters] + decoys
        )
        trace = greedy_eliminate(targets, candidates, Objective(), stop_at=1)
        assert elbow_index(trace) == 8


@pytest.fixture(scope="module")
def model():
    import test_manifold

    from filterdistill.manifold import TrainConfig, train_autoencoder

    trained, _ = train_autoencoder(
        test_manifold.generator_bank(),
        TrainConfig(epochs=500, seed=42, learning_rate=0.2, batch_size=64),
    )
    return trained


class TestTwoRoundSearch:
    def test_keep_all_removes_nothing(self, model, rng):
        gens = orthogonal_generators(3)
        targets = shifts_bank(gens, 5, rng)
        trace1, trace2, final = two_round_search(
            targets, model, round1_n=6, keep_top=6, per_center=2,
            objective=Objective(), stop_at=3,
        )
        assert trace1.steps == ()
        assert len(trace1.survivors) == 6

    def test_generators_recovered(self, rng):
        import test_manifold

        from filterdistill.manifold import TrainConfig, train_autoencoder
        from filterdistill.linfit import fit_pair

        data = test_manifold.generator_bank()
        model, _ = train_autoencoder(
            data, TrainConfig(epochs=1000, seed=42, learning_rate=0.2, batch_size=64)
        )
        targets = FilterBank.from_filters([Filter(f.values) for f in data[:60]])
        _, _, final = two_round_search(
            targets, model, round1_n=10, keep_top=6, per_center=4,
            objective=Objective(), stop_at=3,
        )
        assert len(final) == 3
        # each surviving decoded filter lies close to the span of one target
        for entry in final:
            best = min(
                fit_pair(entry.filter, t.filter).residual for t in targets
            )
            assert best <= 0.05
