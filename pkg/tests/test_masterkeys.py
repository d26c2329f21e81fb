import numpy as np
import pytest

from filterdistill.filterbank import load_bank
from filterdistill.linfit import assign_best
from filterdistill.masterkeys import (
    MASTER_COUNT,
    MASTER_K,
    export_masters,
    get_master_bank,
    get_masters,
    verify_masters,
)


class TestGetMasters:
    def test_count_and_size(self):
        masters = get_masters()
        assert len(masters.filters) == MASTER_COUNT == 8
        assert all(f.k == MASTER_K == 7 for f in masters.filters)

    def test_published_spot_values(self):
        masters = get_masters()
        # (filter number, row, col) 1-indexed as printed
        assert masters.filters[6].values[3, 3] == np.float32(0.98)
        assert masters.filters[7].values[3, 3] == np.float32(0.92)
        assert masters.filters[0].values[4, 3] == np.float32(0.94)
        assert masters.filters[1].values[3, 4] == np.float32(0.85)
        assert masters.filters[5].values[4, 3] == np.float32(0.68)

    def test_repeated_calls_identical(self):
        a, b = get_masters(), get_masters()
        for fa, fb in zip(a.filters, b.filters):
            assert fa == fb

    def test_values_immutable(self):
        with pytest.raises(ValueError):
            get_masters().filters[0].values[0, 0] = 9.9


@pytest.fixture(scope="module")
def report():
    return verify_masters()


class TestVerifyMasters:
    def test_near_normalized(self, report):
        rows, _ = report
        for r in rows:
            assert abs(r.mean) <= 0.02
            assert 0.9 <= r.norm <= 1.1

    def test_family_concordance(self, report):
        rows, _ = report
        by_number = {r.number: r for r in rows}
        assert by_number[5].best_family == "gauss_dx"
        assert by_number[6].best_family == "gauss_dy"
        assert by_number[7].best_family in ("dog", "ricker")
        assert by_number[8].best_family == "gaussian"

    def test_count(self, report):
        rows, cosines = report
        assert len(rows) == 8
        assert cosines.shape == (8, 8)

    def test_derivative_pair_less_similar_than_self(self, report):
        _, cosines = report
        # filters 5 and 6 are distinct orientations: far from each other
        assert cosines[4, 5] < cosines[4, 4]
        assert cosines[4, 5] < cosines[5, 5]
        np.testing.assert_allclose(np.diag(cosines), 1.0, atol=1e-12)


class TestExport:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "masters.mkfb"
        export_masters(path)
        assert load_bank(path) == get_master_bank()

    def test_json_export(self, tmp_path):
        path = tmp_path / "masters.json"
        export_masters(path, format="json")
        loaded = load_bank(path, format="json")
        assert len(loaded) == 8
        assert loaded == get_master_bank()

    def test_feeds_assign_best(self, tmp_path):
        path = tmp_path / "masters.mkfb"
        export_masters(path)
        bank = load_bank(path)
        assignment = assign_best(bank, bank)
        for i, fit in enumerate(assignment.entries):
            assert fit.candidate_index == i
            assert fit.residual == pytest.approx(0.0, abs=1e-7)
