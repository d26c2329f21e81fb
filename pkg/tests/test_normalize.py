import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from filterdistill.errors import ZeroVariance
from filterdistill.filterbank import BankEntry, Filter, FilterBank
from filterdistill.normalize import normalize_bank, normalize_filter

from conftest import random_filter


def test_diagonal_example():
    # the +1/-1 diagonal pattern: already zero-mean, centered norm sqrt(2)
    f = Filter(np.array([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 0.0]]))
    nf = normalize_filter(f)
    assert nf.original_mean == pytest.approx(0.0)
    assert nf.original_norm == pytest.approx(np.sqrt(2))
    assert nf.values[0, 0] == pytest.approx(1 / np.sqrt(2))


def test_invariants(rng):
    nf = normalize_filter(random_filter(rng))
    assert abs(nf.values.sum()) < 1e-9
    assert np.linalg.norm(nf.values) == pytest.approx(1.0, abs=1e-9)


def test_constant_filter_rejected():
    with pytest.raises(ZeroVariance):
        normalize_filter(Filter(np.full((7, 7), 3.0)))


def test_idempotence(rng):
    f = random_filter(rng)
    once = normalize_filter(f)
    twice = normalize_filter(Filter(once.values))
    np.testing.assert_allclose(twice.values, once.values, atol=1e-12)


def test_reconstruction(rng):
    f = random_filter(rng)
    nf = normalize_filter(f)
    np.testing.assert_allclose(nf.reconstruct(), f.values, atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(
    st.integers(0, 2**32 - 1),
    st.floats(-5, 5).filter(lambda a: abs(a) > 1e-3),
    st.floats(-10, 10),
)
def test_affine_invariance(seed, alpha, beta):
    f = random_filter(np.random.default_rng(seed))
    base = normalize_filter(f)
    shifted = normalize_filter(Filter(alpha * f.values + beta))
    np.testing.assert_allclose(
        shifted.values, np.sign(alpha) * base.values, atol=1e-9
    )


def test_bank_with_constant_filter(rng):
    entries = [
        BankEntry(0, 0, random_filter(rng)),
        BankEntry(0, 1, Filter(np.full((7, 7), 2.0))),
        BankEntry(0, 2, random_filter(rng)),
    ]
    normed, rejected = normalize_bank(FilterBank(7, entries))
    assert len(normed) == 2
    assert rejected == [1]


def test_empty_bank():
    normed, rejected = normalize_bank(FilterBank(7, []))
    assert normed == [] and rejected == []


def test_masters_all_normalizable():
    from filterdistill.masterkeys import get_master_bank

    normed, rejected = normalize_bank(get_master_bank())
    assert len(normed) == 8
    assert rejected == []
