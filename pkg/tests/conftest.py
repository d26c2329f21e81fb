import numpy as np
import pytest

from filterdistill.filterbank import BankEntry, Filter, FilterBank


def f32(values):
    """Round values to float32 so banks survive disk round-trips bitwise."""
    return np.asarray(values, dtype=np.float32).astype(np.float64)


def random_filter(rng, k=7):
    return Filter(f32(rng.normal(size=(k, k))))


def random_bank(rng, count, k=7):
    return FilterBank(
        k, [BankEntry(i // 16, i % 16, random_filter(rng, k)) for i in range(count)]
    )


@pytest.fixture
def rng():
    return np.random.default_rng(42)
