import math

import numpy as np
import pytest

from randquad.summation import NeumaierSum, compensated_cumsum, compensated_sum


def test_recovers_cancellation_kahan_misses():
    # Classic case where plain Kahan loses the small term entirely.
    values = [1.0, 1e100, 1.0, -1e100]
    assert compensated_sum(values) == 2.0


def test_matches_fsum_on_mixed_magnitudes():
    rng = np.random.default_rng(42)
    for _ in range(50):
        values = (rng.standard_normal(500) * 10.0 ** rng.integers(-12, 12, size=500)).tolist()
        assert compensated_sum(values) == pytest.approx(math.fsum(values), rel=1e-15, abs=1e-300)


def test_cumsum_prefixes_equal_independent_sums():
    rng = np.random.default_rng(7)
    values = rng.standard_normal(200).tolist()
    partials = compensated_cumsum(values)
    for k in (1, 17, 199, 200):
        assert partials[k - 1] == compensated_sum(values[:k])


def test_cumsum_last_is_sum_bitwise():
    rng = np.random.default_rng(3)
    values = (rng.standard_normal(1000) * 10.0 ** rng.integers(-8, 8, size=1000)).tolist()
    assert compensated_cumsum(values)[-1] == compensated_sum(values)


def test_accumulator_is_incremental():
    acc = NeumaierSum()
    for x in (0.1, 0.2, 0.3):
        acc.add(x)
    assert acc.value == compensated_sum([0.1, 0.2, 0.3])
