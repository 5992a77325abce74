import numpy as np
import pytest

from app.core.config import settings
from app.core.exceptions import DegenerateNormError
from app.services.search_service import RatioSearch, block_rng, stream_id, unit_rows


def quadratic_ratio(X):
    """x_0^2 + 2 x_1^2 on the unit sphere, maximised at ±e_1 with value 2"""
    return X[:, 0] ** 2 + 2.0 * X[:, 1] ** 2, np.zeros(X.shape[0], dtype=np.int64)


def test_block_streams_are_independent_and_reproducible():
    a = block_rng(0, "direction", 0).random(4)
    assert np.array_equal(a, block_rng(0, "direction", 0).random(4))
    assert not np.array_equal(a, block_rng(0, "direction", 1).random(4))
    assert not np.array_equal(a, block_rng(0, "monotone", 0).random(4))
    assert stream_id("direction") == stream_id("direction")


def test_unit_rows_keeps_zero_rows():
    X = unit_rows(np.array([[3.0, 4.0], [0.0, 0.0]]))
    assert X.tolist() == [[0.6, 0.8], [0.0, 0.0]]


def test_search_finds_maximum():
    result = RatioSearch(quadratic_ratio, 2, "test", budget=500, seed=0).run()
    assert result.value == pytest.approx(2.0, abs=1e-9)
    assert abs(result.x[1]) == pytest.approx(1.0, abs=1e-4)
    assert result.candidates == 1000


def test_budget_rounds_up_to_blocks():
    search = RatioSearch(quadratic_ratio, 2, "test", budget=1001)
    assert search.blocks == 2


def test_seeds_are_scored_first():
    def objective(X):
        return np.where(np.all(X == [0.0, 1.0], axis=1), 10.0, 0.0), np.zeros(X.shape[0], dtype=np.int64)

    result = RatioSearch(objective, 2, "test", budget=10, refine_steps=0, seeds=[[0.0, 5.0]]).run()
    assert result.value == 10.0
    assert result.x.tolist() == [0.0, 1.0]


def test_parallel_equals_serial():
    serial = RatioSearch(quadratic_ratio, 3, "test", budget=4000, seed=5, jobs=1).run()
    parallel = RatioSearch(quadratic_ratio, 3, "test", budget=4000, seed=5, jobs=4).run()
    assert serial.value == parallel.value
    assert np.array_equal(serial.x, parallel.x)


def test_larger_budget_never_decreases():
    def bumpy(X):
        return np.sin(7 * X[:, 0]) * np.cos(5 * X[:, 1]) + X[:, 2], np.zeros(X.shape[0], dtype=np.int64)

    values = [RatioSearch(bumpy, 3, "test", budget=b, seed=2, refine_steps=5).run().value for b in (1000, 2000, 4000)]
    assert values == sorted(values)


def test_no_finite_candidate_is_degenerate():
    def nowhere(X):
        return np.full(X.shape[0], -np.inf), np.zeros(X.shape[0], dtype=np.int64)

    with pytest.raises(DegenerateNormError):
        RatioSearch(nowhere, 2, "test", budget=10).run()


def test_refinement_is_capped_by_row_cost(mocker):
    mocker.patch.object(settings, "refine_work_cap", 64)
    search = RatioSearch(quadratic_ratio, 2, "test", budget=10, refine_steps=50, row_cost=4)
    assert search.step_limit == 4
    assert search.run().refine_steps <= 4


def test_refinement_always_gets_one_step(mocker):
    mocker.patch.object(settings, "refine_work_cap", 1)
    assert RatioSearch(quadratic_ratio, 2, "test", row_cost=1 << 20).step_limit == 1
    assert RatioSearch(quadratic_ratio, 2, "test", refine_steps=0, row_cost=1 << 20).step_limit == 0
