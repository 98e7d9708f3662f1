import numpy as np
import pytest

from src.models.step_function import StepFunction, step_eval


def test_value_below_first_jump_is_zero():
    f = StepFunction([1.0, 2.0], [0.5, 0.3])
    assert step_eval(f, 0.5) == 0.0


def test_right_continuous_at_jump():
    f = StepFunction([1.0, 2.0], [0.5, 0.3])
    assert step_eval(f, 1.0) == 0.5
    assert step_eval(f, 1.999) == 0.5


def test_sum_of_all_jumps_beyond_last():
    f = StepFunction([1.0, 2.0], [0.5, 0.3])
    assert step_eval(f, 5.0) == pytest.approx(0.8, abs=1e-15)


def test_empty_function_is_zero_everywhere():
    f = StepFunction.empty()
    assert step_eval(f, 3.0) == 0.0
    np.testing.assert_array_equal(f(np.array([0.0, 1.0, 10.0])), np.zeros(3))


def test_negative_time_is_rejected():
    with pytest.raises(ValueError):
        step_eval(StepFunction([1.0], [0.2]), -0.1)


def test_unsorted_jumps_are_rejected():
    with pytest.raises(ValueError):
        StepFunction([2.0, 1.0], [0.1, 0.1])


def test_from_events_sums_tied_jumps():
    f = StepFunction.from_events([2.0, 1.0, 2.0], [0.1, 0.2, 0.3])
    assert f.pairs() == ((1.0, 0.2), (2.0, pytest.approx(0.4)))


def test_vectorised_evaluation_matches_direct_summation():
    rng = np.random.default_rng(7)
    times = np.sort(rng.uniform(0, 10, 20))
    sizes = rng.uniform(0, 1, 20)
    f = StepFunction(times, sizes)
    grid = rng.uniform(0, 12, 50)
    expected = [sizes[times <= t].sum() for t in grid]
    np.testing.assert_allclose(f(grid), expected, rtol=1e-12, atol=1e-15)


def test_merge_restrict_and_scale():
    f = StepFunction([1.0, 3.0], [0.2, 0.4])
    g = StepFunction([2.0, 3.0], [0.1, 0.1])
    merged = f.merge(g)
    assert merged(3.0) == pytest.approx(f(3.0) + g(3.0))
    assert merged.restricted(2.0).total() == pytest.approx(0.3)
    assert f.scaled(2.0)(5.0) == pytest.approx(1.2)
    assert f.is_monotone
