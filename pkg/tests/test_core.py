import numpy as np
import pytest

from cgad.core import (BinaryDbn, CyclicAfterThreshold, DuplicateSensorName, NonFiniteValue,
                       ShapeMismatch, WeightedDbn, find_cycle, validate_series)


def test_valid_series():
    s = validate_series(np.arange(8.0).reshape(4, 2), ["a", "b"], [0, 0, 1, 1])
    assert s.n_steps == 4 and s.n_sensors == 2
    assert list(s.point_labels) == [0, 0, 1, 1]
    with pytest.raises(ValueError):
        s.values[0, 0] = 1.0


def test_nan_reports_coordinates():
    values = np.ones((4, 2))
    values[2, 1] = np.nan
    with pytest.raises(NonFiniteValue) as err:
        validate_series(values, ["a", "b"])
    assert (err.value.row, err.value.col) == (2, 1)


def test_inf_rejected():
    values = np.ones((3, 2))
    values[0, 0] = np.inf
    with pytest.raises(NonFiniteValue):
        validate_series(values, ["a", "b"])


@pytest.mark.parametrize("names, labels", [
    (["a", "b"], [0, 0, 1]),
    (["a"], None),
    (["a", "b", "c"], None),
])
def test_shape_mismatch(names, labels):
    with pytest.raises(ShapeMismatch):
        validate_series(np.ones((4, 2)), names, labels)


def test_duplicate_names():
    with pytest.raises(DuplicateSensorName):
        validate_series(np.ones((4, 2)), ["a", "a"])


def test_single_sensor_rejected():
    with pytest.raises(ShapeMismatch):
        validate_series(np.ones((4, 1)), ["a"])


def test_weighted_dbn_invariants():
    WeightedDbn(np.zeros((3, 3)), np.zeros((6, 3)), 2)
    WeightedDbn(np.zeros((3, 3)), np.zeros((0, 3)), 0)
    with pytest.raises(ShapeMismatch):
        WeightedDbn(np.eye(3), np.zeros((3, 3)), 1)
    with pytest.raises(ShapeMismatch):
        WeightedDbn(np.zeros((3, 3)), np.zeros((3, 3)), 2)


def test_binary_dbn_rejects_cycles_and_self_loops():
    with pytest.raises(CyclicAfterThreshold):
        BinaryDbn({(0, 1), (1, 2), (2, 0)}, set(), 3, 0)
    with pytest.raises(ShapeMismatch):
        BinaryDbn({(1, 1)}, set(), 3, 0)
    with pytest.raises(ShapeMismatch):
        BinaryDbn(set(), {(0, 2, 1)}, 3, 1)


def test_find_cycle():
    assert find_cycle({(0, 1), (1, 2)}, 3) is None
    cycle = find_cycle({(0, 1), (1, 2), (2, 1)}, 3)
    assert sorted(cycle) == [1, 2]
