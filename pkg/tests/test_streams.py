import numpy as np
import pytest

from metastable.streams import name_code, replica_streams, stream, stream_seed


def test_same_path_same_stream():
    assert np.array_equal(stream(7, 1, 2).random(5), stream(7, 1, 2).random(5))


@pytest.mark.parametrize("other", [(7, 1, 3), (7, 2, 2), (8, 1, 2), (7, 1, 2, 0)])
def test_different_paths_differ(other):
    assert not np.array_equal(stream(7, 1, 2).random(5), stream(*other).random(5))


def test_adding_replicas_keeps_existing_streams():
    few = [g.random(3) for g in replica_streams(3, (9,), range(4))]
    many = [g.random(3) for g in replica_streams(3, (9,), range(10))]
    for a, b in zip(few, many):
        assert np.array_equal(a, b)


def test_negative_path_rejected():
    with pytest.raises(ValueError):
        stream(1, -1)


def test_name_code_is_stable():
    assert name_code("conductance-sweep") == name_code("conductance-sweep")
    assert name_code("gap-sweep") != name_code("conductance-sweep")


def test_stream_seed_recovered():
    assert stream_seed(stream(42, 1)) == 42
