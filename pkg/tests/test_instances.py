import json
from pathlib import Path

import pytest

from onlinefair.core import Instance
from onlinefair.instances import (
    FAMILIES,
    enumerate_binary,
    example_fixture,
    family,
    like_adversary,
    like_adversary_response,
    lower_triangular,
    maximum_like_adversary,
    random_instance,
    upper_triangular,
)

GOLDEN = Path(__file__).parent / "data" / "random_instances_golden.json"


def _rows(inst):
    return [[int(x) for x in r] for r in inst.utilities]


def test_triangular_families():
    assert _rows(upper_triangular(1)) == [[1]]
    assert _rows(upper_triangular(2)) == [[1, 1], [1, 0]]
    assert _rows(upper_triangular(3)) == [[1, 1, 1], [1, 1, 0], [1, 0, 0]]
    assert _rows(lower_triangular(2)) == [[1, 0], [1, 1]]
    for n in range(1, 7):
        up, low = upper_triangular(n).utilities, lower_triangular(n).utilities
        assert all(low[i][j] == up[n - 1 - i][j] for i in range(n) for j in range(n))


def test_like_adversary_shapes():
    assert _rows(like_adversary(2)) == [[1, 1], [1, 0]]
    rows = _rows(like_adversary(4))
    assert [r[:2] for r in rows] == [[1, 1]] * 4
    assert [r[2:] for r in rows] == [[1, 0], [0, 1], [0, 0], [0, 0]]
    with pytest.raises(ValueError):
        like_adversary(3)


def test_adaptive_response_targets_served_agents_first():
    rows = _rows(like_adversary_response(6, served=[4, 1]))
    second = [[r[j] for r in rows] for j in range(3, 6)]
    assert [col.index(1) for col in second] == [1, 4, 0]
    assert all(sum(col) == 1 for col in second)
    with pytest.raises(ValueError):
        like_adversary_response(4, served=[0, 1, 2])


def test_example_fixtures():
    assert _rows(example_fixture(2)) == [[2, 0], [1, 2]]
    assert _rows(example_fixture(4)) == [[2, 2], [1, 1]]
    assert _rows(example_fixture(5)) == [[2, 1], [1, 2]]
    assert example_fixture(3, u=7).utilities[1][1] == 7
    assert example_fixture(1, n=4) == upper_triangular(4)
    with pytest.raises(ValueError):
        example_fixture(6)


def test_maximum_like_adversary():
    rows = _rows(maximum_like_adversary(3))
    assert rows == [[2, 2, 2], [1, 1, 1], [1, 1, 1]]


def test_enumerate_binary_counts():
    assert len(list(enumerate_binary(1, 1))) == 1
    # inclusion-exclusion: 0/1 2x2 matrices without a zero row or column
    assert len(list(enumerate_binary(2, 2))) == 7
    brute = sum(
        1
        for bits in range(2 ** 6)
        if all((bits >> (3 * i)) & 7 for i in range(2)) and all(((bits >> j) | (bits >> (3 + j))) & 1 for j in range(3))
    )
    assert len(list(enumerate_binary(2, 3))) == brute
    with pytest.raises(ValueError):
        list(enumerate_binary(4, 4))


def test_random_instances_are_valid_and_reproducible():
    for seed in range(50):
        for regime in ("binary", "general"):
            a = random_instance(3, 4, regime, seed=seed)
            assert isinstance(a, Instance)
            assert a == random_instance(3, 4, regime, seed=seed)
    assert random_instance(3, 3, "binary", 1).is_binary()


def test_random_instances_golden():
    for g in json.loads(GOLDEN.read_text()):
        inst = random_instance(g["n"], g["m"], g["regime"], seed=g["seed"])
        assert _rows(inst) == g["utilities"]


def test_family_lookup():
    assert set(FAMILIES) >= {"upper-triangular", "lower-triangular", "like-adversary"}
    assert family("upper-triangular", 3) == upper_triangular(3)
    with pytest.raises(ValueError):
        family("nope", 3)
