from fractions import Fraction

import pytest

from oracles import (
    ClosedGenus0Oracle,
    OpenGenus0Oracle,
    closed_genus0_oracle,
    kdv_genus0,
    open_genus0_oracle,
    open_keys_up_to,
    table_seed_lookup,
)
from potentials import build_table, r2_bridge


def kdv_seed(key):
    return Fraction(1) if key == ((0, 0),) * 3 else Fraction(0)


def descendant_lists(n):
    out = []

    def extend(prefix, remaining, start):
        if len(prefix) == n:
            if remaining == 0:
                out.append(tuple(prefix))
            return
        for d in range(start, remaining + 1):
            extend(prefix + [d], remaining - d, d)

    extend([], n - 3, 0)
    return out


def test_kdv_genus0():
    assert kdv_genus0([0, 0, 0]) == 1
    assert kdv_genus0([0, 0, 0, 1]) == 1
    assert kdv_genus0([0, 0, 0, 0, 2]) == Fraction(1, 1)
    assert kdv_genus0([0, 0, 0, 1, 1]) == 2
    assert kdv_genus0([0, 0, 1]) == 0


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_closed_recursion_reproduces_kdv(n):
    oracle = ClosedGenus0Oracle(2, kdv_seed)
    for ds in descendant_lists(n):
        assert oracle.value([(0, d) for d in ds]) == kdv_genus0(ds)


def test_closed_oracle_unknown_seed():
    oracle = ClosedGenus0Oracle(3, lambda key: None)
    assert oracle.value([(0, 0), (0, 0), (1, 0)]) is None
    assert oracle.value([(0, 0), (0, 0)]) == 0
    assert oracle.value([(2, 0), (0, 0), (0, 0), (0, 1)]) == 0


def test_closed_table_matches_oracle(r3_state):
    table = build_table(r3_state, "closed", 0)
    entries = {key: value for (key, k), value in table.lookup().items()}
    lookup = table_seed_lookup(entries, r3_state.spec.times, r3_state.spec.degree, 3)
    keys = [key for key in entries if any(d for _, d in key)]
    oracle = closed_genus0_oracle(3, lookup, keys)
    for key, value in oracle.items():
        assert value == entries[key]


def test_seed_lookup_bounds():
    lookup = table_seed_lookup({((0, 0),) * 3: Fraction(1)}, times=3, degree=3, r=2)
    assert lookup(((0, 0),) * 3) == 1
    assert lookup(((0, 0), (0, 0), (1, 0))) == 0
    assert lookup(((0, 0), (3, 0), (3, 0))) is None
    assert lookup(((0, 0), (1, 0), (1, 0), (1, 0))) is None


def test_open_seeds_and_descendants():
    oracle = OpenGenus0Oracle()
    assert oracle.value([], 3) == 1
    assert oracle.value([0], 1) == 1
    assert oracle.value([1], 3) == 2
    assert oracle.value([0, 1], 1) == 1
    assert oracle.value([], 1) == 0
    assert oracle.value([0], 2) == 0


def test_open_keys_respect_dimension():
    keys = open_keys_up_to(4, 2)
    assert ((), 3) in keys
    assert ((0,), 1) in keys
    assert ((1,), 3) in keys
    assert all(OpenGenus0Oracle.dimension_ok(ds, k) for ds, k in keys)
    assert all(len(ds) + k <= 4 for ds, k in keys)


def test_bridged_kdv_table_matches_open_oracle(kdv_state):
    table = build_table(kdv_state, "open", 0)
    bridged = {}
    for (key, k), value in table.lookup().items():
        if all(a == 0 for a, _ in key):
            bridged[(tuple(d for _, d in key), k)] = r2_bridge(value, 0, k)
    oracle = open_genus0_oracle(bridged.keys())
    assert ((), 3) in oracle
    assert oracle == bridged
