from fractions import Fraction

import pytest

from exceptions import (
    BridgeParityError,
    ClosedIndexError,
    ConfigurationError,
    HessianMismatchError,
    NonRationalValueError,
)
from potentials import (
    HessianBuilder,
    as_rational_value,
    bridge_factor,
    build_table,
    build_tables,
    closed_F0_hessian,
    closed_two_point,
    closed_two_point_genus,
    extract,
    r2_bridge,
    selection_defect,
)
from scalars import CycScalar
from series import TSeries, VarIndex

T = VarIndex.T


def test_closed_two_point_of_kdv(kdv_state):
    R1 = closed_two_point_genus(kdv_state, 1, 0)
    assert R1.degree_part(0) == TSeries.variable(kdv_state.space, T(1), 4)
    with pytest.raises(ClosedIndexError):
        closed_two_point(kdv_state, 2)


def test_hessian_routes_agree(r3_state):
    builder = HessianBuilder(r3_state)
    for a in (1, 2, 4):
        for b in (1, 2):
            H = closed_F0_hessian(r3_state, a, b, builder)
            integrated = builder.integrated(a, b)
            assert (H - H.set_zero(T(1))).truncate(2) == (integrated - integrated.set_zero(T(1))).truncate(2)
            cap = builder.slice_cap(a, b)
            assert H.set_zero(T(1)).truncate(cap) == integrated.set_zero(T(1)).truncate(cap)
    assert not any(builder.row(3).values())
    with pytest.raises(ValueError):
        builder.hessian(1, 3)


def test_string_slice_caps(r3_state):
    builder = HessianBuilder(r3_state)
    assert builder.slice_cap(1, 2) == 2
    assert builder.slice_cap(2, 1) == 2
    assert builder.slice_cap(4, 2) == 2
    assert not builder.string_slice(4, 2)
    assert builder.slice_cap(2, 2) == 1


def test_hessian_cross_check_catches_a_corrupted_slice(r3_state):
    builder = HessianBuilder(r3_state)
    row = builder.row(4)
    builder._cache[4] = {**row, 2: row[2] + TSeries.variable(r3_state.space, T(2), row[2].cap)}
    with pytest.raises(HessianMismatchError):
        closed_F0_hessian(r3_state, 4, 2, builder)
    row = builder.row(2)
    builder._cache[2] = {**row, 2: row[2] + TSeries.variable(r3_state.space, T(3), row[2].cap)}
    with pytest.raises(HessianMismatchError):
        closed_F0_hessian(r3_state, 2, 2, builder)


def test_hessian_first_row_is_two_point_function(kdv_state):
    builder = HessianBuilder(kdv_state)
    cap = kdv_state.spec.degree - 1
    assert builder.hessian(1, 1).truncate(cap) == closed_two_point_genus(kdv_state, 1, 0).truncate(cap)


def test_membership_residual_starts_below_r(r3_state):
    residual = HessianBuilder(r3_state).membership_residual(2)
    assert all(not residual.coeff(-j) for j in range(1, 4))


def test_closed_genus0_values(kdv_state):
    table = build_table(kdv_state, "closed", 0)
    assert table.get([(0, 0)] * 3) == 1
    assert table.get([(0, 0), (0, 0), (0, 0), (0, 1)]) == 1
    assert table.metadata["normalization"] == "r^(1-g) included"


def test_open_genus0_values_for_kdv(kdv_state):
    table = build_table(kdv_state, "open", 0)
    assert table.get([], 3) == -2
    assert table.get([(0, 0)], 1) == 1
    assert table.get([(0, 1)], 3) == -4
    assert not table.conjectural


def test_open_values_are_rational_for_r3(r3_state):
    table = build_table(r3_state, "open", 0)
    assert table.entries
    assert all(e.den > 0 for e in table.entries)


def test_conjectural_table_is_flagged(kdv_state):
    table = build_table(kdv_state, "conjectural", 1)
    assert table.conjectural
    assert all(e.conjectural for e in table.entries)
    assert table.metadata["conjectural"] is True


def test_extended_entries_obey_selection_rule(kdv_state):
    table = build_table(kdv_state, "extended", 0)
    for e in table.entries:
        assert selection_defect("extended", 2, 0, [(i.a, i.d) for i in e.insertions], e.k) == 0


@pytest.mark.parametrize(
    "flavor, genus",
    [("bogus", 0), ("open", 1), ("extended", 1), ("conjectural", 0)],
)
def test_table_requests_out_of_range(kdv_state, flavor, genus):
    with pytest.raises(ConfigurationError):
        build_table(kdv_state, flavor, genus)


def test_build_tables_keeps_request_order(kdv_state):
    tables = build_tables(kdv_state, [("open", 0), ("closed", 0), ("extended", 0)], threads=2)
    assert [t.flavor for t in tables] == ["open", "closed", "extended"]


def test_bridge_factor():
    assert bridge_factor(0, 3) == -2
    assert bridge_factor(0, 1) == 1
    assert bridge_factor(1, 4) == 4
    with pytest.raises(BridgeParityError):
        bridge_factor(1, 1)


def test_r2_bridge():
    assert r2_bridge(Fraction(-2), 0, 3) == 1
    assert r2_bridge(Fraction(-4), 0, 3) == 2
    assert r2_bridge(Fraction(0), 1, 1) == 0
    with pytest.raises(BridgeParityError):
        r2_bridge(Fraction(5), 1, 1)


def test_rationality_assertion():
    assert as_rational_value(CycScalar.from_rational(2, 3)) == 3
    with pytest.raises(NonRationalValueError):
        as_rational_value(CycScalar.zeta_power(2, 1))


def test_selection_defects():
    assert selection_defect("open", 2, 0, [], 3) == 0
    assert selection_defect("open", 2, 0, [(0, 0)], 1) == 0
    assert selection_defect("open", 2, 0, [(0, 1)], 3) == 0
    assert selection_defect("closed", 2, 0, [(0, 0)] * 3, 0) == 0
    assert selection_defect("closed", 2, 0, [(0, 0)] * 2, 0) == 2
    assert selection_defect("extended", 3, 0, [(2, 0)], 0) == 3


def test_extract_multiplies_factorials(kdv_state):
    phi0 = kdv_state.wave.strata[0]
    assert extract(phi0, {T(2): 3}) == Fraction(4, 3) * 6
    assert extract(phi0, {T(1): 1, T(2): 1}) == 2


def test_records_and_csv(kdv_state):
    table = build_table(kdv_state, "open", 0)
    records = table.to_records()
    assert len(records) == len(table.entries)
    first = records[0]
    assert set(first) == {"flavor", "genus", "insertions", "k", "value", "conjectural", "selection_rule_checked"}
    lines = table.to_csv().splitlines()
    assert lines[0] == "flavor,genus,insertions,k,num,den,conjectural,selection_rule_checked"
    assert len(lines) == len(table.entries) + 1
    assert lines[1].startswith("open,0,")


def test_entry_labels(kdv_state):
    table = build_table(kdv_state, "open", 0)
    labels = {e.label() for e in table.entries}
    assert "<sigma^3>_0" in labels
    assert "<tau^0_0 sigma^1>_0" in labels
