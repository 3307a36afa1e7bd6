import pytest

import solver
from checks import CheckContext, check_hierarchy
from exceptions import ConfigurationError, PathDependenceError, StratificationError
from psdo import PsDO
from series import SeriesSpace, TSeries, VarIndex
from solver import (
    HierarchyState,
    TruncationSpec,
    flow_rhs,
    initial_L,
    integrate_layer,
    solve_jets,
    stability_check,
    stratify,
)

T = VarIndex.T


def coefficient(series, eps, **exponents):
    key = series.exponent_vector({T(int(name[1:])): e for name, e in exponents.items()})
    return series.coefficient(key).component(eps)


@pytest.mark.parametrize("r", [2, 3])
def test_initial_operator(r):
    spec = TruncationSpec.build(r=r, times=r + 1, degree=3)
    L = initial_L(spec)
    assert L.order == r
    assert sorted(L.coeffs) == [0, r]
    assert coefficient(L.coeff(0), -r, T1=1) == r


def test_truncation_defaults():
    spec = TruncationSpec.build(r=3, times=5, degree=4)
    assert spec.genus_max == 1
    assert spec.eps_cap == 2
    assert spec.depth >= spec.times + spec.r + 1


@pytest.mark.parametrize(
    "values",
    [
        {"r": 1, "times": 3, "degree": 3},
        {"r": 2, "times": 2, "degree": 3},
        {"r": 2, "times": 4, "degree": 2},
        {"r": 2, "times": 4, "degree": 3, "eps_cap": 1},
        {"r": 2, "times": 4, "degree": 3, "depth": 5},
        {"r": 2, "times": 4, "degree": 3, "genus_max": -1},
    ],
)
def test_invalid_truncation(values):
    with pytest.raises(ConfigurationError):
        TruncationSpec.build(**values)


def test_kdv_first_nontrivial_flow(kdv_state):
    f0 = kdv_state.f(0)
    assert f0.diff(T(3)).degree_part(0) == TSeries.variable(kdv_state.space, T(1), 4, coefficient=6, eps=-2)
    assert coefficient(f0, -2, T1=1, T3=2) == 18


def test_flow_rhs_lowers_order(kdv_state):
    rhs = flow_rhs(kdv_state.L, 3, 2)
    assert all(k <= 0 for k in rhs.coeffs)


def test_multiples_of_r_are_trivial(kdv_state, r3_state):
    for n in (2, 4):
        assert not kdv_state.f(0).diff(T(n))
    for i in range(2):
        assert not r3_state.f(i).diff(T(3))


def test_layers_are_recorded(kdv_state):
    layers = kdv_state.provenance["layers"]
    assert [layer["degree"] for layer in layers] == [1, 2, 3, 4]
    assert kdv_state.solved_degree == 4


def test_resume_matches_fresh_solve(kdv_state):
    partial = solve_jets(TruncationSpec.build(r=2, times=4, degree=3))
    resumed = solve_jets(TruncationSpec.build(r=2, times=4, degree=4), resume=partial)
    assert resumed.L == kdv_state.L
    assert len(resumed.provenance["layers"]) == 4


def test_threaded_solve_matches_serial():
    spec = TruncationSpec.build(r=3, times=4, degree=3)
    assert solve_jets(spec, threads=3).L == solve_jets(spec, threads=1).L


def test_integrate_layer_is_path_independent():
    space = SeriesSpace.for_times(3)
    t2 = TSeries.variable(space, T(2), 3)
    t3 = TSeries.variable(space, T(3), 3)
    terms = integrate_layer(space, 1, {2: t3, 3: t2}, "test")
    assert TSeries(space, 3, terms) == t2 * t3
    with pytest.raises(PathDependenceError) as info:
        integrate_layer(space, 1, {2: t3, 3: t2 * 5}, "test")
    assert info.value.monomial == (0, 0, 1, 1)


def test_strata_of_kdv(kdv_state):
    strata = stratify(kdv_state)
    L0 = strata[0]
    assert L0.order == 2
    assert L0.coeff(0).set_zero(T(2), T(3), T(4)) == TSeries.variable(kdv_state.space, T(1), 4, coefficient=2)
    assert len(strata) >= kdv_state.spec.eps_cap + 1


def test_stratification_rejects_low_eps_powers():
    spec = TruncationSpec.build(r=2, times=3, degree=3)
    space = spec.space()
    zero = TSeries.zero(space, 3)
    bad = PsDO({2: zero + 1, 0: TSeries.variable(space, T(1), 3, eps=-3)}, zero, order=2)
    with pytest.raises(StratificationError):
        stratify(HierarchyState(spec=spec, L=bad, solved_degree=3))


def test_fractional_power_cache(r3_state):
    cache = r3_state.powers(-1)
    assert r3_state.powers(-1) is cache
    assert r3_state.power(3, -1) == r3_state.L
    assert r3_state.power(1, -1).coeff(1) == r3_state.zero + 1


def test_stability_deepens_the_tail(r3_state):
    stable, changed = stability_check(r3_state)
    assert stable
    assert changed == []


def test_stability_flags_a_tail_that_does_not_deepen(r3_state, monkeypatch):
    original = solver.root_powers
    depth = r3_state.spec.depth
    monkeypatch.setattr(solver, "root_powers", lambda A, r, floor: original(A, r, max(floor, -depth)))
    stable, changed = stability_check(r3_state)
    assert not stable
    assert changed == ["L^1/3", "L^2/3", "L^3/3"]


@pytest.fixture(scope="module")
def wide_r3_state():
    """r = 3 with T1..T8 to degree 6, so T6 is a flow time"""
    return solve_jets(TruncationSpec.build(r=3, times=8, degree=6))


@pytest.mark.slow
def test_hierarchy_on_wide_truncation(wide_r3_state):
    reports = check_hierarchy(CheckContext(wide_r3_state))
    assert {r.params["item"] for r in reports} == {"flows", "T_mr", "eps-pattern", "stability"}
    assert [(r.params, r.residual_monomials[:3]) for r in reports if r.status == "fail"] == []
    for i in range(2):
        assert not wide_r3_state.f(i).diff(T(3))
        assert not wide_r3_state.f(i).diff(T(6))
    assert [layer["degree"] for layer in wide_r3_state.provenance["layers"]] == [1, 2, 3, 4, 5, 6]
