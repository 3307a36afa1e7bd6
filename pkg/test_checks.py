import random

import pytest

from checks import (
    CHECK_NAMES,
    CheckContext,
    CheckReport,
    OOperator,
    check_dilaton,
    check_dimension,
    check_hierarchy,
    check_trr1,
    exchange_residual,
    identification_values,
    random_series,
    run_checks,
)
from config import settings
from conftest import solved_state
from exceptions import ConfigurationError, FlowError
from psdo import PsDO, Symbol
from series import SeriesSpace, TSeries, VarIndex
from solver import HierarchyState, TruncationSpec, initial_L
from wave import WaveState

T = VarIndex.T


def failures(reports):
    return [(r.check, r.params, r.residual_monomials[:3], r.note) for r in reports if r.status == "fail"]


@pytest.mark.parametrize("fixture", ["kdv_state", "r3_state"])
@pytest.mark.parametrize("name", [n for n in CHECK_NAMES if n != "hierarchy"])
def test_check_passes(fixture, name, request):
    state = request.getfixturevalue(fixture)
    reports = run_checks(state, [name], threads=1)
    assert reports
    assert not failures(reports)


@pytest.mark.parametrize("fixture", ["kdv_state", "r3_state"])
def test_hierarchy_sanity_without_resolve(fixture, request):
    state = request.getfixturevalue(fixture)
    reports = check_hierarchy(CheckContext(state), with_stability=False)
    assert {r.params["item"] for r in reports} == {"flows", "T_mr", "eps-pattern"}
    assert not failures(reports)


def test_depth_stability(r3_state):
    reports = check_hierarchy(CheckContext(r3_state))
    stability = [r for r in reports if r.params["item"] == "stability"]
    assert len(stability) == 1
    assert stability[0].status == "pass"
    assert stability[0].params["depth"] == r3_state.spec.depth + 2


def test_open_bridge_is_skipped_beyond_kdv(r3_state):
    reports = run_checks(r3_state, ["r2bridge"])
    assert [r.status for r in reports] == ["pass", "skipped"]
    assert all(r.passed for r in reports)


def test_checks_run_concurrently(kdv_state):
    names = ["string", "dimension", "symbols"]
    reports = run_checks(kdv_state, names, threads=3)
    assert [r.check for r in reports] == sorted([r.check for r in reports], key=names.index)
    assert not failures(reports)


def test_dilaton_operator_commutes_to_x_derivative():
    space = SeriesSpace.for_times(3)
    O = OOperator(2)
    rng = random.Random(settings.random_seed)
    for _ in range(25):
        f = random_series(space, 3, rng)
        assert O(f.diff(T(1))) - O(f).diff(T(1)) == f.diff(T(1))


def test_exchange_identity_on_hierarchy_operators(kdv_state):
    O = OOperator(2)
    rng = random.Random(settings.random_seed)
    for n in range(1, kdv_state.spec.times + 1):
        A = kdv_state.power(n, 0).plus()
        f = random_series(kdv_state.space, kdv_state.spec.degree, rng)
        assert not exchange_residual(O, A, f)


def test_exchange_identity_rejects_scaled_operator(kdv_state):
    class ScaledO(OOperator):
        def __call__(self, f):
            return super().__call__(f) * 2

    A = kdv_state.power(2, 0).plus()
    f = TSeries.monomial(kdv_state.space, kdv_state.spec.degree, {T(1): 2, T(2): 1})
    assert not exchange_residual(OOperator(2), A, f)
    assert exchange_residual(ScaledO(2), A, f) == f.diff(T(1), 2) * 2


def test_dilaton_flags_broken_symbol_quantization(kdv_state, monkeypatch):
    original = Symbol.to_operator
    monkeypatch.setattr(Symbol, "to_operator", lambda self: original(self) + PsDO.d(0, self.zero))
    reports = check_dilaton(CheckContext(kdv_state))
    operator = [r for r in reports if r.params["item"] == "iv"][0]
    assert operator.status == "fail"
    assert all(line.startswith("exchange") for line in operator.residual_monomials)


def test_dilaton_operator_needs_next_time():
    with pytest.raises(ConfigurationError):
        OOperator(3)(TSeries.variable(SeriesSpace.for_times(3), T(1), 2))


def test_dilaton_check_rejects_short_truncation():
    spec = TruncationSpec.model_construct(r=3, times=3, degree=3, genus_max=1, depth=10, eps_cap=2)
    state = HierarchyState(spec=spec, L=initial_L(spec), solved_degree=0)
    with pytest.raises(ConfigurationError):
        check_dilaton(CheckContext(state))
    with pytest.raises(ConfigurationError):
        run_checks(state, ["dilaton"])


def test_unknown_check_names():
    with pytest.raises(ConfigurationError):
        run_checks(None, ["string", "nonsense"])


def test_trr1_skipped_without_genus_one():
    state = solved_state(r=2, times=3, degree=3, genus_max=0)
    reports = check_trr1(CheckContext(state))
    assert [r.status for r in reports] == ["skipped"]
    assert reports[0].passed


def test_dimension_flags_corrupted_phi(kdv_state):
    ws = kdv_state.wave
    bad = ws.strata[0] + TSeries.variable(kdv_state.space, T(2), ws.strata[0].cap)
    corrupted = WaveState(
        Phi=ws.Phi,
        phi=ws.phi,
        strata={0: bad, 1: ws.strata[1]},
        genus_max=ws.genus_max,
    )
    reports = check_dimension(CheckContext(kdv_state, wave=corrupted))
    assert reports[0].status == "fail"
    assert any("defect 2" in line for line in reports[0].residual_monomials)


def test_identification_for_kdv(kdv_state):
    values = identification_values(CheckContext(kdv_state), 0)
    assert values[((), 3)] == 1
    assert values[((0,), 1)] == 1


def test_report_model():
    report = CheckReport(check="string", params={"form": "T"})
    assert report.passed
    assert report.model_dump()["status"] == "pass"
    assert not CheckReport(check="string", status="fail").passed
    assert CheckReport(check="x", status="skipped", millis=3).millis == 3


def test_setup_failure_becomes_report(kdv_state, monkeypatch):
    def broken_warm(self):
        raise FlowError("wave function diverged")

    monkeypatch.setattr(CheckContext, "warm", broken_warm)
    reports = run_checks(kdv_state, ["string", "dimension"], threads=1)
    assert [(r.check, r.status) for r in reports] == [("setup", "fail")]
    assert "FlowError" in reports[0].note


def test_setup_configuration_error_propagates(kdv_state, monkeypatch):
    def broken_warm(self):
        raise ConfigurationError("no strata")

    monkeypatch.setattr(CheckContext, "warm", broken_warm)
    with pytest.raises(ConfigurationError):
        run_checks(kdv_state, ["string"], threads=1)
