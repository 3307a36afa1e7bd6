from fractions import Fraction

import pytest

from checks import degree_one_residual
from exceptions import MissingGeneratorError
from jets import (
    JetPoly,
    diff_degree_part,
    generators_needed,
    jet_L0_symbol,
    jet_power,
    jet_values,
    substitute_jets,
)
from psdo import PsDO, power_frac
from series import SeriesSpace, TSeries, VarIndex

SPACE = SeriesSpace.for_times(1)
ZERO = TSeries.zero(SPACE, 0)
ONE = ZERO + 1
X = TSeries.variable(SPACE, VarIndex.T(1), 0)


def test_derivation_on_generators():
    f = JetPoly.generator(0, 0)
    assert (f * f).dx() == JetPoly.generator(0, 0) * JetPoly.generator(0, 1) * 2
    assert JetPoly.generator(1, 2).dx() == JetPoly.generator(1, 3)
    assert not JetPoly.constant(Fraction(3, 2)).dx()


def test_differential_degree_cap():
    g = JetPoly.generator(0, 1, max_degree=1)
    assert not g.dx()
    assert not g * g
    assert g * JetPoly.generator(1, 0, max_degree=1) == JetPoly({(((0, 1), 1), ((1, 0), 1)): 1})


@pytest.mark.parametrize("r", [2, 3, 4])
def test_initial_symbol_has_no_derivatives(r):
    S = jet_L0_symbol(r)
    assert diff_degree_part(S, 0) == S
    assert not diff_degree_part(S, 1)


@pytest.mark.parametrize("r", [2, 3])
def test_degree_one_formula(r):
    for a in range(1, 2 * r + 3):
        assert not degree_one_residual(a, r, -(r + 1)), f"a={a}"


def test_degree_one_part_of_whole_power_vanishes():
    assert not diff_degree_part(jet_power(3, 3, -2), 1)


def test_substitute_jets():
    J = JetPoly.generator(0, 0) * JetPoly.generator(1, 1) + 3
    assert J.substitute({(0, 0): X, (1, 1): ONE * 2}, ZERO) == X * 2 + 3
    with pytest.raises(MissingGeneratorError):
        JetPoly.generator(0, 2).substitute({(0, 0): X}, ZERO)


@pytest.mark.parametrize(
    "r, coefficients",
    [(2, {0: X}), (3, {0: X, 1: X ** 2 + 1})],
)
def test_jet_power_matches_concrete_power(r, coefficients):
    L = PsDO({r: ONE, **coefficients}, ZERO)
    for a in (1, r + 1):
        J = jet_power(a, r, -3, max_degree=None)
        max_k = max(k for _, k in generators_needed(J))
        concrete = substitute_jets(J, jet_values(L, r, max_k), ZERO)
        assert concrete == power_frac(L, a, r, -3).to_symbol()
