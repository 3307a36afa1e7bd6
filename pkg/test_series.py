from fractions import Fraction

import pytest

from exceptions import IncompatibleSeriesError, SeriesDomainError, SubstitutionError
from scalars import CycScalar
from series import SeriesSpace, TSeries, VarIndex

T1, T2, T3 = VarIndex.T(1), VarIndex.T(2), VarIndex.T(3)
FLAT = SeriesSpace([T1, T2], [1, 1])


def var(v, cap=3, space=FLAT, **kwargs):
    return TSeries.variable(space, v, cap, **kwargs)


def one(cap=3, space=FLAT):
    return TSeries.constant(space, cap, 1)


def test_product_truncates_at_cap():
    assert (one(2) + var(T1, 2)) * (one(2) - var(T1, 2)) == one(2) - var(T1, 2) * var(T1, 2)
    assert not ((var(T1, 1) + var(T2, 1)) * (var(T1, 1) - var(T2, 1)))


def test_additive_identity():
    a = var(T1) * var(T2) + Fraction(1, 3)
    assert a + 0 == a
    assert a - a == 0


def test_weight_zero_x_is_not_truncated():
    space = SeriesSpace.for_times(3)
    x = TSeries.variable(space, T1, 1)
    assert len(x ** 5) == 1
    assert not (TSeries.variable(space, T2, 1) * TSeries.variable(space, T3, 1))


def test_derivatives():
    a = var(T1) ** 2 * var(T2)
    assert a.diff(T1) == var(T1) * var(T2) * 2
    assert not one().diff(T2)
    b = a + var(T1) * var(T2) ** 2
    assert b.diff(T1).diff(T2) == b.diff(T2).diff(T1)


def test_integration_inverts_x_derivative():
    a = var(T1) ** 2 * var(T2) + var(T2) + 4
    assert a.diff(T1).integrate(T1) == a - a.set_zero(T1)


def test_log_mercator_series():
    u = var(T1)
    expected = u - u ** 2 * Fraction(1, 2) + u ** 3 * Fraction(1, 3)
    assert (one() + u).log() == expected
    assert not one().log()


def test_exp_log_round_trip():
    a = one() + var(T1) + var(T2)
    assert a.log().exp() == a
    b = var(T1) * 2 + var(T2) * var(T1)
    assert b.exp().log() == b


def test_log_needs_unit_head():
    with pytest.raises(SeriesDomainError):
        (one() * 2 + var(T1)).log()
    with pytest.raises(SeriesDomainError):
        (one() + var(T1)).exp()


def test_substitution_is_a_ring_homomorphism():
    mapping = {T1: var(T1) + var(T2), T2: var(T2) * 2 - var(T1)}
    a = one() + var(T1) * 3 + var(T2) ** 2
    b = var(T1) - var(T2) * Fraction(1, 2)
    assert (a * b).subst(mapping) == a.subst(mapping) * b.subst(mapping)


def test_substitution_into_another_space_with_cyclotomic_factor():
    target = SeriesSpace([VarIndex.t(0, 0), VarIndex.s()], [0, 1])
    root = CycScalar.sqrt_minus_r(2)
    source = SeriesSpace([T1, T2], [0, 1])
    s = TSeries.variable(target, VarIndex.s(), 2)
    image = s * -2 * root.inverse()
    a = TSeries.variable(source, T2, 2) * TSeries.variable(source, T2, 2)
    result = a.subst({T1: TSeries.variable(target, VarIndex.t(0, 0), 2), T2: image}, target)
    assert result == s * s * -2


def test_substitution_rejects_weight_lowering_images():
    space = SeriesSpace.for_times(2)
    with pytest.raises(SubstitutionError):
        TSeries.variable(space, T2, 2).subst({T2: TSeries.variable(space, T1, 2)})


def test_substitution_rejects_degree_beyond_cap():
    raising = {T1: var(T1) * var(T2)}
    assert var(T1).subst(raising) == var(T1) * var(T2)
    assert (var(T1) * var(T2)).subst(raising) == var(T1) * var(T2) ** 2
    with pytest.raises(SubstitutionError):
        (var(T1) ** 2).subst(raising)
    with pytest.raises(SubstitutionError):
        (var(T1) * var(T2) ** 2).subst(raising)


def test_incompatible_spaces():
    other = SeriesSpace([T1, T3], [1, 1])
    with pytest.raises(IncompatibleSeriesError):
        var(T1) + TSeries.variable(other, T1, 3)


def test_eps_components():
    c = var(T1) * var(T2)
    assert c.shift_eps(-1).eps_coefficient(-1) == c
    assert not c.shift_eps(-1).eps_coefficient(0)
    assert var(T1).eps_coefficient(0) == var(T1)
    assert (c.shift_eps(2) + c).eps_powers() == [0, 2]


def test_euler_and_eps_derivative():
    a = var(T1) ** 2 * var(T2) + var(T2).shift_eps(-3)
    assert a.euler() == var(T1) ** 2 * var(T2) * 3 + var(T2).shift_eps(-3)
    assert a.euler([T2]) == a
    assert a.eps_derivative() == var(T2).shift_eps(-3) * -3


def test_json_is_sorted_and_restorable():
    a = var(T2) * 3 + var(T1).shift_eps(-1) * CycScalar.zeta_power(2, 1) + 1
    data = a.to_json()
    exponents = [term["exponents"] for term in data["terms"]]
    assert exponents == sorted(exponents)
    assert data["varset"] == ["T1", "T2"]
    assert TSeries.from_json(data) == a


def test_extraction_helpers():
    a = var(T1) ** 2 * var(T2) * 5 + var(T2).shift_eps(-1)
    exps = a.exponent_vector({T1: 2, T2: 1})
    assert a.coefficient(exps).component(0) == 5
    assert a.monomials()[(0, 1)].component(-1) == 1
    assert a.monomial_text((-1, 0, 1)) == "eps^-1*T2"
