import random
from fractions import Fraction

import pytest

from config import settings
from exceptions import InsufficientDepthError, NegativeOrderError, NonMonicError, SymbolSubstitutionError
from jets import JetPoly
from psdo import PsDO, Symbol, commutator, compose, integer_power, invert, power_frac, root_powers, rth_root
from series import SeriesSpace, TSeries, VarIndex

SPACE = SeriesSpace.for_times(1)
ZERO = TSeries.zero(SPACE, 0)
ONE = ZERO + 1
X = TSeries.variable(SPACE, VarIndex.T(1), 0)


def eps_x(coefficient, power):
    return TSeries.variable(SPACE, VarIndex.T(1), 0, coefficient=coefficient, eps=power)


def eps_const(coefficient, power):
    return TSeries.constant(SPACE, 0, coefficient, eps=power)


def lax(r):
    return PsDO({r: ONE, 0: eps_x(r, -r)}, ZERO)


def random_poly(rng):
    return sum((X ** i * Fraction(rng.randint(-3, 3), rng.randint(1, 2)) for i in range(3)), ZERO)


def random_operator(rng):
    """Random operator of order <= 2 with a tail down to d^-2, exact to d^-4"""
    top = rng.randint(0, 2)
    coeffs = {n: random_poly(rng) for n in range(-2, top + 1)}
    coeffs[top] = ONE
    return PsDO(coeffs, ZERO, floor=-4)


def random_jet(rng):
    """Random differential polynomial of degree <= 2 in f[0], f[1] and their first derivatives"""
    gens = [JetPoly.generator(j, k) for j in (0, 1) for k in (0, 1)]
    total = JetPoly.constant(rng.randint(-2, 2))
    for g in gens:
        total = total + g * rng.randint(-3, 3)
    return total + rng.choice(gens) * rng.choice(gens) * rng.randint(-2, 2)


def partial(P, g):
    out = {}
    for mono, c in P.terms.items():
        exps = dict(mono)
        e = exps.pop(g, 0)
        if e:
            if e > 1:
                exps[g] = e - 1
            key = tuple(sorted(exps.items()))
            out[key] = out.get(key, 0) + c * e
    return JetPoly(out)


def variational(P, j):
    """Euler-Lagrange derivative; zero exactly when P is a total x-derivative"""
    total = JetPoly()
    for i, k in P.generators():
        if i == j:
            term = partial(P, (i, k))
            for _ in range(k):
                term = term.dx()
            total = total + term * (-1) ** k
    return total


def test_leibniz_rule_for_d():
    f = X ** 3
    assert compose(PsDO.d(1, ZERO), PsDO.scalar(f, ZERO)) == PsDO({1: f, 0: X ** 2 * 3}, ZERO)


def test_leibniz_rule_for_inverse_d():
    f = X ** 3
    product = compose(PsDO.d(-1, ZERO), PsDO.scalar(f, ZERO), floor=-4)
    expected = PsDO({-1: f, -2: X ** 2 * -3, -3: X * 6, -4: ONE * -6}, ZERO, floor=-4)
    assert product == expected
    assert product.floor == -4


def test_negative_left_factor_needs_floor():
    with pytest.raises(InsufficientDepthError):
        compose(PsDO.d(-1, ZERO), PsDO.scalar(X, ZERO))
    with pytest.raises(InsufficientDepthError):
        PsDO({-1: X}, ZERO, floor=-2).coeff(-3)


def test_composition_is_associative():
    A = PsDO({2: ONE, 0: X}, ZERO)
    B = PsDO({1: X, 0: ONE}, ZERO)
    C = PsDO({1: ONE, 0: X ** 2}, ZERO)
    assert compose(compose(A, B), C) == compose(A, compose(B, C))


def test_composition_is_associative_on_random_triples():
    rng = random.Random(settings.random_seed)
    for _ in range(100):
        A, B, C = (random_operator(rng) for _ in range(3))
        left = compose(compose(A, B, -6), C, -6)
        right = compose(A, compose(B, C, -6), -6)
        assert left == right
        assert left.floor == right.floor


def test_composition_distributes_over_addition():
    rng = random.Random(settings.random_seed + 1)
    for _ in range(30):
        A, B, C = (random_operator(rng) for _ in range(3))
        assert compose(A, B + C, -6) == compose(A, B, -6) + compose(A, C, -6)
        assert compose(A + B, C, -6) == compose(A, C, -6) + compose(B, C, -6)


def test_split_and_residue():
    A = PsDO({2: ONE, 0: X, -1: X ** 2, -2: ONE}, ZERO, floor=-3)
    plus, minus = A.split()
    assert plus == PsDO({2: ONE, 0: X}, ZERO)
    assert plus.floor is None
    assert sorted(minus.coeffs) == [-2, -1]
    assert plus + minus == A
    assert A.residue() == X ** 2


@pytest.mark.parametrize("r", [2, 3, 4, 5])
def test_root_of_initial_operator(r):
    root = rth_root(lax(r), r, -r)
    expected = PsDO(
        {1: ONE, 1 - r: eps_x(1, -r), -r: eps_const(Fraction(-(r - 1), 2), -r)},
        ZERO,
        floor=-r,
    )
    assert root == expected


@pytest.mark.parametrize("r", [2, 3, 4, 5])
def test_plus_part_of_next_power(r):
    plus = power_frac(lax(r), r + 1, r, floor=0).plus()
    expected = PsDO(
        {r + 1: ONE, 1: eps_x(r + 1, -r), 0: eps_const(Fraction(r + 1, 2), -r)},
        ZERO,
    )
    assert plus == expected


def test_whole_powers_are_exact():
    L = lax(3)
    assert power_frac(L, 3, 3) == L
    assert power_frac(L, 6, 3) == compose(L, L)
    assert integer_power(L, 2) == compose(L, L)


@pytest.mark.parametrize("r", [2, 3, 5])
def test_root_reproduces_operator(r):
    rng = random.Random(settings.random_seed + r)
    for _ in range(50):
        A = PsDO({r: ONE, **{n: random_poly(rng) for n in range(r - 1)}}, ZERO)
        powers = root_powers(A, r, -3)
        product = powers[0]
        for _ in range(r - 1):
            product = compose(product, powers[0])
        assert product.floor == -3 + r - 1
        assert product == A.truncate(product.floor)
        assert powers[-1] == product


def test_commutator_residue_is_exact():
    rng = random.Random(settings.random_seed)
    zero = JetPoly()
    for _ in range(20):
        A, B = (
            PsDO({n: random_jet(rng) for n in range(-2, 3)}, zero, floor=-5)
            for _ in range(2)
        )
        res = commutator(A, B).residue()
        assert not variational(res, 0)
        assert not variational(res, 1)


def test_variational_derivative_detects_non_exact_densities():
    f = JetPoly.generator(0, 0)
    assert not variational(f.dx() * JetPoly.generator(1, 0) + f * JetPoly.generator(1, 1), 0)
    assert variational(f * f, 0) == f * 2


def test_inverse():
    A = PsDO({2: ONE, 1: X, 0: X ** 2}, ZERO)
    B = invert(A, -6)
    assert compose(B, A) == PsDO.d(0, ZERO)
    assert B.order == -2


def test_apply_differential_operator():
    assert PsDO.d(2, ZERO).apply(X ** 3) == X * 6
    assert PsDO({1: X, 0: ONE}, ZERO).apply(X ** 2) == X ** 2 * 3


def test_apply_rejects_negative_orders():
    with pytest.raises(NegativeOrderError):
        PsDO.d(-1, ZERO).apply(X)


def test_root_needs_monic_operator():
    with pytest.raises(NonMonicError):
        rth_root(PsDO({2: ONE * 2, 0: X}, ZERO), 2, -2)
    with pytest.raises(NonMonicError):
        rth_root(PsDO({3: ONE, 0: X}, ZERO), 2, -2)


def test_commutator_of_d_and_x():
    assert commutator(PsDO.d(1, ZERO), PsDO.scalar(X, ZERO)) == PsDO.d(0, ZERO)


def test_symbol_calculus():
    assert Symbol.z(3, ZERO).dz() == Symbol.z(2, ZERO, ONE * 3)
    s = Symbol({2: ONE, 0: X}, ZERO)
    assert s.subst_z(X) == X ** 2 + X
    assert s.zdz() == Symbol({2: ONE * 2}, ZERO)
    assert s.dx() == Symbol({0: ONE}, ZERO)
    assert s.to_operator() == PsDO({2: ONE, 0: X}, ZERO)


def test_symbol_substitution_rejects_negative_tail():
    with pytest.raises(SymbolSubstitutionError):
        Symbol({1: ONE, -1: X}, ZERO).subst_z(ONE)


def test_symbol_square_root():
    u = X
    root = Symbol({2: ONE, 0: u}, ZERO).frac_power(1, 2, -3)
    expected = Symbol({1: ONE, -1: u / 2, -3: u ** 2 * Fraction(-1, 8)}, ZERO, floor=-3)
    assert root == expected
    assert root.mul(root, -2) == Symbol({2: ONE, 0: u}, ZERO, floor=-2)
