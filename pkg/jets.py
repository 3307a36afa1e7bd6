"""
Differential polynomials in the jet generators f[j][k] = d^k f_j of the coefficients of L0
"""
from fractions import Fraction
from typing import Any, Dict, Iterable, Mapping, Optional, Tuple

from exceptions import MissingGeneratorError
from psdo import FractionalPowers, PsDO, Symbol

Generator = Tuple[int, int]
Monomial = Tuple[Tuple[Generator, int], ...]


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    merged: Dict[Generator, int] = dict(a)
    for g, e in b:
        merged[g] = merged.get(g, 0) + e
    return tuple(sorted(merged.items()))


def mono_degree(m: Monomial) -> int:
    """Differential degree: total number of derivatives"""
    return sum(k * e for (_, k), e in m)


class JetPoly:
    """
    Polynomial in f[j][k] with rational coefficients

    With `max_degree` set, monomials of differential degree above it are
    dropped; they span an ideal closed under the derivation, so the quotient
    is again a differential ring.
    """

    __slots__ = ("terms", "max_degree")

    def __init__(self, terms: Optional[Mapping[Monomial, Any]] = None, max_degree: Optional[int] = None):
        self.max_degree = max_degree
        self.terms: Dict[Monomial, Fraction] = {}
        for m, c in (terms or {}).items():
            if c and (max_degree is None or mono_degree(m) <= max_degree):
                self.terms[m] = Fraction(c)

    @classmethod
    def generator(cls, j: int, k: int = 0, max_degree: Optional[int] = None) -> "JetPoly":
        return cls({(((j, k), 1),): 1}, max_degree)

    @classmethod
    def constant(cls, value: Any, max_degree: Optional[int] = None) -> "JetPoly":
        return cls({(): value}, max_degree)

    def _coerce(self, other: Any) -> Optional["JetPoly"]:
        if isinstance(other, JetPoly):
            return other
        if isinstance(other, (int, Fraction)):
            return JetPoly.constant(other, self.max_degree)
        return None

    def _cap(self, other: "JetPoly") -> Optional[int]:
        caps = [c for c in (self.max_degree, other.max_degree) if c is not None]
        return min(caps) if caps else None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        out = dict(self.terms)
        for m, c in o.terms.items():
            out[m] = out.get(m, 0) + c
        return JetPoly(out, self._cap(o))

    __radd__ = __add__

    def __neg__(self):
        return JetPoly({m: -c for m, c in self.terms.items()}, self.max_degree)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return JetPoly({m: c * other for m, c in self.terms.items()}, self.max_degree)
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        cap = self._cap(o)
        out: Dict[Monomial, Fraction] = {}
        for ma, ca in self.terms.items():
            da = mono_degree(ma)
            for mb, cb in o.terms.items():
                if cap is not None and da + mono_degree(mb) > cap:
                    continue
                m = _mono_mul(ma, mb)
                out[m] = out.get(m, 0) + ca * cb
        return JetPoly(out, cap)

    __rmul__ = __mul__

    def dx(self) -> "JetPoly":
        """Derivation f[j][k] -> f[j][k+1]"""
        out: Dict[Monomial, Fraction] = {}
        for m, c in self.terms.items():
            for idx, ((j, k), e) in enumerate(m):
                rest = m[:idx] + ((((j, k), e - 1),) if e > 1 else ()) + m[idx + 1:]
                new = _mono_mul(rest, (((j, k + 1), 1),))
                out[new] = out.get(new, 0) + c * e
        return JetPoly(out, self.max_degree)

    def degree_part(self, m: int) -> "JetPoly":
        return JetPoly({mono: c for mono, c in self.terms.items() if mono_degree(mono) == m}, self.max_degree)

    def generators(self) -> set:
        return {g for m in self.terms for g, _ in m}

    def substitute(self, values: Mapping[Generator, Any], zero: Any) -> Any:
        """
        Evaluate with f[j][k] -> values[(j, k)]

        Raises:
            MissingGeneratorError: if a generator has no value
        """
        missing = self.generators() - set(values)
        if missing:
            raise MissingGeneratorError(f"no value for generators {sorted(missing)}")
        powers: Dict[Tuple[Generator, int], Any] = {}

        def power(g: Generator, e: int) -> Any:
            key = (g, e)
            if key not in powers:
                powers[key] = values[g] if e == 1 else power(g, e - 1) * values[g]
            return powers[key]

        result = zero
        for m, c in self.terms.items():
            term = zero + c
            for g, e in m:
                term = term * power(g, e)
            result = result + term
        return result

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        o = self._coerce(other) if not isinstance(other, JetPoly) else other
        if o is None:
            return NotImplemented
        return not (self - o)

    __hash__ = None

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for m, c in sorted(self.terms.items()):
            mono = "*".join(f"f{j}_{k}" + (f"^{e}" if e > 1 else "") for (j, k), e in m)
            parts.append(f"{c}*{mono}" if mono else f"{c}")
        return " + ".join(parts)


def jet_L0(r: int, max_degree: Optional[int] = 1) -> PsDO:
    """L0 = d^r + sum_{j<=r-2} f[j][0] d^j over jets"""
    zero = JetPoly(max_degree=max_degree)
    coeffs: Dict[int, Any] = {r: zero + 1}
    for j in range(r - 1):
        coeffs[j] = JetPoly.generator(j, 0, max_degree)
    return PsDO(coeffs, zero, order=r)


def jet_L0_symbol(r: int, max_degree: Optional[int] = 1) -> Symbol:
    return jet_L0(r, max_degree).to_symbol()


def jet_power(a: int, r: int, floor: int, max_degree: Optional[int] = 1) -> Symbol:
    """
    Symbol of the operator power L0^{a/r} over jets

    Args:
        a: Numerator of the exponent (may be negative)
        r: Order of L0
        floor: Lowest power of z to determine
        max_degree: Differential-degree cap for the jet polynomials

    Returns:
        Symbol with JetPoly coefficients
    """
    L0 = jet_L0(r, max_degree)
    return FractionalPowers(L0, r, floor).get(a, floor).to_symbol()


def diff_degree_part(J: Symbol, m: int, plus_only: bool = False) -> Symbol:
    """Keep the monomials of differential degree m, optionally only the z^{i>=0} terms"""
    part = J.map(lambda c: c.degree_part(m))
    return part.plus_part() if plus_only else part


def substitute_jets(J: Symbol, values: Mapping[Generator, Any], zero: Any) -> Symbol:
    """Replace every jet generator by a concrete coefficient series"""
    return Symbol(
        {n: c.substitute(values, zero) for n, c in J.coeffs.items()},
        zero,
        J.floor,
        J.order,
    )


def jet_values(L0: PsDO, r: int, max_k: int) -> Dict[Generator, Any]:
    """f[j][k] -> d^k of the order-j coefficient of a concrete L0"""
    values: Dict[Generator, Any] = {}
    for j in range(r - 1):
        current = L0.coeff(j)
        for k in range(max_k + 1):
            values[(j, k)] = current
            current = current.dx()
    return values


def generators_needed(J: Symbol) -> Iterable[Generator]:
    found = set()
    for c in J.coeffs.values():
        found |= c.generators()
    return sorted(found)
