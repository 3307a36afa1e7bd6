"""
Pseudo-differential operators and their symbols over a differential coefficient ring

A coefficient ring is anything with +, -, * (commutative), multiplication by
int/Fraction and a derivation `.dx()` (x = T1). TSeries and JetPoly both qualify.
"""
import threading
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Tuple

from exceptions import (
    InsufficientDepthError,
    NegativeOrderError,
    NonMonicError,
    SymbolSubstitutionError,
)
from logger import setup_logger

logger = setup_logger(__name__)


def _max_floor(*floors: Optional[int]) -> Optional[int]:
    known = [f for f in floors if f is not None]
    return max(known) if known else None


class _Derivatives:
    """Lazily cached x-derivatives of operator coefficients"""

    def __init__(self, coeffs: Dict[int, Any]):
        self._coeffs = coeffs
        self._cache: Dict[int, List[Any]] = {}

    def get(self, key: int, times: int) -> Any:
        chain = self._cache.get(key)
        if chain is None:
            chain = self._cache[key] = [self._coeffs[key]]
        while len(chain) <= times:
            chain.append(chain[-1].dx())
        return chain[times]


class PsDO:
    """
    Operator sum_n a_n d^n with orders n <= order

    `floor` is the lowest order whose coefficient is known exactly;
    None marks a finite operator known completely.
    """

    __slots__ = ("coeffs", "zero", "floor", "order")

    def __init__(self, coeffs: Dict[int, Any], zero: Any, floor: Optional[int] = None, order: Optional[int] = None):
        self.zero = zero
        self.floor = floor
        self.coeffs: Dict[int, Any] = {
            n: c for n, c in coeffs.items() if c and (floor is None or n >= floor)
        }
        if order is None:
            order = max(self.coeffs) if self.coeffs else (floor if floor is not None else 0)
        self.order = order

    # Constructors

    @classmethod
    def d(cls, k: int, zero: Any, coefficient: Any = None) -> "PsDO":
        """coefficient * d^k (coefficient defaults to 1)"""
        c = zero + 1 if coefficient is None else coefficient
        return cls({k: c}, zero, order=k)

    @classmethod
    def scalar(cls, value: Any, zero: Any) -> "PsDO":
        return cls({0: value}, zero, order=0)

    # Access

    def coeff(self, n: int) -> Any:
        if self.floor is not None and n < self.floor:
            raise InsufficientDepthError(f"order {n} is below the known floor {self.floor}")
        return self.coeffs.get(n, self.zero)

    def plus(self) -> "PsDO":
        if self.floor is not None and self.floor > 0:
            raise InsufficientDepthError(f"plus part needs floor <= 0, have {self.floor}")
        return PsDO({n: c for n, c in self.coeffs.items() if n >= 0}, self.zero, None, self.order)

    def minus(self) -> "PsDO":
        return PsDO({n: c for n, c in self.coeffs.items() if n < 0}, self.zero, self.floor, min(self.order, -1))

    def split(self) -> Tuple["PsDO", "PsDO"]:
        return self.plus(), self.minus()

    def residue(self) -> Any:
        return self.coeff(-1)

    def map(self, fn: Callable[[Any], Any], zero: Any = None) -> "PsDO":
        """Apply fn to every coefficient"""
        z = fn(self.zero) if zero is None else zero
        return PsDO({n: fn(c) for n, c in self.coeffs.items()}, z, self.floor, self.order)

    def dx(self) -> "PsDO":
        """Termwise x-derivative of the coefficients"""
        return self.map(lambda c: c.dx())

    def truncate(self, floor: int) -> "PsDO":
        return PsDO(self.coeffs, self.zero, _max_floor(self.floor, floor), self.order)

    def is_differential(self) -> bool:
        return self.floor is None and all(n >= 0 for n in self.coeffs)

    # Arithmetic

    def __add__(self, other: "PsDO") -> "PsDO":
        if not isinstance(other, PsDO):
            return NotImplemented
        out = dict(self.coeffs)
        for n, c in other.coeffs.items():
            out[n] = out[n] + c if n in out else c
        return PsDO(out, self.zero, _max_floor(self.floor, other.floor), max(self.order, other.order))

    def __neg__(self) -> "PsDO":
        return PsDO({n: -c for n, c in self.coeffs.items()}, self.zero, self.floor, self.order)

    def __sub__(self, other: "PsDO") -> "PsDO":
        if not isinstance(other, PsDO):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, PsDO):
            return compose(self, other)
        return PsDO({n: c * other for n, c in self.coeffs.items()}, self.zero, self.floor, self.order)

    def __rmul__(self, other):
        return PsDO({n: other * c for n, c in self.coeffs.items()}, self.zero, self.floor, self.order)

    def __bool__(self):
        return bool(self.coeffs)

    def __eq__(self, other):
        if not isinstance(other, PsDO):
            return NotImplemented
        return not (self - other)

    __hash__ = None

    def apply(self, f: Any) -> Any:
        return apply_diffop(self, f)

    def to_symbol(self) -> "Symbol":
        return Symbol(self.coeffs, self.zero, self.floor, self.order)

    def __repr__(self):
        body = " + ".join(f"({c})*d^{n}" for n, c in sorted(self.coeffs.items(), reverse=True))
        return f"PsDO({body or '0'}; floor={self.floor})"

    def to_json(self) -> Dict[str, Any]:
        return {
            "order": self.order,
            "floor": self.floor,
            "coefficients": [
                {"order": n, "series": c.to_json()} for n, c in sorted(self.coeffs.items(), reverse=True)
            ],
        }


def compose(A: PsDO, B: PsDO, floor: Optional[int] = None) -> PsDO:
    """
    A o B by d^k o f = sum_l binom(k, l) f^{(l)} d^{k-l}

    Args:
        A: Left factor
        B: Right factor
        floor: Lowest order to compute; raised to the natural floor of the factors

    Returns:
        The product, exact down to its floor

    Raises:
        InsufficientDepthError: if A has negative orders and no floor is available
    """
    natural = _max_floor(
        A.floor + B.order if A.floor is not None else None,
        B.floor + A.order if B.floor is not None else None,
    )
    floor = _max_floor(floor, natural)
    if floor is None and any(k < 0 for k in A.coeffs):
        raise InsufficientDepthError("composition with a negative-order left factor needs a floor")

    derivs = _Derivatives(B.coeffs)
    out: Dict[int, Any] = {}
    for k, a in A.coeffs.items():
        for m in B.coeffs:
            binom = 1
            l = 0
            while True:
                n = k + m - l
                if floor is not None and n < floor:
                    break
                if k >= 0 and l > k:
                    break
                d = derivs.get(m, l)
                if not d:
                    break
                term = a * d
                if binom != 1:
                    term = term * binom
                out[n] = out[n] + term if n in out else term
                l += 1
                binom = binom * (k - l + 1) // l
    return PsDO(out, A.zero, floor, A.order + B.order)


def _coefficient_of_product(P: Dict[int, Any], Q: Dict[int, Any], j: int, derivs: _Derivatives, zero: Any) -> Any:
    """Coefficient of d^j in P o Q for finitely supported P, Q"""
    total = zero
    for k, p in P.items():
        for m in Q:
            l = k + m - j
            if l < 0 or (k >= 0 and l > k):
                continue
            d = derivs.get(m, l)
            if not d:
                continue
            binom = 1
            for i in range(1, l + 1):
                binom = binom * (k - i + 1) // i
            total = total + (p * d) * binom
    return total


def split(A: PsDO) -> Tuple[PsDO, PsDO]:
    return A.split()


def residue(A: PsDO) -> Any:
    return A.residue()


def _check_monic(A: PsDO, order: int) -> None:
    lead = A.coeffs.get(order)
    if A.order != order or lead is None or lead != 1 or any(n > order for n in A.coeffs):
        raise NonMonicError(f"expected a monic operator of order {order}")


def root_powers(A: PsDO, r: int, floor: int) -> List[PsDO]:
    """
    R = A^{1/r} and its powers R^1..R^r by order matching

    Each level n fixes the coefficient of d^{-n} in R from the order r-1-n
    coefficient of A; R^s is known exactly down to floor + s - 1.

    Args:
        A: Monic operator of order r
        r: Root degree
        floor: Lowest order of R to determine

    Returns:
        [R, R^2, ..., R^r]
    """
    _check_monic(A, r)
    if A.floor is not None:
        floor = max(floor, A.floor - r + 1)
    zero = A.zero
    one = zero + 1
    R: Dict[int, Any] = {1: one}
    powers: List[Dict[int, Any]] = [R] + [{s: one} for s in range(2, r + 1)]
    derivs = _Derivatives(R)
    for n in range(0, 1 - floor):
        # P_s at order s-1-n with the new root coefficient still set to zero
        for s in range(2, r + 1):
            prev = powers[s - 2]
            powers[s - 1][s - 1 - n] = _coefficient_of_product(prev, R, s - 1 - n, derivs, zero)
        value = (A.coeff(r - 1 - n) - powers[r - 1][r - 1 - n]) * Fraction(1, r)
        R[-n] = value
        for s in range(2, r + 1):
            powers[s - 1][s - 1 - n] = powers[s - 1][s - 1 - n] + value * s
    logger.debug(f"root of order {r} computed down to d^{floor}")
    return [PsDO(P, zero, floor + s - 1, s) for s, P in enumerate(powers, start=1)]


def rth_root(A: PsDO, r: int, floor: int) -> PsDO:
    return root_powers(A, r, floor)[0]


def integer_power(A: PsDO, q: int) -> PsDO:
    result = PsDO.d(0, A.zero)
    for _ in range(q):
        result = compose(result, A)
    return result


def invert(A: PsDO, floor: int) -> PsDO:
    """
    Inverse of a monic operator of non-negative order by order matching

    Args:
        A: Monic operator d^m + ...
        floor: Lowest order of the inverse to determine

    Returns:
        B = d^{-m} + sum_{i>=1} b_i d^{-m-i} with B o A = 1
    """
    m = A.order
    _check_monic(A, m)
    if A.floor is not None:
        floor = max(floor, A.floor - 2 * m)
    zero = A.zero
    B: Dict[int, Any] = {-m: zero + 1}
    derivs = _Derivatives(A.coeffs)
    for i in range(1, -m - floor + 1):
        B[-m - i] = -_coefficient_of_product(B, A.coeffs, -i, derivs, zero)
    return PsDO(B, zero, floor, -m)


class FractionalPowers:
    """Thread-safe cache of A^{n/r} for one monic operator A of order r"""

    def __init__(self, A: PsDO, r: int, floor: int):
        self.A = A
        self.r = r
        self.floor = floor
        self._roots: Dict[int, List[PsDO]] = {}
        self._integer: List[PsDO] = [PsDO.d(0, A.zero), A]
        self._results: Dict[Tuple[int, int], PsDO] = {}
        self._lock = threading.RLock()

    def _integer_power(self, q: int) -> PsDO:
        while len(self._integer) <= q:
            self._integer.append(compose(self._integer[-1], self.A))
        return self._integer[q]

    def _root_powers(self, root_floor: int) -> List[PsDO]:
        for cached_floor, powers in self._roots.items():
            if cached_floor <= root_floor:
                return powers
        powers = root_powers(self.A, self.r, root_floor)
        self._roots[root_floor] = powers
        return powers

    def get(self, n: int, floor: Optional[int] = None) -> PsDO:
        """
        A^{n/r} exact down to `floor` (default: the cache floor)

        Raises:
            InsufficientDepthError: if A is truncated too high for the request
        """
        floor = self.floor if floor is None else floor
        with self._lock:
            key = (n, floor)
            if key not in self._results:
                self._results[key] = self._compute(n, floor)
            return self._results[key]

    def _compute(self, n: int, floor: int) -> PsDO:
        r = self.r
        if n < 0:
            positive = self.get(-n, floor + 2 * (-n))
            return invert(positive, floor)
        q, s = divmod(n, r)
        if s == 0:
            return self._integer_power(q)
        part = self._root_powers(floor - n + 1)[s - 1]
        if q == 0:
            return part.truncate(floor)
        return compose(self._integer_power(q), part, floor)


def power_frac(A: PsDO, n: int, r: int, floor: int = 0) -> PsDO:
    """A^{n/r}; n divisible by r gives the exact integer power"""
    return FractionalPowers(A, r, floor).get(n, floor)


def apply_diffop(A: PsDO, f: Any) -> Any:
    """sum_n a_n d^n f for a differential operator"""
    if not A.is_differential():
        raise NegativeOrderError("only differential operators can act on series")
    result = f * 0
    derivative = f
    for n in range(0, max(A.coeffs, default=-1) + 1):
        if n:
            derivative = derivative.dx()
        c = A.coeffs.get(n)
        if c is not None:
            result = result + c * derivative
    return result


class Symbol:
    """Commutative Laurent series sum_i c_i z^i with the same floor discipline as PsDO"""

    __slots__ = ("coeffs", "zero", "floor", "order")

    def __init__(self, coeffs: Dict[int, Any], zero: Any, floor: Optional[int] = None, order: Optional[int] = None):
        self.zero = zero
        self.floor = floor
        self.coeffs: Dict[int, Any] = {
            n: c for n, c in coeffs.items() if c and (floor is None or n >= floor)
        }
        if order is None:
            order = max(self.coeffs) if self.coeffs else (floor if floor is not None else 0)
        self.order = order

    @classmethod
    def z(cls, k: int, zero: Any, coefficient: Any = None) -> "Symbol":
        c = zero + 1 if coefficient is None else coefficient
        return cls({k: c}, zero, order=k)

    def coeff(self, n: int) -> Any:
        if self.floor is not None and n < self.floor:
            raise InsufficientDepthError(f"z^{n} is below the known floor {self.floor}")
        return self.coeffs.get(n, self.zero)

    def __add__(self, other):
        if not isinstance(other, Symbol):
            return NotImplemented
        out = dict(self.coeffs)
        for n, c in other.coeffs.items():
            out[n] = out[n] + c if n in out else c
        return Symbol(out, self.zero, _max_floor(self.floor, other.floor), max(self.order, other.order))

    def __neg__(self):
        return Symbol({n: -c for n, c in self.coeffs.items()}, self.zero, self.floor, self.order)

    def __sub__(self, other):
        if not isinstance(other, Symbol):
            return NotImplemented
        return self + (-other)

    def mul(self, other: "Symbol", floor: Optional[int] = None) -> "Symbol":
        natural = _max_floor(
            self.floor + other.order if self.floor is not None else None,
            other.floor + self.order if other.floor is not None else None,
        )
        floor = _max_floor(floor, natural)
        out: Dict[int, Any] = {}
        for i, a in self.coeffs.items():
            for j, b in other.coeffs.items():
                n = i + j
                if floor is not None and n < floor:
                    continue
                term = a * b
                out[n] = out[n] + term if n in out else term
        return Symbol(out, self.zero, floor, self.order + other.order)

    def __mul__(self, other):
        if isinstance(other, Symbol):
            return self.mul(other)
        return Symbol({n: c * other for n, c in self.coeffs.items()}, self.zero, self.floor, self.order)

    def __rmul__(self, other):
        return Symbol({n: other * c for n, c in self.coeffs.items()}, self.zero, self.floor, self.order)

    def __bool__(self):
        return bool(self.coeffs)

    def __eq__(self, other):
        if not isinstance(other, Symbol):
            return NotImplemented
        return not (self - other)

    __hash__ = None

    def map(self, fn: Callable[[Any], Any], zero: Any = None) -> "Symbol":
        z = fn(self.zero) if zero is None else zero
        return Symbol({n: fn(c) for n, c in self.coeffs.items()}, z, self.floor, self.order)

    def dz(self) -> "Symbol":
        return Symbol(
            {n - 1: c * n for n, c in self.coeffs.items() if n},
            self.zero,
            self.floor - 1 if self.floor is not None else None,
            self.order - 1,
        )

    def dx(self) -> "Symbol":
        return self.map(lambda c: c.dx())

    def zdz(self) -> "Symbol":
        return Symbol({n: c * n for n, c in self.coeffs.items()}, self.zero, self.floor, self.order)

    def plus_part(self) -> "Symbol":
        if self.floor is not None and self.floor > 0:
            raise InsufficientDepthError(f"plus part needs floor <= 0, have {self.floor}")
        return Symbol({n: c for n, c in self.coeffs.items() if n >= 0}, self.zero, None, self.order)

    def minus_part(self) -> "Symbol":
        return Symbol({n: c for n, c in self.coeffs.items() if n < 0}, self.zero, self.floor, min(self.order, -1))

    def truncate(self, floor: int) -> "Symbol":
        return Symbol(self.coeffs, self.zero, _max_floor(self.floor, floor), self.order)

    def subst_z(self, value: Any) -> Any:
        """
        Evaluate at z = value

        Raises:
            SymbolSubstitutionError: if the symbol has a negative tail
        """
        if self.floor is not None or any(n < 0 for n in self.coeffs):
            raise SymbolSubstitutionError("cannot substitute into a symbol with negative powers of z")
        result = self.zero
        # Horner scheme from the top order
        top = max(self.coeffs, default=0)
        for n in range(top, -1, -1):
            result = result * value + self.coeffs.get(n, self.zero)
        return result

    def to_operator(self) -> PsDO:
        """z -> d with coefficients on the left"""
        return PsDO(self.coeffs, self.zero, self.floor, self.order)

    def frac_power(self, numerator: int, r: int, floor: int) -> "Symbol":
        """
        Commutative power S^{numerator/r} of a monic symbol of order r

        S = z^r (1 + w) and S^{a/r} = z^a sum_k binom(a/r, k) w^k.
        """
        lead = self.coeffs.get(r)
        if self.order != r or lead is None or lead != 1:
            raise NonMonicError(f"expected a monic symbol of order {r}")
        exponent = Fraction(numerator, r)
        w = Symbol(
            {n - r: c for n, c in self.coeffs.items() if n < r},
            self.zero,
            self.floor - r if self.floor is not None else None,
            -1,
        )
        one = self.zero + 1
        result: Dict[int, Any] = {numerator: one}
        power = Symbol({0: one}, self.zero, order=0)
        binom = Fraction(1)
        k = 0
        while True:
            k += 1
            if numerator - k < floor:
                break
            binom = binom * (exponent - k + 1) / k
            if not binom:
                break
            power = power.mul(w, floor - numerator)
            for n, c in power.coeffs.items():
                key = n + numerator
                term = c * binom
                result[key] = result[key] + term if key in result else term
        return Symbol(result, self.zero, _max_floor(floor, (self.floor - r + numerator) if self.floor is not None else None), numerator)

    def __repr__(self):
        body = " + ".join(f"({c})*z^{n}" for n, c in sorted(self.coeffs.items(), reverse=True))
        return f"Symbol({body or '0'}; floor={self.floor})"


def symbol_ops(symbol: Symbol, op: str, value: Any = None) -> Any:
    if op == "dz":
        return symbol.dz()
    if op == "dx":
        return symbol.dx()
    if op == "subst_z":
        return symbol.subst_z(value)
    if op == "plus_part":
        return symbol.plus_part()
    raise ValueError(f"unknown symbol operation {op!r}")


def commutator(A: PsDO, B: PsDO, floor: Optional[int] = None) -> PsDO:
    return compose(A, B, floor) - compose(B, A, floor)
