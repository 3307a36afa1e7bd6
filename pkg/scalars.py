"""
Exact scalar rings: rationals, the cyclotomic extension Q[zeta]/(zeta^{2(r+1)} + r)
and Laurent polynomials in epsilon
"""
from fractions import Fraction
from typing import Any, Dict, Iterable, Optional, Tuple, Union

from exceptions import IncompatibleScalarError, NonInvertibleError, NonRationalValueError

Rational = Fraction
Number = Union[int, Fraction]


class CycScalar:
    """
    Element sum_i c_i zeta^i of Q[zeta]/(zeta^{2(r+1)} + r)

    zeta stands for the fixed root (-r)^{1/(2(r+1))}; sqrt(-r) is zeta^{r+1}.
    Instances are immutable.
    """

    __slots__ = ("r", "coeffs")

    def __init__(self, r: int, coeffs: Iterable[Number]):
        values = tuple(Fraction(c) for c in coeffs)
        size = 2 * (r + 1)
        if len(values) != size:
            raise ValueError(f"CycScalar for r={r} needs {size} coefficients, got {len(values)}")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "coeffs", values)

    def __setattr__(self, key, value):
        raise AttributeError("CycScalar is immutable")

    # Constructors

    @classmethod
    def from_rational(cls, r: int, value: Number) -> "CycScalar":
        size = 2 * (r + 1)
        return cls(r, [Fraction(value)] + [Fraction(0)] * (size - 1))

    @classmethod
    def zeta_power(cls, r: int, k: int, coefficient: Number = 1) -> "CycScalar":
        """coefficient * zeta^k for any integer k, reduced by zeta^{2(r+1)} = -r"""
        size = 2 * (r + 1)
        q, j = divmod(k, size)
        factor = Fraction(-r) ** q
        coeffs = [Fraction(0)] * size
        coeffs[j] = Fraction(coefficient) * factor
        return cls(r, coeffs)

    @classmethod
    def sqrt_minus_r(cls, r: int) -> "CycScalar":
        return cls.zeta_power(r, r + 1)

    # Queries

    @property
    def size(self) -> int:
        return len(self.coeffs)

    def is_rational(self) -> bool:
        return not any(self.coeffs[1:])

    def to_rational(self) -> Fraction:
        if not self.is_rational():
            raise NonRationalValueError(f"value {self} is not rational")
        return self.coeffs[0]

    def _coerce(self, other: Any) -> Optional["CycScalar"]:
        if isinstance(other, CycScalar):
            if other.r != self.r:
                raise IncompatibleScalarError(f"cannot combine r={self.r} with r={other.r}")
            return other
        if isinstance(other, (int, Fraction)):
            return CycScalar.from_rational(self.r, other)
        return None

    # Ring operations

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return CycScalar(self.r, [a + b for a, b in zip(self.coeffs, o.coeffs)])

    __radd__ = __add__

    def __neg__(self):
        return CycScalar(self.r, [-a for a in self.coeffs])

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return CycScalar(self.r, [a - b for a, b in zip(self.coeffs, o.coeffs)])

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return CycScalar(self.r, [a * other for a in self.coeffs])
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        size = self.size
        minus_r = -self.r
        out = [Fraction(0)] * size
        for i, a in enumerate(self.coeffs):
            if not a:
                continue
            for j, b in enumerate(o.coeffs):
                if not b:
                    continue
                k = i + j
                if k >= size:
                    out[k - size] += minus_r * a * b
                else:
                    out[k] += a * b
        return CycScalar(self.r, out)

    __rmul__ = __mul__

    def inverse(self) -> "CycScalar":
        """
        Exact inverse via Gaussian elimination on the multiplication matrix

        Raises:
            NonInvertibleError: if the element is a zero divisor or zero
        """
        size = self.size
        columns = []
        basis = CycScalar.zeta_power(self.r, 0)
        for j in range(size):
            columns.append((self * CycScalar.zeta_power(self.r, j)).coeffs)
        # Row i of the augmented system: sum_j columns[j][i] * x_j = delta_{i0}
        rows = [[columns[j][i] for j in range(size)] + [basis.coeffs[i]] for i in range(size)]
        for col in range(size):
            pivot = next((i for i in range(col, size) if rows[i][col]), None)
            if pivot is None:
                raise NonInvertibleError(f"{self} is not invertible modulo zeta^{size} + {self.r}")
            rows[col], rows[pivot] = rows[pivot], rows[col]
            lead = rows[col][col]
            rows[col] = [v / lead for v in rows[col]]
            for i in range(size):
                if i != col and rows[i][col]:
                    factor = rows[i][col]
                    rows[i] = [a - factor * b for a, b in zip(rows[i], rows[col])]
        return CycScalar(self.r, [rows[i][size] for i in range(size)])

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if not other:
                raise NonInvertibleError("division by zero")
            return CycScalar(self.r, [a / other for a in self.coeffs])
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, exponent: int):
        if exponent < 0:
            return self.inverse() ** (-exponent)
        result = CycScalar.from_rational(self.r, 1)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def __bool__(self):
        return any(self.coeffs)

    def __eq__(self, other):
        try:
            o = self._coerce(other)
        except IncompatibleScalarError:
            return False
        if o is None:
            return NotImplemented
        return self.coeffs == o.coeffs

    def __hash__(self):
        if self.is_rational():
            return hash(self.coeffs[0])
        return hash((self.r, self.coeffs))

    def __repr__(self):
        parts = []
        for i, c in enumerate(self.coeffs):
            if c:
                parts.append(f"{c}" if i == 0 else f"{c}*z^{i}")
        return "CycScalar(" + (" + ".join(parts) if parts else "0") + f"; r={self.r})"


def as_rational(value: Any) -> Fraction:
    """Rational part of a scalar, rejecting genuine zeta components"""
    if isinstance(value, CycScalar):
        return value.to_rational()
    return Fraction(value)


def normalize(value: Any) -> Any:
    """Collapse rational CycScalars and ints to Fraction"""
    if isinstance(value, CycScalar) and value.is_rational():
        return value.coeffs[0]
    if isinstance(value, int):
        return Fraction(value)
    return value


def scalar_to_json(value: Any) -> Dict[str, Any]:
    value = normalize(value)
    if isinstance(value, CycScalar):
        return {
            "r": value.r,
            "zeta_coeffs": [[c.numerator, c.denominator] for c in value.coeffs],
        }
    value = Fraction(value)
    return {"num": value.numerator, "den": value.denominator}


def scalar_from_json(data: Dict[str, Any]) -> Any:
    if "zeta_coeffs" in data:
        return CycScalar(int(data["r"]), [Fraction(n, d) for n, d in data["zeta_coeffs"]])
    return Fraction(int(data["num"]), int(data["den"]))


def scalar_text(value: Any) -> str:
    value = normalize(value)
    if isinstance(value, CycScalar):
        return repr(value)
    return str(Fraction(value))


class EpsLaurent:
    """Laurent polynomial in epsilon with exact scalar coefficients"""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Optional[Dict[int, Any]] = None):
        self.coeffs: Dict[int, Any] = {p: c for p, c in (coeffs or {}).items() if c}

    @property
    def window(self) -> Optional[Tuple[int, int]]:
        if not self.coeffs:
            return None
        return min(self.coeffs), max(self.coeffs)

    def component(self, power: int) -> Any:
        return self.coeffs.get(power, Fraction(0))

    def __add__(self, other: "EpsLaurent") -> "EpsLaurent":
        out = dict(self.coeffs)
        for p, c in other.coeffs.items():
            out[p] = out.get(p, 0) + c
        return EpsLaurent(out)

    def __neg__(self):
        return EpsLaurent({p: -c for p, c in self.coeffs.items()})

    def __sub__(self, other: "EpsLaurent") -> "EpsLaurent":
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, EpsLaurent):
            return EpsLaurent({p: c * other for p, c in self.coeffs.items()})
        out: Dict[int, Any] = {}
        for p, a in self.coeffs.items():
            for q, b in other.coeffs.items():
                out[p + q] = out.get(p + q, 0) + a * b
        return EpsLaurent(out)

    __rmul__ = __mul__

    def __bool__(self):
        return bool(self.coeffs)

    def __eq__(self, other):
        if not isinstance(other, EpsLaurent):
            return NotImplemented
        return not (self - other)

    __hash__ = None

    def __repr__(self):
        body = " + ".join(f"{scalar_text(c)}*eps^{p}" for p, c in sorted(self.coeffs.items()))
        return f"EpsLaurent({body or '0'})"
