"""
Truncated multivariate formal power series over Laurent polynomials in epsilon
"""
import operator
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from exceptions import IncompatibleSeriesError, SeriesDomainError, SubstitutionError
from scalars import CycScalar, EpsLaurent, normalize, scalar_from_json, scalar_text, scalar_to_json

SCALAR_TYPES = (int, Fraction, CycScalar)

# A term key is (eps_power, e_1, ..., e_n)
Key = Tuple[int, ...]


@dataclass(frozen=True)
class VarIndex:
    """A formal variable: T_n, t^alpha_d or the boundary variable s"""

    kind: str
    n: int = 0
    alpha: int = 0
    d: int = 0

    def __post_init__(self):
        if self.kind not in ("T", "t", "s"):
            raise ValueError(f"unknown variable kind {self.kind!r}")
        if self.kind == "T" and self.n < 1:
            raise ValueError(f"T-variables start at T1, got T{self.n}")
        if self.kind == "t" and (self.alpha < 0 or self.d < 0):
            raise ValueError(f"invalid t-variable t^{self.alpha}_{self.d}")

    @classmethod
    def T(cls, n: int) -> "VarIndex":
        return cls("T", n=n)

    @classmethod
    def t(cls, alpha: int, d: int) -> "VarIndex":
        return cls("t", alpha=alpha, d=d)

    @classmethod
    def s(cls) -> "VarIndex":
        return cls("s")

    @property
    def name(self) -> str:
        if self.kind == "T":
            return f"T{self.n}"
        if self.kind == "t":
            return f"t{self.alpha}_{self.d}"
        return "s"

    @classmethod
    def parse(cls, name: str) -> "VarIndex":
        if name == "s":
            return cls.s()
        if name.startswith("T"):
            return cls.T(int(name[1:]))
        if name.startswith("t"):
            alpha, d = name[1:].split("_")
            return cls.t(int(alpha), int(d))
        raise ValueError(f"cannot parse variable name {name!r}")

    def __repr__(self):
        return self.name


class SeriesSpace:
    """Ordered variables with non-negative integer weights"""

    __slots__ = ("vars", "weights", "_index", "x")

    def __init__(
        self,
        variables: Sequence[VarIndex],
        weights: Optional[Sequence[int]] = None,
        x: Optional[VarIndex] = None
    ):
        self.vars: Tuple[VarIndex, ...] = tuple(variables)
        self.weights: Tuple[int, ...] = tuple(weights) if weights is not None else (1,) * len(self.vars)
        if len(self.weights) != len(self.vars):
            raise ValueError("one weight per variable is required")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be non-negative")
        self._index = {v: i for i, v in enumerate(self.vars)}
        if len(self._index) != len(self.vars):
            raise ValueError("duplicate variables in series space")
        if x is None and VarIndex.T(1) in self._index:
            x = VarIndex.T(1)
        self.x = x

    @classmethod
    def for_times(cls, times: int) -> "SeriesSpace":
        """T1..TN with x = T1 of weight 0 and the higher times of weight 1"""
        variables = [VarIndex.T(n) for n in range(1, times + 1)]
        weights = [0] + [1] * (times - 1)
        return cls(variables, weights, x=VarIndex.T(1))

    def index(self, var: VarIndex) -> int:
        try:
            return self._index[var]
        except KeyError:
            raise IncompatibleSeriesError(f"variable {var} is not in {self}") from None

    def __contains__(self, var: VarIndex) -> bool:
        return var in self._index

    def weight(self, var: VarIndex) -> int:
        return self.weights[self.index(var)]

    def wdeg(self, key: Key) -> int:
        return sum(w * e for w, e in zip(self.weights, key[1:]))

    def __len__(self):
        return len(self.vars)

    def __eq__(self, other):
        if not isinstance(other, SeriesSpace):
            return NotImplemented
        return self.vars == other.vars and self.weights == other.weights and self.x == other.x

    def __hash__(self):
        return hash((self.vars, self.weights, self.x))

    def __repr__(self):
        body = ", ".join(f"{v.name}:{w}" for v, w in zip(self.vars, self.weights))
        return f"SeriesSpace({body})"


def _prune(terms: Dict[Key, Any]) -> Dict[Key, Any]:
    return {k: v for k, v in terms.items() if v}


class TSeries:
    """
    Truncated power series in the variables of a SeriesSpace

    Every coefficient is exact; terms of weighted degree above `cap` are
    unknown and never stored. Coefficients are Fraction or CycScalar values
    attached to a power of epsilon.
    """

    __slots__ = ("space", "cap", "terms")

    def __init__(self, space: SeriesSpace, cap: int, terms: Optional[Mapping[Key, Any]] = None, trusted: bool = False):
        self.space = space
        self.cap = cap
        if terms is None:
            self.terms: Dict[Key, Any] = {}
        elif trusted:
            self.terms = dict(terms)
        else:
            width = len(space) + 1
            cleaned = {}
            for k, v in terms.items():
                if len(k) != width:
                    raise IncompatibleSeriesError(f"key {k} does not match {space}")
                if v and space.wdeg(k) <= cap:
                    cleaned[k] = normalize(v)
            self.terms = cleaned

    # Constructors

    @classmethod
    def zero(cls, space: SeriesSpace, cap: int) -> "TSeries":
        return cls(space, cap, trusted=True)

    @classmethod
    def constant(cls, space: SeriesSpace, cap: int, value: Any, eps: int = 0) -> "TSeries":
        key = (eps,) + (0,) * len(space)
        return cls(space, cap, {key: value})

    @classmethod
    def variable(cls, space: SeriesSpace, var: VarIndex, cap: int, coefficient: Any = 1, eps: int = 0) -> "TSeries":
        exps = [0] * len(space)
        exps[space.index(var)] = 1
        return cls(space, cap, {(eps,) + tuple(exps): coefficient})

    @classmethod
    def monomial(cls, space: SeriesSpace, cap: int, exponents: Mapping[VarIndex, int], coefficient: Any = 1, eps: int = 0) -> "TSeries":
        exps = [0] * len(space)
        for var, e in exponents.items():
            exps[space.index(var)] += e
        return cls(space, cap, {(eps,) + tuple(exps): coefficient})

    # Helpers

    def _like(self, terms: Dict[Key, Any], cap: Optional[int] = None) -> "TSeries":
        return TSeries(self.space, self.cap if cap is None else cap, terms)

    def _coerce(self, other: Any) -> Optional["TSeries"]:
        if isinstance(other, TSeries):
            if other.space != self.space:
                raise IncompatibleSeriesError(f"{self.space} vs {other.space}")
            return other
        if isinstance(other, SCALAR_TYPES):
            return TSeries.constant(self.space, self.cap, other)
        return None

    # Arithmetic

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        cap = min(self.cap, o.cap)
        out = dict(self.terms)
        for k, v in o.terms.items():
            out[k] = out[k] + v if k in out else v
        return TSeries(self.space, cap, out)

    __radd__ = __add__

    def __neg__(self):
        return TSeries(self.space, self.cap, {k: -v for k, v in self.terms.items()}, trusted=True)

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
        if isinstance(other, SCALAR_TYPES):
            if not other:
                return TSeries.zero(self.space, self.cap)
            return TSeries(self.space, self.cap, {k: v * other for k, v in self.terms.items()})
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        cap = min(self.cap, o.cap)
        return TSeries(self.space, cap, _mul_terms(self.terms, o.terms, self.space, cap), trusted=True)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        if isinstance(other, int):
            other = Fraction(other)
        if isinstance(other, Fraction):
            return self * (1 / other)
        if isinstance(other, CycScalar):
            return self * other.inverse()
        return NotImplemented

    def __pow__(self, exponent: int) -> "TSeries":
        if exponent < 0:
            raise SeriesDomainError("negative powers of a series are not supported")
        result = TSeries.constant(self.space, self.cap, 1)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            exponent >>= 1
            if exponent:
                base = base * base
        return result

    def shift_eps(self, power: int) -> "TSeries":
        """Multiply by eps^power"""
        if power == 0:
            return self
        return TSeries(self.space, self.cap, {(k[0] + power,) + k[1:]: v for k, v in self.terms.items()}, trusted=True)

    # Calculus

    def diff(self, var: VarIndex, times: int = 1) -> "TSeries":
        i = self.space.index(var) + 1
        w = self.space.weights[i - 1]
        result = self
        for _ in range(times):
            out = {}
            for k, v in result.terms.items():
                e = k[i]
                if e:
                    out[k[:i] + (e - 1,) + k[i + 1:]] = v * e
            result = TSeries(self.space, result.cap - w, out, trusted=True)
        return result

    def dx(self) -> "TSeries":
        if self.space.x is None:
            raise IncompatibleSeriesError(f"{self.space} has no distinguished x variable")
        return self.diff(self.space.x)

    def integrate(self, var: VarIndex) -> "TSeries":
        """Antiderivative in `var` with zero constant term in that variable"""
        i = self.space.index(var) + 1
        w = self.space.weights[i - 1]
        out = {}
        for k, v in self.terms.items():
            e = k[i]
            out[k[:i] + (e + 1,) + k[i + 1:]] = v / (e + 1)
        return TSeries(self.space, self.cap + w, out)

    def eps_derivative(self) -> "TSeries":
        """eps * d/deps"""
        return TSeries(self.space, self.cap, {k: v * k[0] for k, v in self.terms.items() if k[0]}, trusted=True)

    def euler(self, variables: Optional[Iterable[VarIndex]] = None) -> "TSeries":
        """sum_i v_i d/dv_i over the given variables (all by default)"""
        if variables is None:
            idx = list(range(1, len(self.space) + 1))
        else:
            idx = [self.space.index(v) + 1 for v in variables]
        out = {}
        for k, v in self.terms.items():
            total = sum(k[i] for i in idx)
            if total:
                out[k] = v * total
        return TSeries(self.space, self.cap, out, trusted=True)

    def exp(self) -> "TSeries":
        if self.degree_part(0):
            raise SeriesDomainError("exp needs a series without weighted-degree-0 part")
        result = TSeries.constant(self.space, self.cap, 1)
        power = result
        k = 0
        while True:
            k += 1
            power = power * self
            if not power:
                break
            result = result + power * Fraction(1, factorial(k))
        return result

    def log(self) -> "TSeries":
        head = self.degree_part(0)
        if head != TSeries.constant(self.space, self.cap, 1):
            raise SeriesDomainError("log needs the weighted-degree-0 part to be exactly 1")
        u = self - 1
        result = TSeries.zero(self.space, self.cap)
        power = TSeries.constant(self.space, self.cap, 1)
        k = 0
        while True:
            k += 1
            power = power * u
            if not power:
                break
            sign = 1 if k % 2 else -1
            result = result + power * Fraction(sign, k)
        return result

    # Substitution

    def subst(self, mapping: Mapping[VarIndex, "TSeries"], target: Optional[SeriesSpace] = None) -> "TSeries":
        """
        Substitute variables by series in a target space

        Args:
            mapping: Image of each substituted variable
            target: Target space (defaults to the source space); unmapped
                variables must exist in it and map to themselves

        Returns:
            The composed series, exact up to the smallest cap involved

        Raises:
            SubstitutionError: if an image contains a term of lower weight than its
                variable, or raises the weight of a source term beyond the cap
        """
        target = target or self.space
        images: List[TSeries] = []
        raises: List[int] = []
        cap = self.cap
        for var, w in zip(self.space.vars, self.space.weights):
            if var in mapping:
                image = mapping[var]
                if image.space != target:
                    raise IncompatibleSeriesError(f"image of {var} lives in {image.space}, expected {target}")
            else:
                image = TSeries.variable(target, var, self.cap)
            for k in image.terms:
                if target.wdeg(k) < w:
                    raise SubstitutionError(f"image of {var} has a term of weight {target.wdeg(k)} < {w}")
            images.append(image)
            raises.append(max((target.wdeg(k) - w for k in image.terms), default=0))
            cap = min(cap, image.cap)
        powers: List[List[TSeries]] = [[TSeries.constant(target, cap, 1)] for _ in images]

        def power(i: int, e: int) -> TSeries:
            cache = powers[i]
            while len(cache) <= e:
                cache.append(cache[-1] * images[i])
            return cache[e]

        out: Dict[Key, Any] = {}
        for k, v in self.terms.items():
            if any(e and up for e, up in zip(k[1:], raises)):
                top = sum(e * (w + up) for e, w, up in zip(k[1:], self.space.weights, raises))
                if top > cap:
                    raise SubstitutionError(
                        f"substituting into {self.monomial_text(k)} reaches weight {top} beyond cap {cap}"
                    )
            prod = TSeries.constant(target, cap, v, eps=k[0])
            for i, e in enumerate(k[1:]):
                if e:
                    prod = prod * power(i, e)
                    if not prod:
                        break
            for pk, pv in prod.terms.items():
                out[pk] = out[pk] + pv if pk in out else pv
        return TSeries(target, cap, out)

    # Slicing

    def eps_coefficient(self, power: int) -> "TSeries":
        return TSeries(self.space, self.cap, {(0,) + k[1:]: v for k, v in self.terms.items() if k[0] == power}, trusted=True)

    def eps_powers(self) -> List[int]:
        return sorted({k[0] for k in self.terms})

    def degree_part(self, degree: int) -> "TSeries":
        space = self.space
        return TSeries(space, self.cap, {k: v for k, v in self.terms.items() if space.wdeg(k) == degree}, trusted=True)

    def set_zero(self, *variables: VarIndex) -> "TSeries":
        idx = [self.space.index(v) + 1 for v in variables]
        return TSeries(self.space, self.cap, {k: v for k, v in self.terms.items() if not any(k[i] for i in idx)}, trusted=True)

    def truncate(self, cap: int) -> "TSeries":
        return TSeries(self.space, min(cap, self.cap), self.terms)

    def coefficient(self, exponents: Sequence[int]) -> EpsLaurent:
        exps = tuple(exponents)
        return EpsLaurent({k[0]: v for k, v in self.terms.items() if k[1:] == exps})

    def monomials(self) -> Dict[Tuple[int, ...], EpsLaurent]:
        grouped: Dict[Tuple[int, ...], Dict[int, Any]] = {}
        for k, v in self.terms.items():
            grouped.setdefault(k[1:], {})[k[0]] = v
        return {e: EpsLaurent(c) for e, c in grouped.items()}

    def exponent_vector(self, exponents: Mapping[VarIndex, int]) -> Tuple[int, ...]:
        exps = [0] * len(self.space)
        for var, e in exponents.items():
            exps[self.space.index(var)] += e
        return tuple(exps)

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, (TSeries,) + SCALAR_TYPES):
            return not (self - other)
        return NotImplemented

    __hash__ = None

    def __len__(self):
        return len(self.terms)

    def sorted_terms(self) -> List[Tuple[Key, Any]]:
        return sorted(self.terms.items(), key=lambda kv: (kv[0][1:], kv[0][0]))

    def monomial_text(self, key: Key) -> str:
        parts = []
        if key[0]:
            parts.append(f"eps^{key[0]}")
        for var, e in zip(self.space.vars, key[1:]):
            if e == 1:
                parts.append(var.name)
            elif e:
                parts.append(f"{var.name}^{e}")
        return "*".join(parts) or "1"

    def __repr__(self):
        if not self.terms:
            return f"TSeries(0; cap={self.cap})"
        body = " + ".join(f"{scalar_text(v)}*{self.monomial_text(k)}" for k, v in self.sorted_terms())
        return f"TSeries({body}; cap={self.cap})"

    # Serialization

    def to_json(self) -> Dict[str, Any]:
        grouped: Dict[Tuple[int, ...], List[Tuple[int, Any]]] = {}
        for k, v in self.terms.items():
            grouped.setdefault(k[1:], []).append((k[0], v))
        return {
            "varset": [v.name for v in self.space.vars],
            "weights": list(self.space.weights),
            "x": self.space.x.name if self.space.x is not None else None,
            "degreeCap": self.cap,
            "terms": [
                {
                    "exponents": list(exps),
                    "eps": [dict(power=p, **scalar_to_json(c)) for p, c in sorted(grouped[exps])],
                }
                for exps in sorted(grouped)
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any], space: Optional[SeriesSpace] = None) -> "TSeries":
        if space is None:
            x = VarIndex.parse(data["x"]) if data.get("x") else None
            space = SeriesSpace([VarIndex.parse(n) for n in data["varset"]], data["weights"], x=x)
        terms = {}
        for entry in data["terms"]:
            exps = tuple(entry["exponents"])
            for item in entry["eps"]:
                terms[(int(item["power"]),) + exps] = scalar_from_json(item)
        return cls(space, int(data["degreeCap"]), terms)


def _mul_terms(a: Mapping[Key, Any], b: Mapping[Key, Any], space: SeriesSpace, cap: int) -> Dict[Key, Any]:
    if not a or not b:
        return {}
    wdeg = space.wdeg
    b_items = sorted(((kb, vb, wdeg(kb)) for kb, vb in b.items()), key=lambda item: item[2])
    add = operator.add
    out: Dict[Key, Any] = {}
    for ka, va in a.items():
        room = cap - wdeg(ka)
        if room < 0:
            continue
        for kb, vb, db in b_items:
            if db > room:
                break
            key = tuple(map(add, ka, kb))
            prod = va * vb
            if key in out:
                out[key] = out[key] + prod
            else:
                out[key] = prod
    return {k: normalize(v) for k, v in out.items() if v}


# Operation-level entry points

def ts_arith(a: TSeries, b: Any, op: str) -> TSeries:
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "scale":
        if not isinstance(b, SCALAR_TYPES):
            raise TypeError("scale needs a scalar factor")
        return a * b
    raise ValueError(f"unknown series operation {op!r}")


def ts_diff(a: TSeries, var: VarIndex) -> TSeries:
    return a.diff(var)


def ts_int_T1(a: TSeries) -> TSeries:
    return a.integrate(VarIndex.T(1))


def ts_exp_log(a: TSeries, op: str) -> TSeries:
    if op == "exp":
        return a.exp()
    if op == "log":
        return a.log()
    raise ValueError(f"unknown operation {op!r}")


def ts_subst(a: TSeries, mapping: Mapping[VarIndex, TSeries], target: Optional[SeriesSpace] = None) -> TSeries:
    return a.subst(mapping, target)


def eps_component(a: TSeries, g: int) -> TSeries:
    """Coefficient of eps^{g-1}"""
    return a.eps_coefficient(g - 1)
