"""
Gelfand-Dickey hierarchy solver for the initial condition L = d^r + r eps^{-r} T1
"""
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Tuple

from pydantic import BaseModel, ValidationError, model_validator

from config import settings
from exceptions import ConfigurationError, FlowError, PathDependenceError, StratificationError
from logger import setup_logger
from psdo import FractionalPowers, PsDO, commutator, root_powers
from series import Key, SeriesSpace, TSeries, VarIndex

logger = setup_logger(__name__)


class TruncationSpec(BaseModel):
    """Truncation envelope of a solve"""

    r: int
    times: int
    degree: int
    genus_max: int = 1
    depth: Optional[int] = None
    eps_cap: int = 2

    @model_validator(mode="after")
    def _validate(self) -> "TruncationSpec":
        if self.r < 2:
            raise ValueError(f"r must be at least 2, got {self.r}")
        if self.times < self.r + 1:
            raise ValueError(f"times must be at least r+1 = {self.r + 1}, got {self.times}")
        if self.degree < 3:
            raise ValueError(f"degree must be at least 3, got {self.degree}")
        if self.genus_max < 0:
            raise ValueError("genus_max must be non-negative")
        if self.eps_cap < 2:
            raise ValueError(f"eps_cap must be at least 2, got {self.eps_cap}")
        if self.depth is None:
            self.depth = settings.default_depth(self.r, self.times, self.degree)
        if self.depth < self.times + self.r + 1:
            raise ValueError(f"depth must be at least times + r + 1 = {self.times + self.r + 1}")
        return self

    @classmethod
    def build(cls, **values: Any) -> "TruncationSpec":
        """Validate and raise ConfigurationError instead of a pydantic error"""
        try:
            return cls(**{k: v for k, v in values.items() if v is not None})
        except ValidationError as e:
            messages = "; ".join(err["msg"] for err in e.errors())
            raise ConfigurationError(f"invalid truncation: {messages}") from None

    @property
    def N(self) -> int:
        return self.times

    @property
    def D(self) -> int:
        return self.degree

    def space(self) -> SeriesSpace:
        return SeriesSpace.for_times(self.times)


@dataclass
class HierarchyState:
    """Solved Lax operator with its truncation and provenance"""

    spec: TruncationSpec
    L: PsDO
    solved_degree: int
    provenance: Dict[str, Any] = field(default_factory=dict)
    wave: Any = None
    _powers: Dict[int, FractionalPowers] = field(default_factory=dict, repr=False)
    _lock: Any = field(default_factory=threading.Lock, repr=False)

    @property
    def r(self) -> int:
        return self.spec.r

    @property
    def space(self) -> SeriesSpace:
        return self.spec.space()

    @property
    def zero(self) -> TSeries:
        return self.L.zero

    def powers(self, floor: int = -1) -> FractionalPowers:
        """Cached fractional powers of L, exact down to `floor`"""
        with self._lock:
            for cached_floor, cache in self._powers.items():
                if cached_floor <= floor:
                    return cache
            cache = FractionalPowers(self.L, self.r, floor)
            self._powers[floor] = cache
            return cache

    def power(self, n: int, floor: int = -1) -> PsDO:
        return self.powers(floor).get(n, floor)

    def f(self, i: int) -> TSeries:
        """Coefficient f_i of d^i in L"""
        return self.L.coeff(i)


def initial_L(spec: TruncationSpec) -> PsDO:
    """d^r + r eps^{-r} T1"""
    space = spec.space()
    zero = TSeries.zero(space, spec.degree)
    r = spec.r
    u = TSeries.variable(space, VarIndex.T(1), spec.degree, coefficient=r, eps=-r)
    return PsDO({r: zero + 1, 0: u}, zero, order=r)


def _shift(op: PsDO, power: int) -> PsDO:
    return op.map(lambda c: c.shift_eps(power))


def flow_rhs(L: PsDO, n: int, r: int, powers: Optional[FractionalPowers] = None) -> PsDO:
    """
    eps^{n-1} [(L^{n/r})_+, L]

    Args:
        L: Lax operator in hierarchy form
        n: Time index
        r: Order of L
        powers: Optional cache of fractional powers of L

    Returns:
        Operator with orders <= r-2

    Raises:
        FlowError: if a coefficient of order >= r-1 survives
    """
    powers = powers or FractionalPowers(L, r, 0)
    plus = powers.get(n, 0).plus()
    rhs = _shift(commutator(plus, L), n - 1)
    bad = [k for k in rhs.coeffs if k >= r - 1]
    if bad:
        logger.error(f"flow T{n}: commutator kept orders {sorted(bad)}")
        raise FlowError(f"commutator for T{n} has nonzero coefficients at orders {sorted(bad)}")
    return rhs


def _unit(space: SeriesSpace, n: int) -> int:
    return space.index(VarIndex.T(n)) + 1


def integrate_layer(
    space: SeriesSpace,
    degree: int,
    rhs: Dict[int, TSeries],
    label: str
) -> Dict[Key, Any]:
    """
    Degree d+1 terms of a function from the degree-d parts of its T_n-derivatives

    A target monomial receives rhs_n[e - 1_n] / e_n from every time n it
    contains; all of these must agree.

    Args:
        space: Series space of the unknown
        degree: Degree d of the supplied derivative parts
        rhs: n -> degree-d part of the T_n derivative
        label: Name used in error messages

    Returns:
        Terms of weighted degree d+1

    Raises:
        PathDependenceError: if two times disagree on a monomial
    """
    slots = {n: _unit(space, n) for n in rhs}
    targets = set()
    for n, series in rhs.items():
        i = slots[n]
        for k in series.terms:
            targets.add(k[:i] + (k[i] + 1,) + k[i + 1:])
    out: Dict[Key, Any] = {}
    for target in sorted(targets):
        value = None
        for n, series in rhs.items():
            i = slots[n]
            e = target[i]
            if not e:
                continue
            source = target[:i] + (e - 1,) + target[i + 1:]
            candidate = series.terms.get(source, Fraction(0)) / e
            if value is None:
                value = candidate
            elif candidate != value:
                monomial = target[1:]
                logger.error(f"{label}: path dependence at eps^{target[0]} * {monomial}")
                raise PathDependenceError(
                    f"{label}: times disagree on eps^{target[0]} * exponents {monomial}",
                    monomial=target,
                )
        if value:
            out[target] = value
    logger.debug(f"{label}: layer {degree + 1} has {len(out)} terms")
    return out


def evaluate_flows(
    compute: Callable[[int], Any],
    times: List[int],
    threads: int
) -> Dict[int, Any]:
    """Evaluate compute(n) for every time, in a thread pool when threads > 1"""
    if threads <= 1:
        return {n: compute(n) for n in times}
    results: Dict[int, Any] = {}
    with ThreadPoolExecutor(max_workers=threads) as executor:
        futures = {executor.submit(compute, n): n for n in times}
        for future in as_completed(futures):
            results[futures[future]] = future.result()
    return results


def _with_cap(op: PsDO, cap: int) -> PsDO:
    return op.map(lambda c: c.truncate(cap), zero=op.zero.truncate(cap))


def _raise_cap(op: PsDO, cap: int) -> PsDO:
    return op.map(lambda c: TSeries(c.space, cap, c.terms, trusted=True), zero=TSeries.zero(op.zero.space, cap))


def solve_jets(
    spec: TruncationSpec,
    resume: Optional[HierarchyState] = None,
    threads: Optional[int] = None
) -> HierarchyState:
    """
    Solve the hierarchy by graded layers in the degree of T_2..T_N

    Layer d+1 of every coefficient comes from the degree-d part of the flows
    d f_i / dT_n, n = 2..N, computed from the layers solved so far.

    Args:
        spec: Truncation envelope
        resume: Previously solved state with the same r and times to continue from
        threads: Worker threads per layer (defaults to settings.hierarchy_threads)

    Returns:
        HierarchyState with L exact to degree spec.degree
    """
    threads = threads or settings.hierarchy_threads
    r, N, D = spec.r, spec.times, spec.degree
    space = spec.space()

    start_degree = 0
    L = initial_L(spec)
    layers: List[Dict[str, Any]] = []
    if resume is not None:
        if resume.spec.r == r and resume.spec.times == N and resume.solved_degree <= D:
            L = _raise_cap(resume.L, D)
            start_degree = resume.solved_degree
            layers = list(resume.provenance.get("layers", []))
            logger.info(f"Resuming r={r} N={N} from degree {start_degree} to {D}")
        else:
            logger.info("Stored state has a different r or times, solving from scratch")

    logger.info(f"Solving GD hierarchy r={r}, N={N}, D={D}, depth={spec.depth}")
    for d in range(start_degree, D):
        started = time.time()
        current = _with_cap(L, d)
        powers = FractionalPowers(current, r, 0)
        # Warm the root so worker threads only read from the cache
        powers.get(N, 0)
        flows = evaluate_flows(lambda n: flow_rhs(current, n, r, powers), list(range(2, N + 1)), threads)

        new_coeffs = dict(L.coeffs)
        for i in range(r - 1):
            rhs = {n: flows[n].coeff(i).degree_part(d) for n in flows}
            terms = integrate_layer(space, d, rhs, f"f{i}")
            if terms:
                new_coeffs[i] = L.coeff(i) + TSeries(space, D, terms)
        L = PsDO(new_coeffs, L.zero, order=r)
        elapsed = round((time.time() - started) * 1000)
        size = sum(len(L.coeff(i)) for i in range(r - 1))
        layers.append({"degree": d + 1, "millis": elapsed, "terms": size})
        logger.info(f"Layer {d + 1}/{D} solved in {elapsed} ms ({size} terms)")

    state = HierarchyState(
        spec=spec,
        L=L,
        solved_degree=D,
        provenance={"layers": layers, "checks": {}},
    )
    stratify(state)
    return state


def stratify(state: HierarchyState) -> List[PsDO]:
    """
    Split L by the eps-pattern f_i = sum_j eps^{i-r+j} f_i^{[j]}

    Returns:
        [L0, L1, ...]: eps-free operators, L0 monic of order r

    Raises:
        StratificationError: if a coefficient sits at j < 0 or reassembly fails
    """
    r = state.r
    L = state.L
    zero = L.zero
    strata: Dict[int, Dict[int, TSeries]] = {}
    for i in range(r - 1):
        f = L.coeff(i)
        for p in f.eps_powers():
            j = p - (i - r)
            if j < 0:
                raise StratificationError(f"f{i} has a term at eps^{p}, below the pattern eps^{i - r}")
            strata.setdefault(j, {})[i] = f.eps_coefficient(p)
    top = max(max(strata, default=0), state.spec.eps_cap)
    result = []
    for j in range(top + 1):
        coeffs: Dict[int, Any] = dict(strata.get(j, {}))
        if j == 0:
            coeffs[r] = zero + 1
        result.append(PsDO(coeffs, zero, order=r if j == 0 else r - 2))

    reassembled = {r: zero + 1}
    for j, op in enumerate(result):
        for i in range(r - 1):
            piece = op.coeff(i).shift_eps(i - r + j)
            reassembled[i] = reassembled.get(i, zero) + piece
    if PsDO(reassembled, zero, order=r) != L:
        raise StratificationError("eps strata do not reassemble to L")
    return result


def stability_check(state: HierarchyState) -> Tuple[bool, List[str]]:
    """
    Deepen the tail of L^{s/r} to depth + 2 and the eps window to eps_cap + 1

    The layered solve only reads orders >= 0 of the flows, so L is exact
    whatever the depth. The depth governs the negative tail of the fractional
    powers: the tail computed to d^{-(depth+2)} must restrict to the one at
    d^{-depth}, and the strata in the wider window must match the stored ones
    with nothing new above them.

    Returns:
        (stable, names of the pieces that changed)
    """
    spec = state.spec
    r, depth = spec.r, spec.depth
    changed: List[str] = []

    shallow = root_powers(state.L, r, -depth)
    deep = root_powers(state.L, r, -(depth + 2))
    for s, (near, far) in enumerate(zip(shallow, deep), start=1):
        if far.floor >= near.floor or far.truncate(near.floor) != near:
            changed.append(f"L^{s}/{r}")

    wider = HierarchyState(
        spec=spec.model_copy(update={"eps_cap": spec.eps_cap + 1}),
        L=state.L,
        solved_degree=state.solved_degree,
    )
    stored, widened = stratify(state), stratify(wider)
    for j, op in enumerate(stored):
        if widened[j] != op:
            changed.append(f"eps stratum {j}")
    for j in range(len(stored), len(widened)):
        if any(widened[j].coeff(i) for i in range(r - 1)):
            changed.append(f"eps stratum {j}")

    logger.info(f"Stability at depth {depth + 2}, eps_cap {spec.eps_cap + 1}: {'stable' if not changed else changed}")
    return not changed, changed
