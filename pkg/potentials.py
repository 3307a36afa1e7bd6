"""
Closed, extended and open r-spin potentials and correlator tables
"""
import csv
import io
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed
from fractions import Fraction
from math import factorial
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple

from pydantic import BaseModel, Field

from config import settings
from dictionaries import DictionaryMap, twist_of
from exceptions import (
    BridgeParityError,
    ClosedIndexError,
    ConfigurationError,
    HessianMismatchError,
    SelectionRuleError,
)
from logger import setup_logger
from psdo import Symbol
from scalars import CycScalar, as_rational, normalize
from series import SeriesSpace, TSeries, VarIndex
from solver import HierarchyState, stratify
from wave import WaveState, phi_stratum

logger = setup_logger(__name__)

FLAVORS = ("closed", "extended", "open", "conjectural")

Insertion = Tuple[int, int]


# Closed sector

def closed_two_point(state: HierarchyState, n: int) -> TSeries:
    """
    eps^{n-1} res L^{n/r} = d^2 F / dT_1 dT_n

    Raises:
        ClosedIndexError: if r divides n
    """
    if n % state.r == 0:
        raise ClosedIndexError(f"res L^{n}/{state.r} is excluded for r | n")
    return state.power(n, -1).residue().shift_eps(n - 1)


def closed_two_point_genus(state: HierarchyState, n: int, g: int) -> TSeries:
    """Genus-g part: coefficient of eps^{2g-2}"""
    return closed_two_point(state, n).eps_coefficient(2 * g - 2)


class HessianBuilder:
    """
    d^2 F_0 / dT_a dT_b for primary b = 1..r-1

    The basis-matching route reads the Hessian from the z^{-1}..z^{-(r-1)}
    coefficients of (L0^{a/r})_- against L0^{-b/r}; the integration route
    integrates d/dT_a of the genus-0 res relation in T1 and takes the T1 = 0
    slice from the string equation in t-variables.
    """

    def __init__(self, state: HierarchyState):
        self.state = state
        self.r = state.r
        self.floor = -(self.r + 1)
        self.L0 = stratify(state)[0]
        self.symbol = self.L0.to_symbol()
        self._powers: Dict[int, Symbol] = {}
        self._cache: Dict[int, Dict[int, TSeries]] = {}
        self.dmap = DictionaryMap(self.r, state.spec.times)
        self._slices: Dict[Tuple[int, int], TSeries] = {}
        self._lock = threading.RLock()

    def symbol_power(self, numerator: int) -> Symbol:
        """Commutative power L0-hat^{numerator/r}"""
        if numerator not in self._powers:
            self._powers[numerator] = self.symbol.frac_power(numerator, self.r, self.floor)
        return self._powers[numerator]

    def row(self, a: int) -> Dict[int, TSeries]:
        """b -> H_ab by basis matching"""
        if a in self._cache:
            return self._cache[a]
        r = self.r
        zero = self.state.zero
        if a % r == 0:
            row = {b: zero for b in range(1, r)}
        else:
            minus = self.symbol_power(a).minus_part()
            h: Dict[int, TSeries] = {}
            for j in range(1, r):
                value = minus.coeff(-j)
                for b in range(1, j):
                    value = value - h[b] * self.symbol_power(-b).coeff(-j)
                h[j] = value
            row = {b: h[b] * b for b in range(1, r)}
        self._cache[a] = row
        return row

    def hessian(self, a: int, b: int) -> TSeries:
        if not 1 <= b <= self.r - 1:
            raise ValueError(f"b must lie in 1..{self.r - 1}, got {b}")
        return self.row(a)[b]

    def membership_residual(self, a: int) -> Symbol:
        """(L0^{a/r})_- - sum_b (1/b) H_ab L0^{-b/r}, which must start at z^{-r-1}"""
        residual = self.symbol_power(a).minus_part()
        for b, h in self.row(a).items():
            residual = residual - self.symbol_power(-b) * (h * Fraction(1, b))
        return residual

    def integrated(self, a: int, b: int) -> TSeries:
        """
        T1-integral of d/dT_a R_b completed by the string-equation slice

        Terms free of T1 are exact through `slice_cap(a, b)`, the rest through D-1.
        """
        T1 = VarIndex.T(1)
        if b == 1:
            return closed_two_point_genus(self.state, a, 0)
        R_b = closed_two_point_genus(self.state, b, 0)
        if a == 1:
            return R_b
        body = R_b.diff(VarIndex.T(a)).integrate(T1)
        anchor = self.string_slice(a, b)
        return TSeries(body.space, body.cap, {**body.terms, **anchor.terms}, trusted=True)

    def slice_cap(self, a: int, b: int) -> int:
        """Weighted degree through which the T1 = 0 part of `integrated(a, b)` is known"""
        if a == 1 or b == 1:
            return self.state.spec.degree - 1
        return self.string_slice(a, b).cap

    def string_slice(self, a: int, b: int) -> TSeries:
        """
        T1 = 0 slice of H_ab from the genus-0 string equation in t-variables

        With h_q the x = 0 slice of d^2 F / dt^alpha_q dt^beta_0,
        h_q = (1 - t^0_1) g_q - sum t^c_{n+1} d h_{q+1} / dt^c_n (n, c not both 0),
        where g_q = d/dt^alpha_{q+1} of the two-point function R_b at x = 0.
        The chain ends where the dimension constraint admits no monomial; if
        it leaves the truncation first the slice is only known below the
        lowest admissible degree.
        """
        with self._lock:
            if (a, b) not in self._slices:
                dmap = self.dmap
                alpha, p = twist_of(a, self.r)
                R_b = closed_two_point_genus(self.state, b, 0)
                R_t = dmap.to_t(R_b) * (dmap.factor(1) * dmap.factor(b))
                h = self._slice_level(R_t, alpha, b - 1, p)
                scale = (dmap.factor(a) * dmap.factor(b)).inverse()
                self._slices[(a, b)] = dmap.from_t(h, self.state.space) * scale
            return self._slices[(a, b)]

    def _slice_level(self, R_t: TSeries, alpha: int, beta: int, q: int) -> TSeries:
        r = self.r
        space = R_t.space
        x = space.x
        cap = R_t.cap - 1
        target = -2 * (r + 1) - (alpha + r * q - r) - (beta - r)
        dims = [v.alpha + r * v.d - r for v in space.vars if v != x]
        lo, hi = min(dims), max(dims)
        admissible = [d for d in range(cap + 1) if d * lo <= target <= d * hi]
        if not admissible:
            return TSeries.zero(space, cap)
        below = TSeries.zero(space, admissible[0] - 1)
        up = VarIndex.t(alpha, q + 1)
        if up not in space:
            return below

        following = self._slice_level(R_t, alpha, beta, q + 1)
        g = R_t.diff(up).set_zero(x)
        h = g - _times_variable(VarIndex.t(0, 1), g)
        for var in space.vars:
            if var.d >= 1 and (var.alpha, var.d) != (0, 1):
                lower = VarIndex.t(var.alpha, var.d - 1)
                if lower in space:
                    h = h - _times_variable(var, following.diff(lower))
        return h if h.cap >= below.cap else below


def _times_variable(var: VarIndex, f: TSeries) -> TSeries:
    """var * f for a variable of weight 1, exact one degree above f"""
    lifted = TSeries(f.space, f.cap + 1, f.terms, trusted=True)
    return TSeries.variable(f.space, var, f.cap + 1) * lifted


def closed_F0_hessian(state: HierarchyState, a: int, b: int, builder: Optional[HessianBuilder] = None) -> TSeries:
    """
    d^2 F_0 / dT_a dT_b (1 <= b <= r-1), cross-checked between both routes

    Raises:
        HessianMismatchError: if the routes disagree below degree D-1 (below the
            slice cap for the T1-free terms)
    """
    builder = builder or HessianBuilder(state)
    matched = builder.hessian(a, b)
    if a % state.r == 0:
        return matched
    T1 = VarIndex.T(1)
    residual = (builder.integrated(a, b) - matched).truncate(state.spec.degree - 1)
    free = residual.set_zero(T1)
    if residual - free or free.truncate(builder.slice_cap(a, b)):
        logger.error(f"Hessian H[{a},{b}] differs between routes")
        raise HessianMismatchError(f"H[{a},{b}]: integration and basis matching disagree")
    return matched


# Potentials in t-variables

def open_F0(ws: WaveState, dmap: DictionaryMap) -> TSeries:
    """(1/sqrt(-r)) (phi_0 shifted - phi_0 scaled), in t-variables and s"""
    phi0 = phi_stratum(ws, 0)
    shifted = dmap.to_t(phi0, "shifted")
    scaled = dmap.to_t(phi0, "scaled", with_s=True)
    return (shifted - scaled) * CycScalar.sqrt_minus_r(dmap.r).inverse()


def conjectural_open_Fg(ws: WaveState, g: int, dmap: DictionaryMap) -> TSeries:
    """(-r)^{(g-1)/2} phi_g with the shifted boundary substitution, g >= 1"""
    if g < 1:
        raise ConfigurationError("the conjectural potential is defined for g >= 1")
    prefactor = CycScalar.zeta_power(dmap.r, (dmap.r + 1) * (g - 1))
    return dmap.to_t(phi_stratum(ws, g), "shifted") * prefactor


def open_Fg(ws: WaveState, g: int, dmap: DictionaryMap) -> TSeries:
    return open_F0(ws, dmap) if g == 0 else conjectural_open_Fg(ws, g, dmap)


def extended_F0(ws: WaveState, dmap: DictionaryMap) -> TSeries:
    """sqrt(-r) phi_0 with t^{r-1} -> t^{r-1}/sqrt(-r)"""
    return dmap.to_t(phi_stratum(ws, 0), "scaled") * CycScalar.sqrt_minus_r(dmap.r)


# Extraction

def monomial_insertions(space: SeriesSpace, exponents: Tuple[int, ...]) -> Tuple[List[Insertion], int]:
    """t-exponents -> sorted (a, d) insertions with multiplicity, and the power of s"""
    insertions: List[Insertion] = []
    k = 0
    for var, e in zip(space.vars, exponents):
        if not e:
            continue
        if var.kind == "s":
            k = e
        elif var.kind == "t":
            insertions.extend([(var.alpha, var.d)] * e)
        else:
            raise ValueError(f"{var} is not an r-spin variable")
    return sorted(insertions), k


def extract(series: TSeries, insertions: Mapping[VarIndex, int], eps: int = 0) -> Any:
    """
    Correlator read off a generating series

    Args:
        series: Generating series
        insertions: Variable -> multiplicity
        eps: Power of eps to read (ε-free series use 0)

    Returns:
        Coefficient times the product of multiplicity factorials
    """
    exps = series.exponent_vector(insertions)
    value = series.coefficient(exps).component(eps)
    for e in exps:
        value = value * factorial(e)
    return normalize(value)


def bridge_factor(g: int, k: int) -> Fraction:
    """(-2)^{(g+k-1)/2} for g + k odd"""
    if (g + k) % 2 == 0:
        raise BridgeParityError(f"no bridge factor for g + k = {g + k} even")
    return Fraction(-2) ** ((g + k - 1) // 2)


def r2_bridge(value: Any, g: int, k: int) -> Fraction:
    """
    r = 2 open value -> classical open intersection number

    Raises:
        BridgeParityError: if g + k is even and the value does not vanish
    """
    value = as_rational_value(value)
    if (g + k) % 2 == 0:
        if value:
            raise BridgeParityError(f"nonzero value {value} at g={g}, k={k} with g + k even")
        return Fraction(0)
    return value / bridge_factor(g, k)


def as_rational_value(value: Any) -> Fraction:
    """
    Raises:
        NonRationalValueError: if a zeta component survives
    """
    return as_rational(normalize(value))


# Selection rules

def selection_defect(flavor: str, r: int, g: int, insertions: Iterable[Insertion], k: int) -> int:
    """Left side minus right side of the dimension constraint; zero when allowed"""
    total = sum(a + r * d - r for a, d in insertions)
    if flavor == "closed":
        return total - 2 * (r + 1) * (g - 1)
    if flavor == "extended":
        return total + (r + 1)
    return total - k - (r + 1) * (g - 1)


def phi_selection_defect(r: int, g: int, space: SeriesSpace, exponents: Tuple[int, ...]) -> int:
    """sum (k_i - r - 1) - (r+1)(g-1) for a monomial of phi_g in T-variables"""
    total = sum(e * (var.n - r - 1) for var, e in zip(space.vars, exponents))
    return total - (r + 1) * (g - 1)


# Tables

class CorrelatorInsertion(BaseModel):
    a: int
    d: int


class CorrelatorEntry(BaseModel):
    flavor: str
    genus: int
    insertions: List[CorrelatorInsertion]
    k: int = 0
    num: int
    den: int = 1
    conjectural: bool = False
    selection_rule_checked: bool = True

    @property
    def value(self) -> Fraction:
        return Fraction(self.num, self.den)

    @property
    def key(self) -> Tuple[str, int, Tuple[Insertion, ...], int]:
        return (self.flavor, self.genus, tuple((i.a, i.d) for i in self.insertions), self.k)

    def label(self) -> str:
        body = " ".join(f"tau^{i.a}_{i.d}" for i in self.insertions)
        if self.k:
            body = f"{body} sigma^{self.k}".strip()
        return f"<{body}>_{self.genus}"


class CorrelatorTable(BaseModel):
    """Correlators of one flavor and genus with provenance metadata"""

    r: int
    flavor: str
    genus: int
    conjectural: bool = False
    metadata: Dict[str, Any] = Field(default_factory=dict)
    entries: List[CorrelatorEntry] = Field(default_factory=list)

    def lookup(self) -> Dict[Tuple[Tuple[Insertion, ...], int], Fraction]:
        return {(tuple((i.a, i.d) for i in e.insertions), e.k): e.value for e in self.entries}

    def get(self, insertions: Iterable[Insertion], k: int = 0) -> Fraction:
        return self.lookup().get((tuple(sorted(insertions)), k), Fraction(0))

    def sort(self) -> None:
        self.entries.sort(key=lambda e: (len(e.insertions), [(i.a, i.d) for i in e.insertions], e.k))

    def to_records(self) -> List[Dict[str, Any]]:
        records = []
        for e in self.entries:
            records.append({
                "flavor": e.flavor,
                "genus": e.genus,
                "insertions": [{"a": i.a, "d": i.d} for i in e.insertions],
                "k": e.k,
                "value": {"num": e.num, "den": e.den},
                "conjectural": e.conjectural,
                "selection_rule_checked": e.selection_rule_checked,
            })
        return records

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["flavor", "genus", "insertions", "k", "num", "den", "conjectural", "selection_rule_checked"])
        for e in self.entries:
            writer.writerow([
                e.flavor,
                e.genus,
                " ".join(f"{i.a}:{i.d}" for i in e.insertions),
                e.k,
                e.num,
                e.den,
                str(e.conjectural).lower(),
                str(e.selection_rule_checked).lower(),
            ])
        return buffer.getvalue()


def _add_entries(
    table: CorrelatorTable,
    series: TSeries,
    r: int,
    skip_violators: bool,
    known: Optional[Dict[Tuple[Tuple[Insertion, ...], int], Fraction]] = None,
    extra: Tuple[Insertion, ...] = (),
    factor: Any = 1,
) -> None:
    """
    Turn every monomial of an eps-free t-series into a table entry

    `extra` insertions are prepended to every monomial (the derivatives the
    series already stands for) and `factor` rescales the values.
    """
    known = {} if known is None else known
    skipped = table.metadata.setdefault("skipped_violations", 0)
    for exps, laurent in sorted(series.monomials().items()):
        raw = laurent.component(0)
        if not raw:
            continue
        insertions, k = monomial_insertions(series.space, exps)
        insertions = sorted(insertions + list(extra))
        value = raw * factor
        for e in exps:
            value = value * factorial(e)
        value = as_rational_value(value)
        if selection_defect(table.flavor, r, table.genus, insertions, k):
            if skip_violators:
                skipped += 1
                logger.warning(f"Skipping {table.flavor} entry {insertions} k={k} violating the selection rule")
                continue
            raise SelectionRuleError(
                f"{table.flavor} genus {table.genus} entry {insertions}, k={k} = {value} violates the selection rule"
            )
        key = (tuple(insertions), k)
        if key in known:
            if known[key] != value:
                raise HessianMismatchError(f"correlator {key} read as {known[key]} and {value}")
            continue
        known[key] = value
        table.entries.append(CorrelatorEntry(
            flavor=table.flavor,
            genus=table.genus,
            insertions=[CorrelatorInsertion(a=a, d=d) for a, d in insertions],
            k=k,
            num=value.numerator,
            den=value.denominator,
            conjectural=table.conjectural,
        ))
    table.metadata["skipped_violations"] = skipped


def closed_table(
    state: HierarchyState,
    genus: int,
    dmap: Optional[DictionaryMap] = None,
    builder: Optional[HessianBuilder] = None,
    skip_violators: bool = False
) -> CorrelatorTable:
    """
    Closed correlators produced by the hierarchy

    Genus 0 comes from the Hessian rows d^2F_0/dT_a dT_b (every genus-0
    correlator has a primary insertion); higher genus from the res relation,
    i.e. correlators with a tau^0_0 insertion.
    """
    r, N = state.r, state.spec.times
    dmap = dmap or DictionaryMap(r, N)
    table = CorrelatorTable(
        r=r,
        flavor="closed",
        genus=genus,
        metadata={"source": "hierarchy", "normalization": "r^(1-g) included"},
    )
    known: Dict[Tuple[Tuple[Insertion, ...], int], Fraction] = {}
    if genus == 0:
        builder = builder or HessianBuilder(state)
        for a in range(1, N + 1):
            if a % r == 0:
                continue
            for b in range(1, r):
                H = closed_F0_hessian(state, a, b, builder)
                extra = (dmap.t_var(a), dmap.t_var(b))
                factor = dmap.factor(a) * dmap.factor(b)
                _add_entries(table, dmap.to_t(H), r, skip_violators, known,
                             tuple((v.alpha, v.d) for v in extra), factor)
    else:
        for n in range(1, N + 1):
            if n % r == 0:
                continue
            R = closed_two_point_genus(state, n, genus)
            extra = ((0, 0), (dmap.t_var(n).alpha, dmap.t_var(n).d))
            _add_entries(table, dmap.to_t(R), r, skip_violators, known, extra, dmap.factor(1) * dmap.factor(n))
    table.sort()
    logger.info(f"closed genus {genus} table: {len(table.entries)} entries")
    return table


def potential_table(
    series: TSeries,
    r: int,
    flavor: str,
    genus: int,
    skip_violators: bool = False
) -> CorrelatorTable:
    conjectural = flavor == "conjectural"
    table = CorrelatorTable(
        r=r,
        flavor=flavor,
        genus=genus,
        conjectural=conjectural,
        metadata={"source": "wave function", "conjectural": conjectural},
    )
    _add_entries(table, series, r, skip_violators)
    table.sort()
    logger.info(f"{flavor} genus {genus} table: {len(table.entries)} entries")
    return table


def build_table(
    state: HierarchyState,
    flavor: str,
    genus: int,
    skip_violators: Optional[bool] = None
) -> CorrelatorTable:
    """
    Correlator table of a flavor and genus from a solved state

    Raises:
        ConfigurationError: for unknown flavors, missing wave data or genus outside its range
    """
    if flavor not in FLAVORS:
        raise ConfigurationError(f"unknown flavor {flavor!r}, expected one of {', '.join(FLAVORS)}")
    skip = settings.skip_selection_violators if skip_violators is None else skip_violators
    r = state.r
    dmap = DictionaryMap(r, state.spec.times)
    if flavor == "closed":
        return closed_table(state, genus, dmap, skip_violators=skip)
    ws = state.wave
    if ws is None:
        raise ConfigurationError("the state has no wave function")
    if flavor == "extended":
        if genus != 0:
            raise ConfigurationError("the extended potential is defined in genus 0 only")
        return potential_table(extended_F0(ws, dmap), r, flavor, 0, skip)
    if flavor == "open":
        if genus != 0:
            raise ConfigurationError("open numbers beyond genus 0 use the conjectural flavor")
        return potential_table(open_F0(ws, dmap), r, flavor, 0, skip)
    if genus < 1:
        raise ConfigurationError("the conjectural flavor needs genus >= 1")
    return potential_table(conjectural_open_Fg(ws, genus, dmap), r, flavor, genus, skip)


def build_tables(state: HierarchyState, requests: List[Tuple[str, int]], threads: Optional[int] = None) -> List[CorrelatorTable]:
    """Assemble several tables in a thread pool, keeping the request order"""
    threads = threads or settings.hierarchy_threads
    results: Dict[int, CorrelatorTable] = {}
    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        futures = {executor.submit(build_table, state, flavor, genus): i for i, (flavor, genus) in enumerate(requests)}
        for future in as_completed(futures):
            results[futures[future]] = future.result()
    return [results[i] for i in range(len(requests))]
