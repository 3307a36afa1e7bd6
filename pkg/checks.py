"""
Verification checks for a solved hierarchy state
"""
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from fractions import Fraction
from math import factorial
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple

from pydantic import BaseModel, Field

from config import settings
from dictionaries import DictionaryMap, index_of
from exceptions import BridgeParityError, ConfigurationError, EngineError
from jets import (
    diff_degree_part,
    generators_needed,
    jet_L0_symbol,
    jet_power,
    jet_values,
    substitute_jets,
)
from logger import setup_logger
from oracles import closed_genus0_oracle, open_genus0_oracle, table_seed_lookup
from potentials import (
    HessianBuilder,
    as_rational_value,
    closed_F0_hessian,
    closed_table,
    conjectural_open_Fg,
    extended_F0,
    monomial_insertions,
    open_F0,
    phi_selection_defect,
    potential_table,
    r2_bridge,
    selection_defect,
)
from psdo import PsDO, Symbol
from scalars import scalar_text
from series import SeriesSpace, TSeries, VarIndex
from solver import HierarchyState, flow_rhs, stability_check, stratify
from wave import WaveState, phi_stratum, solve_phi

logger = setup_logger(__name__)

CHECK_NAMES = ("string", "dilaton", "trr1", "symbols", "dimension", "r2bridge", "genus", "hierarchy")
MAX_RESIDUALS = 20


class CheckReport(BaseModel):
    """Outcome of one verification"""

    check: str
    params: Dict[str, Any] = Field(default_factory=dict)
    status: str = "pass"
    residual_monomials: List[str] = Field(default_factory=list)
    millis: int = 0
    note: str = ""
    details: Dict[str, Any] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status != "fail"


class OOperator:
    """
    O = (1/(r+1)) d/dT_{r+1} - eps d/deps - sum_i T_i d/dT_i

    Acts on series and coefficientwise on symbols; [O, d/dT_1] = d/dT_1.
    """

    def __init__(self, r: int):
        self.r = r
        self.var = VarIndex.T(r + 1)

    def __call__(self, f: TSeries) -> TSeries:
        if self.var not in f.space:
            raise ConfigurationError(f"the dilaton operator needs T{self.r + 1} in the series space")
        return f.diff(self.var) * Fraction(1, self.r + 1) - f.eps_derivative() - f.euler()

    def on_symbol(self, S: Symbol) -> Symbol:
        return S.map(self)

    def shifted(self, S: Symbol) -> Symbol:
        """(z d/dz + O) applied to a symbol"""
        return S.zdz() + self.on_symbol(S)


def random_series(space: SeriesSpace, cap: int, rng: random.Random, terms: int = 6) -> TSeries:
    """Seeded random T-series with eps powers -1 and 0, exact to `cap`"""
    variables = [var for var in space.vars if var.kind == "T"]
    total = TSeries.zero(space, cap)
    for _ in range(terms):
        exponents: Dict[VarIndex, int] = {}
        budget = rng.randint(0, cap)
        for _ in range(budget):
            var = rng.choice(variables)
            exponents[var] = exponents.get(var, 0) + 1
        if VarIndex.T(1) in space:
            exponents[VarIndex.T(1)] = exponents.get(VarIndex.T(1), 0) + rng.randint(0, 2)
        coefficient = Fraction(rng.randint(-3, 3), rng.randint(1, 3))
        total = total + TSeries.monomial(space, cap, exponents, coefficient, eps=rng.randint(-1, 0))
    return total


def exchange_residual(O: OOperator, A: PsDO, f: TSeries) -> TSeries:
    """O(A f) - A(O f) - (((z d/dz + O) symbol of A) at z = d) f"""
    shifted = O.shifted(A.to_symbol()).to_operator()
    return O(A.apply(f)) - A.apply(O(f)) - shifted.apply(f)


class CheckContext:
    """Shared lazily built data for the checks of one state"""

    def __init__(self, state: HierarchyState, wave: Optional[WaveState] = None):
        self.state = state
        self.r = state.r
        self.N = state.spec.times
        self.D = state.spec.degree
        self.G = state.spec.genus_max
        self.dmap = DictionaryMap(self.r, self.N)
        self._wave = wave if wave is not None else state.wave
        self._builder: Optional[HessianBuilder] = None
        self._strata = None
        self._hessians: Dict[Tuple[int, int], TSeries] = {}
        self._plus_one: Dict[int, Symbol] = {}
        self._lock = threading.RLock()

    @property
    def wave(self) -> WaveState:
        with self._lock:
            if self._wave is None:
                logger.info("State has no wave function, solving it for the checks")
                self._wave = solve_phi(self.state)
                self.state.wave = self._wave
            return self._wave

    @property
    def builder(self) -> HessianBuilder:
        with self._lock:
            if self._builder is None:
                self._builder = HessianBuilder(self.state)
            return self._builder

    @property
    def strata(self):
        with self._lock:
            if self._strata is None:
                self._strata = stratify(self.state)
            return self._strata

    def phi(self, g: int) -> TSeries:
        return phi_stratum(self.wave, g)

    def hessian(self, a: int, b: int) -> TSeries:
        with self._lock:
            if (a, b) not in self._hessians:
                self._hessians[(a, b)] = closed_F0_hessian(self.state, a, b, self.builder)
            return self._hessians[(a, b)]

    def plus_one(self, n: int) -> Symbol:
        """Concrete (symbol of L0^{n/r})_{+,1} from the jet layer"""
        with self._lock:
            if n not in self._plus_one:
                J = diff_degree_part(jet_power(n, self.r, 0, max_degree=1), 1, plus_only=True)
                max_k = max((k for _, k in generators_needed(J)), default=0)
                values = jet_values(self.strata[0], self.r, max_k)
                self._plus_one[n] = substitute_jets(J, values, self.state.zero)
            return self._plus_one[n]

    def warm(self) -> None:
        """Build the wave function, strata and Hessian data before workers start"""
        _ = (self.wave, self.strata, self.builder)


def _timer() -> float:
    return time.time()


def _report(
    check: str,
    params: Dict[str, Any],
    residuals: Iterable[Tuple[str, Any]],
    started: float,
    note: str = "",
    details: Optional[Dict[str, Any]] = None
) -> CheckReport:
    """Report that passes iff every residual vanishes"""
    lines: List[str] = []
    failed = 0
    for label, residual in residuals:
        if isinstance(residual, TSeries):
            if not residual:
                continue
            failed += 1
            for key, value in residual.sorted_terms():
                if len(lines) >= MAX_RESIDUALS:
                    break
                lines.append(f"{label}: {scalar_text(value)}*{residual.monomial_text(key)}")
        elif residual:
            failed += 1
            if len(lines) < MAX_RESIDUALS:
                lines.append(f"{label}: {residual}")
    report = CheckReport(
        check=check,
        params=params,
        status="fail" if failed else "pass",
        residual_monomials=lines,
        millis=round((time.time() - started) * 1000),
        note=note,
        details=details or {},
    )
    log = logger.warning if failed else logger.info
    log(f"{check} {params}: {report.status} ({report.millis} ms)")
    return report


def _skipped(check: str, params: Dict[str, Any], note: str) -> CheckReport:
    logger.info(f"{check} {params}: skipped ({note})")
    return CheckReport(check=check, params=params, status="skipped", note=note)


def _lift(series: TSeries, space: SeriesSpace) -> TSeries:
    """Embed a series into a space that contains its variables"""
    return series.subst({}, space)


def _t_pairs(space: SeriesSpace) -> List[Tuple[VarIndex, VarIndex]]:
    """(t^a_{n+1}, t^a_n) pairs both present in the space"""
    pairs = []
    for var in space.vars:
        if var.kind == "t" and var.d >= 1:
            lower = VarIndex.t(var.alpha, var.d - 1)
            if lower in space:
                pairs.append((var, lower))
    return pairs


def _t_string(F: TSeries, source: Optional[TSeries] = None) -> TSeries:
    """dF/dt^0_0 - sum t^a_{n+1} dF/dt^a_n - source"""
    space = F.space
    residual = F.diff(VarIndex.t(0, 0))
    for upper, lower in _t_pairs(space):
        residual = residual - TSeries.variable(space, upper, F.cap) * F.diff(lower)
    if source is not None:
        residual = residual - source
    return residual


def _t_dilaton(F: TSeries, g: int, with_s: bool = False) -> TSeries:
    """dF/dt^0_1 - sum t dF/dt - (g-1) F [- s dF/ds] - delta_{g1}/2"""
    space = F.space
    t_vars = [v for v in space.vars if v.kind == "t"]
    residual = F.diff(VarIndex.t(0, 1)) - F.euler(t_vars) - F * (g - 1)
    if with_s:
        residual = residual - F.euler([VarIndex.s()])
    if g == 1:
        residual = residual - Fraction(1, 2)
    return residual


# String equation

def check_string(ctx: CheckContext) -> List[CheckReport]:
    """String equation for phi_g in T and t, and for the open potentials"""
    r, N = ctx.r, ctx.N
    reports = []

    started = _timer()
    residuals = []
    space = ctx.state.space
    for g in range(ctx.G + 1):
        phi = ctx.phi(g)
        residual = phi.diff(VarIndex.T(1))
        for k in range(1, N - r + 1):
            Tk = TSeries.variable(space, VarIndex.T(k + r), phi.cap)
            residual = residual - Tk * phi.diff(VarIndex.T(k)) * (k + r)
        if g == 0:
            residual = residual - TSeries.variable(space, VarIndex.T(r), phi.cap, coefficient=r)
        residuals.append((f"phi_{g}", residual))
    reports.append(_report("string", {"form": "T"}, residuals, started))

    started = _timer()
    residuals = []
    for g in range(ctx.G + 1):
        phi_t = ctx.dmap.to_t(ctx.phi(g))
        source = TSeries.variable(phi_t.space, VarIndex.t(r - 1, 0), phi_t.cap) if g == 0 else None
        residuals.append((f"phi_{g}", _t_string(phi_t, source)))
    reports.append(_report("string", {"form": "t"}, residuals, started))

    started = _timer()
    residuals = []
    F0 = open_F0(ctx.wave, ctx.dmap)
    residuals.append(("F_0", _t_string(F0, TSeries.variable(F0.space, VarIndex.s(), F0.cap))))
    for g in range(1, ctx.G + 1):
        residuals.append((f"F_{g}", _t_string(conjectural_open_Fg(ctx.wave, g, ctx.dmap))))
    reports.append(_report("string", {"form": "open"}, residuals, started,
                           note="genus >= 1 uses the conjectural potentials" if ctx.G else ""))
    return reports


# Dilaton equation

def check_dilaton(ctx: CheckContext) -> List[CheckReport]:
    """
    (i) T-form on phi_g, (ii) t-form on phi_g, (iii) open form,
    (iv) operator identities: O Phi = Phi/2, (z d/dz + O) symbol of L^{n/r},
    [O, d/dT_1] = d/dT_1 and the exchange of O with (L^{n/r})_+ on a seeded
    random series

    Raises:
        ConfigurationError: if T_{r+1} is outside the truncation
    """
    r, N = ctx.r, ctx.N
    if N < r + 1:
        raise ConfigurationError(f"the dilaton checks need times >= r+1 = {r + 1}, got {N}")
    O = OOperator(r)
    reports = []

    started = _timer()
    residuals = []
    for g in range(ctx.G + 1):
        phi = ctx.phi(g)
        Tr1 = VarIndex.T(r + 1)
        residual = phi.diff(Tr1) * Fraction(1, r + 1) - phi * (g - 1) - phi.euler()
        if g == 1:
            residual = residual - Fraction(1, 2)
        residuals.append((f"phi_{g}", residual))
    reports.append(_report("dilaton", {"item": "i", "form": "T"}, residuals, started))

    started = _timer()
    residuals = [(f"phi_{g}", _t_dilaton(ctx.dmap.to_t(ctx.phi(g)), g)) for g in range(ctx.G + 1)]
    reports.append(_report("dilaton", {"item": "ii", "form": "t"}, residuals, started))

    started = _timer()
    residuals = [("F_0", _t_dilaton(open_F0(ctx.wave, ctx.dmap), 0, with_s=True))]
    for g in range(1, ctx.G + 1):
        residuals.append((f"F_{g}", _t_dilaton(conjectural_open_Fg(ctx.wave, g, ctx.dmap), g, with_s=True)))
    reports.append(_report("dilaton", {"item": "iii", "form": "open"}, residuals, started))

    started = _timer()
    residuals = []
    Phi = ctx.wave.Phi
    residuals.append(("O Phi - Phi/2", O(Phi) - Phi * Fraction(1, 2)))
    phi = ctx.wave.phi
    T1 = VarIndex.T(1)
    residuals.append(("[O, d/dT1] phi - phi_x", O(phi.diff(T1)) - O(phi).diff(T1) - phi.diff(T1)))
    for n in range(1, N + 1):
        S = ctx.state.power(n, -1).to_symbol()
        diff = O.shifted(S) - S * n
        for i, c in sorted(diff.coeffs.items()):
            residuals.append((f"L^{n}/{r} z^{i}", c))
        A = ctx.state.power(n, 0).plus()
        f = random_series(ctx.state.space, ctx.D, random.Random(settings.random_seed + n))
        residuals.append((f"exchange n={n}", exchange_residual(O, A, f)))
    reports.append(_report("dilaton", {"item": "iv", "form": "operator"}, residuals, started))
    return reports


# Genus-one topological recursion

def _trr_T_residual(ctx: CheckContext, a: int) -> TSeries:
    r = ctx.r
    T = VarIndex.T
    phi0, phi1 = ctx.phi(0), ctx.phi(1)
    lhs = phi1.diff(T(a + r))
    rhs = phi0.diff(T(a)) * phi1.diff(T(r)) * Fraction(a + r, r)
    rhs = rhs + phi0.diff(T(a)).diff(T(r)) * Fraction(a + r, 2 * r)
    for b in range(1, r):
        H = ctx.hessian(a, b)
        if H:
            rhs = rhs + H * phi1.diff(T(r - b)) * Fraction(a + r, b * (r - b))
    return lhs - rhs


def hessian_t(ctx: CheckContext, alpha: int, p: int, beta: int) -> TSeries:
    """d^2 F_0^c / dt^alpha_p dt^beta_0 in t-variables"""
    k = index_of(alpha, p, ctx.r)
    b = beta + 1
    dmap = ctx.dmap
    return dmap.to_t(ctx.hessian(k, b)) * (dmap.factor(k) * dmap.factor(b))


def _trr_t_residual(ctx: CheckContext, alpha: int, p: int) -> TSeries:
    r = ctx.r
    dmap = ctx.dmap
    t = VarIndex.t
    phi0, phi1 = dmap.to_t(ctx.phi(0)), dmap.to_t(ctx.phi(1))
    lhs = phi1.diff(t(alpha, p + 1))
    rhs = phi0.diff(t(alpha, p)) * phi1.diff(t(r - 1, 0))
    rhs = rhs + phi0.diff(t(alpha, p)).diff(t(r - 1, 0)) * Fraction(1, 2)
    for mu in range(r - 1):
        nu = r - 2 - mu
        H = hessian_t(ctx, alpha, p, mu)
        if H:
            rhs = rhs + H * phi1.diff(t(nu, 0))
    return lhs - rhs


def _trr_open_residual(ctx: CheckContext, alpha: int, p: int) -> TSeries:
    r = ctx.r
    dmap = ctx.dmap
    t = VarIndex.t
    s = VarIndex.s()
    target = dmap.t_space(with_s=True)
    F1 = conjectural_open_Fg(ctx.wave, 1, dmap)
    Fo = open_F0(ctx.wave, dmap)
    Fext = _lift(extended_F0(ctx.wave, dmap), target)
    lhs = F1.diff(t(alpha, p + 1))
    rhs = Fext.diff(t(alpha, p)) * F1.diff(t(r - 1, 0))
    rhs = rhs + Fo.diff(t(alpha, p)) * F1.diff(s)
    rhs = rhs + Fo.diff(t(alpha, p)).diff(s) * Fraction(1, 2)
    for mu in range(r - 1):
        nu = r - 2 - mu
        H = hessian_t(ctx, alpha, p, mu)
        if H:
            rhs = rhs + _lift(H, target) * F1.diff(t(nu, 0))
    return lhs - rhs


def check_trr1(ctx: CheckContext) -> List[CheckReport]:
    """Genus-one TRR for phi_1 in T and t, and its transport to the open potentials"""
    r, N = ctx.r, ctx.N
    if ctx.G < 1:
        return [_skipped("trr1", {}, "genus_max < 1")]
    if N < r + 1:
        return [_skipped("trr1", {}, f"times < r+1 = {r + 1}")]
    reports = []

    started = _timer()
    residuals = [(f"a={a}", _trr_T_residual(ctx, a)) for a in range(1, N - r + 1)]
    reports.append(_report("trr1", {"form": "T"}, residuals, started))

    started = _timer()
    residuals = []
    for alpha in range(r):
        for p in range(N):
            if index_of(alpha, p + 1, r) > N:
                break
            residuals.append((f"t^{alpha}_{p + 1}", _trr_t_residual(ctx, alpha, p)))
    reports.append(_report("trr1", {"form": "t"}, residuals, started))

    started = _timer()
    residuals = []
    for alpha in range(r - 1):
        for p in range(N):
            if index_of(alpha, p + 1, r) > N:
                break
            residuals.append((f"t^{alpha}_{p + 1}", _trr_open_residual(ctx, alpha, p)))
    reports.append(_report(
        "trr1",
        {"form": "open"},
        residuals,
        started,
        note="transport consistency: follows from the t-form through the boundary substitution",
    ))
    return reports


# Symbol identities

def degree_one_residual(a: int, r: int, floor: int) -> Symbol:
    """(symbol of L0^{a/r})_1 - a(a-r)/(2r^2) L0^{a/r-2} dL0/dz dL0/dx over jets"""
    S = jet_L0_symbol(r, 1)
    Sx = Symbol(S.dx().coeffs, S.zero, None, r - 2)
    lhs = diff_degree_part(jet_power(a, r, floor, max_degree=1), 1)
    rhs = S.frac_power(a - 2 * r, r, floor - 2 * r).mul(S.dz(), floor - r).mul(Sx, floor)
    rhs = rhs * Fraction(a * (a - r), 2 * r * r)
    return lhs.truncate(floor) - rhs.truncate(floor)


def check_symbol_identities(ctx: CheckContext) -> List[CheckReport]:
    """
    The four symbol identities behind genus-one TRR, the degree-one formula,
    the membership property of (L0^{a/r})_- and the reduced third identity
    """
    r, N = ctx.r, ctx.N
    builder = ctx.builder
    P = builder.symbol_power
    L0 = builder.symbol
    L1 = ctx.strata[1].to_symbol() if len(ctx.strata) > 1 else Symbol({}, ctx.state.zero)
    reports = []
    a_values = list(range(1, max(N - r, 1) + 1))

    def coefficient_residuals(label: str, diff: Symbol) -> List[Tuple[str, Any]]:
        return [(f"{label} z^{i}", c) for i, c in sorted(diff.coeffs.items())]

    started = _timer()
    residuals = []
    for a in a_values:
        c = Fraction(a + r, r)
        lhs1 = P(a + r).plus_part().dz()
        rhs1 = P(a).plus_part() * L0.dz() * c
        lhs2 = P(a + r).plus_part().dz().dz()
        rhs2 = P(a).plus_part() * L0.dz().dz() * c + P(a).plus_part().dz() * L0.dz() * c
        lhs3 = ctx.plus_one(a + r)
        rhs3 = P(a).plus_part().dz() * L0.dx() * Fraction(a + r, 2 * r)
        lhs4 = (P(a) * L1).plus_part() * c
        rhs4 = P(a).plus_part() * L1 * c
        for b in range(1, r):
            H = builder.hessian(a, b)
            if not H:
                continue
            w = Fraction(a + r, b * (r - b))
            rhs1 = rhs1 + P(r - b).plus_part().dz() * (H * w)
            rhs2 = rhs2 + P(r - b).plus_part().dz().dz() * (H * w)
            rhs3 = rhs3 + ctx.plus_one(r - b) * (H * w)
            rhs4 = rhs4 + (P(-b) * L1).plus_part() * (H * (w * Fraction(r - b, r)))
        residuals += coefficient_residuals(f"first a={a}", lhs1 - rhs1)
        residuals += coefficient_residuals(f"second a={a}", lhs2 - rhs2)
        residuals += coefficient_residuals(f"third a={a}", lhs3 - rhs3)
        residuals += coefficient_residuals(f"fourth a={a}", lhs4 - rhs4)
    reports.append(_report("symbols", {"identity": "trr1"}, residuals, started))

    started = _timer()
    residuals = []
    floor = -(r + 1)
    for a in range(1, 2 * r + 3):
        residuals += coefficient_residuals(f"a={a}", degree_one_residual(a, r, floor))
    reports.append(_report("symbols", {"identity": "degree-one", "a_max": 2 * r + 2}, residuals, started))

    started = _timer()
    residuals = []
    for a in range(1, N + 1):
        residual = builder.membership_residual(a)
        for j in range(1, r + 1):
            residuals.append((f"a={a} z^-{j}", residual.coeff(-j)))
    reports.append(_report("symbols", {"identity": "membership"}, residuals, started))

    started = _timer()
    residuals = []
    for a in a_values:
        lhs = (P(a).minus_part().dz() * L0.dx()).plus_part()
        rhs = Symbol({}, ctx.state.zero)
        for b in range(1, r):
            H = builder.hessian(a, b)
            if H:
                rhs = rhs + (P(-b).dz() * L0.dx()).plus_part() * (H * Fraction(1, b))
        residuals += coefficient_residuals(f"a={a}", lhs - rhs)
    reports.append(_report("symbols", {"identity": "third-reduction"}, residuals, started))
    return reports


# Selection rules

def check_dimension(ctx: CheckContext) -> List[CheckReport]:
    """Every monomial of phi_g and of the t-potentials obeys its dimension constraint"""
    r = ctx.r
    started = _timer()
    violations: List[Tuple[str, Any]] = []
    counted = 0
    for g in range(ctx.G + 1):
        phi = ctx.phi(g)
        for exps in phi.monomials():
            counted += 1
            defect = phi_selection_defect(r, g, phi.space, exps)
            if defect:
                violations.append((f"phi_{g} {phi.monomial_text((0,) + exps)}", f"defect {defect}"))

    potentials: List[Tuple[str, int, TSeries]] = [
        ("extended", 0, extended_F0(ctx.wave, ctx.dmap)),
        ("open", 0, open_F0(ctx.wave, ctx.dmap)),
    ]
    potentials += [("conjectural", g, conjectural_open_Fg(ctx.wave, g, ctx.dmap)) for g in range(1, ctx.G + 1)]
    for flavor, g, F in potentials:
        for exps in F.monomials():
            counted += 1
            insertions, k = monomial_insertions(F.space, exps)
            defect = selection_defect(flavor, r, g, insertions, k)
            if defect:
                violations.append((f"{flavor}_{g} {F.monomial_text((0,) + exps)}", f"defect {defect}"))
    return [_report("dimension", {"monomials": counted}, violations, started)]


# Oracles and the r = 2 identification

def _closed_oracle_report(ctx: CheckContext) -> CheckReport:
    started = _timer()
    table = closed_table(ctx.state, 0, ctx.dmap, ctx.builder)
    entries = {key: value for (key, k), value in table.lookup().items()}
    lookup = table_seed_lookup(entries, ctx.N, ctx.D, ctx.r)
    keys = [key for key in entries if any(d for _, d in key)]
    oracle = closed_genus0_oracle(ctx.r, lookup, keys)
    residuals = [(str(key), oracle[key] - entries[key]) for key in sorted(oracle)]
    return _report("r2bridge", {"part": "closed-oracle", "compared": len(oracle)}, residuals, started)


def _primary_only(table) -> Dict[Tuple[Tuple[int, ...], int], Fraction]:
    out = {}
    for (key, k), value in table.lookup().items():
        if all(a == 0 for a, _ in key):
            out[(tuple(d for _, d in key), k)] = value
    return out


def identification_values(ctx: CheckContext, g: int) -> Dict[Tuple[Tuple[int, ...], int], Fraction]:
    """Coefficients of phi_g at t^0 = t, t^1_d = delta_{d0} s (s-free part removed in genus 0), r = 2"""
    phi_t = ctx.dmap.to_t(ctx.phi(g))
    t0_vars = [v for v in phi_t.space.vars if v.alpha == 0]
    weights = [phi_t.space.weight(v) for v in t0_vars] + [1]
    target = SeriesSpace(t0_vars + [VarIndex.s()], weights, x=VarIndex.t(0, 0))
    mapping = {}
    for v in phi_t.space.vars:
        if v.alpha == 1:
            mapping[v] = (
                TSeries.variable(target, VarIndex.s(), phi_t.cap) if v.d == 0 else TSeries.zero(target, phi_t.cap)
            )
    F = phi_t.subst(mapping, target)
    if g == 0:
        F = F - F.set_zero(VarIndex.s())
    out = {}
    for exps, laurent in F.monomials().items():
        value = laurent.component(0)
        if not value:
            continue
        insertions, k = monomial_insertions(target, exps)
        for e in exps:
            value = value * factorial(e)
        out[(tuple(d for _, d in insertions), k)] = as_rational_value(value)
    return out


def check_r2bridge(ctx: CheckContext) -> List[CheckReport]:
    """Closed oracle agreement; for r = 2 also the open oracle, bridge parity and identification"""
    reports = [_closed_oracle_report(ctx)]
    if ctx.r != 2:
        reports.append(_skipped("r2bridge", {"part": "open"}, f"open comparisons need r = 2, have r = {ctx.r}"))
        return reports

    started = _timer()
    residuals = []
    parity = []
    bridged: Dict[int, Dict[Tuple[Tuple[int, ...], int], Fraction]] = {}
    for g in range(ctx.G + 1):
        if g == 0:
            table = potential_table(open_F0(ctx.wave, ctx.dmap), 2, "open", 0)
        else:
            table = potential_table(conjectural_open_Fg(ctx.wave, g, ctx.dmap), 2, "conjectural", g)
        bridged[g] = {}
        for key, value in _primary_only(table).items():
            try:
                bridged[g][key] = r2_bridge(value, g, key[1])
            except BridgeParityError as e:
                parity.append((f"g={g} {key}", str(e)))
    oracle = open_genus0_oracle(bridged[0].keys())
    for key in sorted(oracle):
        residuals.append((f"<{key[0]} sigma^{key[1]}>", oracle[key] - bridged[0][key]))
    reports.append(_report("r2bridge", {"part": "open-oracle", "compared": len(oracle)}, residuals, started))
    reports.append(_report("r2bridge", {"part": "parity"}, parity, started))

    started = _timer()
    residuals = []
    for g in range(ctx.G + 1):
        expected = identification_values(ctx, g)
        for key in sorted(set(expected) | set(bridged[g])):
            diff = expected.get(key, Fraction(0)) - bridged[g].get(key, Fraction(0))
            residuals.append((f"g={g} <{key[0]} sigma^{key[1]}>", diff))
    reports.append(_report("r2bridge", {"part": "identification"}, residuals, started,
                           note="genus >= 1 compares the conjectural potentials"))
    return reports


# Genus-zero and genus-one relations

def check_genus_relations(ctx: CheckContext) -> List[CheckReport]:
    """
    dphi_0/dT_a = (L0^{a/r})_+ at z = (phi_0)_x, the genus-one lemma for
    dphi_1/dT_a and the differentiated closed string equation on the Hessian
    """
    r, N = ctx.r, ctx.N
    builder = ctx.builder
    P = builder.symbol_power
    T1 = VarIndex.T(1)
    phi0 = ctx.phi(0)
    z0 = phi0.diff(T1)
    reports = []

    started = _timer()
    residuals = []
    for a in range(1, N + 1):
        residuals.append((f"a={a}", phi0.diff(VarIndex.T(a)) - P(a).plus_part().subst_z(z0)))
    reports.append(_report("genus", {"relation": "genus-0"}, residuals, started))

    if ctx.G >= 1:
        started = _timer()
        residuals = []
        phi1 = ctx.phi(1)
        L1 = ctx.strata[1].to_symbol()
        z1 = phi1.diff(T1)
        z0x = z0.diff(T1)
        for a in range(1, N + 1):
            plus = P(a).plus_part()
            body = plus.dz() * z1 + plus.dz().dz() * (z0x * Fraction(1, 2)) + ctx.plus_one(a)
            body = body + (P(a - r) * L1).plus_part() * Fraction(a, r)
            residuals.append((f"a={a}", phi1.diff(VarIndex.T(a)) - body.subst_z(z0)))
        reports.append(_report("genus", {"relation": "genus-1"}, residuals, started))
    else:
        reports.append(_skipped("genus", {"relation": "genus-1"}, "genus_max < 1"))

    started = _timer()
    residuals = []
    t = VarIndex.t
    for alpha in range(r - 1):
        for p in range(N):
            if index_of(alpha, p, r) > N:
                break
            for beta in range(r - 1):
                H = hessian_t(ctx, alpha, p, beta)
                residual = H.diff(t(0, 0))
                for upper, lower in _t_pairs(H.space):
                    residual = residual - TSeries.variable(H.space, upper, H.cap) * H.diff(lower)
                if p >= 1:
                    residual = residual - hessian_t(ctx, alpha, p - 1, beta)
                elif alpha + beta == r - 2:
                    residual = residual - 1
                residuals.append((f"H[t^{alpha}_{p}, t^{beta}_0]", residual))
    reports.append(_report("genus", {"relation": "hessian-string"}, residuals, started))
    return reports


# Hierarchy sanity

def check_hierarchy(ctx: CheckContext, with_stability: bool = True) -> List[CheckReport]:
    """Flow equations, T_{mr}-independence, eps-pattern, res L^{m} = 0 and depth stability"""
    state = ctx.state
    r, N = ctx.r, ctx.N
    L = state.L
    reports = []

    started = _timer()
    residuals = []
    for n in range(2, N + 1):
        rhs = flow_rhs(L, n, r, state.powers(0))
        for i in range(r - 1):
            residuals.append((f"T{n} f{i}", L.coeff(i).diff(VarIndex.T(n)) - rhs.coeff(i)))
    for i in range(r - 1):
        residuals.append((f"n=1 f{i}", flow_rhs(L, 1, r, state.powers(0)).coeff(i) - L.coeff(i).dx()))
    reports.append(_report("hierarchy", {"item": "flows"}, residuals, started))

    started = _timer()
    residuals = []
    for m in range(1, N // r + 1):
        var = VarIndex.T(m * r)
        for i in range(r - 1):
            residuals.append((f"d f{i} / dT{m * r}", L.coeff(i).diff(var)))
        residuals.append((f"res L^{m}", state.power(m * r, -1).residue()))
    reports.append(_report("hierarchy", {"item": "T_mr"}, residuals, started))

    started = _timer()
    try:
        strata = stratify(state)
        reports.append(_report("hierarchy", {"item": "eps-pattern"}, [], started, details={"strata": len(strata)}))
    except EngineError as e:
        reports.append(_report("hierarchy", {"item": "eps-pattern"}, [("stratify", str(e))], started))

    if with_stability:
        started = _timer()
        stable, changed = stability_check(state)
        reports.append(_report(
            "hierarchy",
            {"item": "stability", "depth": state.spec.depth + 2, "eps_cap": state.spec.eps_cap + 1},
            [(name, "changed") for name in changed],
            started,
        ))
    return reports


CHECKS: Dict[str, Callable[[CheckContext], List[CheckReport]]] = {
    "string": check_string,
    "dilaton": check_dilaton,
    "trr1": check_trr1,
    "symbols": check_symbol_identities,
    "dimension": check_dimension,
    "r2bridge": check_r2bridge,
    "genus": check_genus_relations,
    "hierarchy": check_hierarchy,
}


def run_checks(
    state: HierarchyState,
    names: Optional[List[str]] = None,
    threads: Optional[int] = None,
    wave: Optional[WaveState] = None
) -> List[CheckReport]:
    """
    Run checks concurrently

    Args:
        state: Solved hierarchy
        names: Checks to run (defaults to settings.checks)
        threads: Worker threads (defaults to settings.hierarchy_threads)
        wave: Wave function to use instead of the state's own

    Returns:
        Reports in the order of `names`

    Raises:
        ConfigurationError: for unknown check names or an unusable truncation
    """
    names = list(names or settings.checks)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise ConfigurationError(f"unknown checks: {', '.join(unknown)}; available: {', '.join(CHECK_NAMES)}")
    if "dilaton" in names and state.spec.times < state.r + 1:
        raise ConfigurationError(f"the dilaton checks need times >= r+1 = {state.r + 1}")
    threads = threads or settings.hierarchy_threads
    ctx = CheckContext(state, wave)
    try:
        ctx.warm()
    except ConfigurationError:
        raise
    except EngineError as e:
        logger.error(f"Check setup failed with {type(e).__name__}: {e}")
        return [CheckReport(check="setup", status="fail", note=f"{type(e).__name__}: {e}")]

    logger.info(f"Running checks {', '.join(names)} with {threads} thread(s)")
    results: Dict[str, List[CheckReport]] = {}
    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        futures = {executor.submit(CHECKS[name], ctx): name for name in names}
        for future in as_completed(futures):
            name = futures[future]
            try:
                results[name] = future.result()
            except ConfigurationError:
                raise
            except EngineError as e:
                logger.error(f"Check {name} failed with {type(e).__name__}: {e}")
                results[name] = [CheckReport(check=name, status="fail", note=f"{type(e).__name__}: {e}")]
    reports = [report for name in names for report in results[name]]
    passed = sum(1 for r in reports if r.status == "pass")
    logger.info(f"Checks finished: {passed}/{len(reports)} passed")
    return reports
