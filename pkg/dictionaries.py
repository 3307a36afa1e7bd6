"""
Dictionaries between the hierarchy times T_k and the r-spin variables t^a_d, s
"""
from fractions import Fraction
from math import factorial
from typing import Dict, List, Optional, Tuple

from exceptions import ConfigurationError
from scalars import CycScalar
from series import SeriesSpace, TSeries, VarIndex

BOUNDARY_MODES = ("none", "scaled", "shifted")


def kfact(a: int, d: int, r: int) -> int:
    """k!_r = prod_{i=0}^{d} (a + 1 + r i)"""
    result = 1
    for i in range(d + 1):
        result *= a + 1 + r * i
    return result


def twist_of(k: int, r: int) -> Tuple[int, int]:
    """(a, d) with k = a + 1 + r d; multiples of r map to a = r-1, d = k/r - 1"""
    if k % r == 0:
        return r - 1, k // r - 1
    return (k - 1) % r, (k - 1) // r


def index_of(a: int, d: int, r: int) -> int:
    if a == r - 1:
        return r * (d + 1)
    return a + 1 + r * d


class DictionaryMap:
    """
    T_k = c_k t^a_d with exact prefactors in Q[zeta]

    For a <= r-2: c_k = zeta^{-(3a + 2 - r + d(r-2))} / k!_r, k = a + 1 + r d.
    For k = m r:  c_k = zeta^{-m(r-2)} / (m! r^m), t^{r-1}_{m-1}.
    """

    def __init__(self, r: int, times: int):
        if r < 2:
            raise ConfigurationError(f"r must be at least 2, got {r}")
        self.r = r
        self.times = times
        self.factors: Dict[int, CycScalar] = {k: self._factor(k) for k in range(1, times + 1)}
        self.t_vars: List[VarIndex] = [self.t_var(k) for k in range(1, times + 1)]

    def _factor(self, k: int) -> CycScalar:
        r = self.r
        a, d = twist_of(k, r)
        if a == r - 1:
            m = d + 1
            return CycScalar.zeta_power(r, -m * (r - 2), Fraction(1, factorial(m) * r ** m))
        exponent = 3 * a + 2 - r + d * (r - 2)
        return CycScalar.zeta_power(r, -exponent, Fraction(1, kfact(a, d, r)))

    def factor(self, k: int) -> CycScalar:
        return self.factors[k]

    def t_var(self, k: int) -> VarIndex:
        a, d = twist_of(k, self.r)
        return VarIndex.t(a, d)

    def k_of(self, var: VarIndex) -> int:
        if var.kind != "t" or var.alpha > self.r - 1:
            raise ConfigurationError(f"{var} is not a t-variable for r={self.r}")
        return index_of(var.alpha, var.d, self.r)

    def t_space(self, with_s: bool = False) -> SeriesSpace:
        """t-variables for T_1..T_N (t^0_0 = x of weight 0), optionally with s of weight 1"""
        variables = list(self.t_vars)
        weights = [0] + [1] * (len(variables) - 1)
        if with_s:
            variables.append(VarIndex.s())
            weights.append(1)
        return SeriesSpace(variables, weights, x=VarIndex.t(0, 0))

    def _boundary_image(self, var: VarIndex, target: SeriesSpace, cap: int, mode: str) -> TSeries:
        image = TSeries.variable(target, var, cap)
        if var.alpha != self.r - 1 or mode == "none":
            return image
        root = CycScalar.sqrt_minus_r(self.r)
        if mode == "shifted" and var.d == 0:
            image = image - TSeries.variable(target, VarIndex.s(), cap, coefficient=self.r)
        return image * root.inverse()

    def to_t(self, series: TSeries, mode: str = "none", with_s: Optional[bool] = None) -> TSeries:
        """
        Rewrite a T-series in t-variables

        Args:
            series: Series in T_1..T_N
            mode: Treatment of t^{r-1}: none, scaled (t -> t/sqrt(-r)) or
                shifted (t_d -> (t_d - r delta_{d0} s)/sqrt(-r))
            with_s: Include s in the target space (defaults to mode == shifted)

        Returns:
            Series in the t-space
        """
        if mode not in BOUNDARY_MODES:
            raise ConfigurationError(f"unknown boundary mode {mode!r}")
        with_s = (mode == "shifted") if with_s is None else with_s
        target = self.t_space(with_s)
        mapping = {}
        for var in series.space.vars:
            k = var.n
            t = self.t_var(k)
            mapping[var] = self._boundary_image(t, target, series.cap, mode) * self.factors[k]
        return series.subst(mapping, target)

    def from_t(self, series: TSeries, space: SeriesSpace) -> TSeries:
        """Inverse of `to_t` without boundary treatment: t^a_d -> T_k / c_k"""
        mapping = {}
        for var in series.space.vars:
            k = self.k_of(var)
            mapping[var] = TSeries.variable(space, VarIndex.T(k), series.cap, coefficient=self.factors[k].inverse())
        return series.subst(mapping, space)

    def derivative_factor(self, k: int) -> CycScalar:
        """d/dt^a_d = c_k d/dT_k"""
        return self.factors[k]
