"""
Wave function Phi of the hierarchy and its genus expansion phi = log Phi
"""
import time
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from config import settings
from exceptions import ConfigurationError, NegativeGenusError
from logger import setup_logger
from series import TSeries, VarIndex
from solver import HierarchyState, evaluate_flows, integrate_layer

logger = setup_logger(__name__)


@dataclass
class WaveState:
    """Phi, phi = log Phi and the strata phi_g = [eps^{g-1}] phi for g <= genus_max"""

    Phi: TSeries
    phi: TSeries
    strata: Dict[int, TSeries]
    genus_max: int
    provenance: Dict[str, Any] = field(default_factory=dict)

    def stratum(self, g: int) -> TSeries:
        return phi_stratum(self, g)


def solve_phi(state: HierarchyState, threads: Optional[int] = None) -> WaveState:
    """
    Integrate dPhi/dT_n = eps^{n-1} (L^{n/r})_+ Phi from Phi = 1 at T_{>=2} = 0

    Args:
        state: Solved hierarchy
        threads: Worker threads per layer

    Returns:
        WaveState with phi strata up to spec.genus_max

    Raises:
        PathDependenceError: if two flows disagree on a monomial of Phi
        NegativeGenusError: if phi carries a power of eps below -1
    """
    threads = threads or settings.hierarchy_threads
    spec = state.spec
    space = state.space
    D, N = spec.degree, spec.times
    powers = state.powers(-1)
    plus = {n: powers.get(n, -1).plus() for n in range(2, N + 1)}

    logger.info(f"Solving wave function r={spec.r}, N={N}, D={D}")
    Phi = TSeries.constant(space, D, 1)
    layers = []
    for d in range(D):
        started = time.time()
        current = Phi.truncate(d)

        def flow(n: int) -> TSeries:
            return plus[n].apply(current).shift_eps(n - 1).degree_part(d)

        rhs = evaluate_flows(flow, list(plus), threads)
        terms = integrate_layer(space, d, rhs, "Phi")
        if terms:
            Phi = Phi + TSeries(space, D, terms)
        elapsed = round((time.time() - started) * 1000)
        layers.append({"degree": d + 1, "millis": elapsed, "terms": len(Phi)})
        logger.info(f"Phi layer {d + 1}/{D} solved in {elapsed} ms")

    phi = Phi.log()
    for key in sorted(phi.terms):
        if key[0] < -1:
            logger.error(f"phi has eps^{key[0]} at exponents {key[1:]}")
            raise NegativeGenusError(
                f"phi carries eps^{key[0]} (genus {key[0] + 1}) at exponents {key[1:]}",
                monomial=key,
            )
    strata = {g: phi.eps_coefficient(g - 1) for g in range(spec.genus_max + 1)}
    logger.info(f"phi has {len(phi)} terms, strata 0..{spec.genus_max} extracted")
    return WaveState(Phi=Phi, phi=phi, strata=strata, genus_max=spec.genus_max, provenance={"layers": layers})


def phi_stratum(ws: WaveState, g: int) -> TSeries:
    """phi_g; zero for g < 0"""
    if g < 0:
        return TSeries.zero(ws.phi.space, ws.phi.cap)
    if g > ws.genus_max:
        raise ConfigurationError(f"genus {g} was not solved (genus_max={ws.genus_max})")
    return ws.strata[g]


def phi_x(ws: WaveState, g: int) -> TSeries:
    """(phi_g)_x"""
    return phi_stratum(ws, g).diff(VarIndex.T(1))
