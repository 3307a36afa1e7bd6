"""
Exception hierarchy for the hierarchy engine
"""
from typing import Optional, Tuple


class EngineError(Exception):
    """Base class for all engine errors"""
    pass


class ConfigurationError(EngineError):
    """Invalid truncation spec, flags, config file or missing state"""
    pass


# Scalars

class ScalarError(EngineError):
    pass


class NonInvertibleError(ScalarError):
    """Element of the cyclotomic quotient ring has no inverse"""
    pass


class NonRationalValueError(ScalarError):
    """A value expected in Q still carries zeta components"""
    pass


class IncompatibleScalarError(ScalarError):
    """Scalars built for different r were combined"""
    pass


# Series

class SeriesError(EngineError):
    pass


class IncompatibleSeriesError(SeriesError):
    """Operands live in different series spaces"""
    pass


class SeriesDomainError(SeriesError):
    """exp/log called outside their domain"""
    pass


class SubstitutionError(SeriesError):
    """Substitution image would pull unknown higher-degree terms below the cap"""
    pass


# Operators

class OperatorError(EngineError):
    pass


class NonMonicError(OperatorError):
    pass


class NegativeOrderError(OperatorError):
    pass


class InsufficientDepthError(OperatorError):
    """Requested a coefficient below the exactly known floor of an operator"""
    pass


class SymbolSubstitutionError(OperatorError):
    pass


class MissingGeneratorError(OperatorError):
    pass


# Solver

class SolverError(EngineError):
    pass


class FlowError(SolverError):
    """A commutator [(L^{n/r})_+, L] kept a coefficient of order >= r-1"""
    pass


class PathDependenceError(SolverError):
    """Two flows produced different values for the same monomial"""

    def __init__(self, message: str, monomial: Optional[Tuple[int, ...]] = None):
        super().__init__(message)
        self.monomial = monomial


class StratificationError(SolverError):
    pass


class NegativeGenusError(SolverError):
    """log(Phi) produced a power of epsilon below -1"""

    def __init__(self, message: str, monomial: Optional[Tuple[int, ...]] = None):
        super().__init__(message)
        self.monomial = monomial


# Potentials

class PotentialError(EngineError):
    pass


class ClosedIndexError(PotentialError):
    pass


class HessianMismatchError(PotentialError):
    pass


class BridgeParityError(PotentialError):
    pass


class SelectionRuleError(PotentialError):
    pass
