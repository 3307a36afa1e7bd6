"""
Independent genus-0 recursions used to cross-check hierarchy output
"""
import threading
from fractions import Fraction
from itertools import combinations
from math import comb, factorial, prod
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from logger import setup_logger

logger = setup_logger(__name__)

Insertion = Tuple[int, int]
Key = Tuple[Insertion, ...]
SeedLookup = Callable[[Key], Optional[Fraction]]


def _splits(items: Sequence) -> Iterable[Tuple[tuple, tuple]]:
    """Every ordered split A ⊔ B of labelled points"""
    idx = range(len(items))
    for size in range(len(items) + 1):
        for chosen in combinations(idx, size):
            picked = set(chosen)
            yield (
                tuple(items[i] for i in chosen),
                tuple(items[i] for i in idx if i not in picked),
            )


class ClosedGenus0Oracle:
    """
    Genus-0 r-spin correlators from primary seeds

    Descendants are removed with
    <tau_{a,p+1} tau_b tau_c S> = sum_{A ⊔ B = S} sum_{mu + nu = r-2}
    <tau_{a,p} tau_mu A> <tau_nu tau_b tau_c B>.
    Primary correlators come from `seed_lookup`, which returns None when a
    seed is out of range; any value that needs such a seed is None too.
    """

    def __init__(self, r: int, seed_lookup: SeedLookup):
        self.r = r
        self.seed_lookup = seed_lookup
        self._cache: Dict[Key, Optional[Fraction]] = {}
        self._lock = threading.RLock()

    def dimension_ok(self, key: Key) -> bool:
        r = self.r
        return sum(a + r * d - r for a, d in key) == -2 * (r + 1)

    def value(self, insertions: Iterable[Insertion]) -> Optional[Fraction]:
        key = tuple(sorted(insertions))
        with self._lock:
            if key in self._cache:
                return self._cache[key]
            result = self._compute(key)
            self._cache[key] = result
            return result

    def _compute(self, key: Key) -> Optional[Fraction]:
        r = self.r
        if len(key) < 3 or not self.dimension_ok(key):
            return Fraction(0)
        if any(a == r - 1 for a, _ in key):
            return Fraction(0)
        if all(d == 0 for _, d in key):
            seed = self.seed_lookup(key)
            return None if seed is None else Fraction(seed)

        points = list(key)
        top = max(range(len(points)), key=lambda i: points[i][1])
        alpha, p1 = points.pop(top)
        b, c = points[0], points[1]
        rest = points[2:]
        total = Fraction(0)
        for A, B in _splits(rest):
            for mu in range(r - 1):
                nu = r - 2 - mu
                left = self.value(((alpha, p1 - 1), (mu, 0)) + A)
                if left == 0:
                    continue
                right = self.value(((nu, 0), b, c) + B)
                if left is None or right is None:
                    return None
                total += left * right
        return total


def closed_genus0_oracle(r: int, seed_lookup: SeedLookup, keys: Iterable[Iterable[Insertion]]) -> Dict[Key, Fraction]:
    """
    Oracle values for the requested correlators

    Args:
        r: Spin parameter
        seed_lookup: Primary correlator -> value, None when not available
        keys: Correlators to compute

    Returns:
        Map of the computable keys to their values
    """
    oracle = ClosedGenus0Oracle(r, seed_lookup)
    out: Dict[Key, Fraction] = {}
    for insertions in keys:
        key = tuple(sorted(insertions))
        value = oracle.value(key)
        if value is not None:
            out[key] = value
    logger.debug(f"closed oracle r={r}: {len(out)} of the requested values computable")
    return out


def table_seed_lookup(entries: Dict[Key, Fraction], times: int, degree: int, r: int) -> SeedLookup:
    """
    Seeds from a closed genus-0 table of a truncated solve

    A primary correlator counts as known when every index k = a + 1 fits
    below `times` and at most degree - 1 insertions sit outside tau^0_0.
    """
    def lookup(key: Key) -> Optional[Fraction]:
        if any(a + 1 > times for a, _ in key):
            return None
        if sum(1 for a, d in key if (a, d) != (0, 0)) > degree - 1:
            return None
        return entries.get(key, Fraction(0))

    return lookup


# Open r = 2 sector in the classical normalization

def kdv_genus0(ds: Sequence[int]) -> Fraction:
    """<tau_{d_1} ... tau_{d_n}>_0 = (n-3)! / prod d_i!"""
    n = len(ds)
    if n < 3 or sum(ds) != n - 3:
        return Fraction(0)
    return Fraction(factorial(n - 3), prod(factorial(d) for d in ds))


class OpenGenus0Oracle:
    """
    Genus-0 open intersection numbers <tau_{d_1} ... tau_{d_l} sigma^k>

    Seeds <sigma^3> = <tau_0 sigma> = 1; descendants are lowered by the
    boundary recursions (one with boundary points present, one with a
    second bulk point) with closed values from `kdv_genus0`.
    """

    def __init__(self):
        self._cache: Dict[Tuple[Tuple[int, ...], int], Fraction] = {}
        self._lock = threading.RLock()

    @staticmethod
    def dimension_ok(ds: Sequence[int], k: int) -> bool:
        return 2 * sum(ds) == k + 2 * len(ds) - 3

    def value(self, ds: Iterable[int], k: int) -> Fraction:
        key = (tuple(sorted(ds)), k)
        with self._lock:
            if key not in self._cache:
                self._cache[key] = self._compute(*key)
            return self._cache[key]

    def _compute(self, ds: Tuple[int, ...], k: int) -> Fraction:
        l = len(ds)
        if k + 2 * l <= 2 or not self.dimension_ok(ds, k):
            return Fraction(0)
        if not any(ds):
            return Fraction(1) if (l, k) in ((0, 3), (1, 1)) else Fraction(0)

        bulk = list(ds)
        top = max(range(l), key=lambda i: bulk[i])
        n = bulk.pop(top) - 1
        total = Fraction(0)
        if k >= 1:
            for A, B in _splits(bulk):
                closed = kdv_genus0((n, 0) + A)
                if closed:
                    total += closed * self.value((0,) + B, k)
                for i in range(k):
                    j = k - 1 - i
                    left = self.value((n,) + A, i)
                    if left:
                        total += comb(k - 1, i) * left * self.value(B, j + 2)
            return total

        # no boundary points: lower against a second bulk point
        m = bulk.pop(0)
        for A, B in _splits(bulk):
            closed = kdv_genus0((n, 0) + A)
            if closed:
                total += closed * self.value((0, m) + B, 0)
            left = self.value((n,) + A, 0)
            if left:
                total += left * self.value((m,) + B, 1)
        return total


def open_genus0_oracle(keys: Iterable[Tuple[Iterable[int], int]]) -> Dict[Tuple[Tuple[int, ...], int], Fraction]:
    """Open genus-0 numbers for (bulk descendants, boundary count) keys"""
    oracle = OpenGenus0Oracle()
    out = {}
    for ds, k in keys:
        ds = tuple(sorted(ds))
        out[(ds, k)] = oracle.value(ds, k)
    return out


def open_keys_up_to(max_points: int, max_descendant: int) -> List[Tuple[Tuple[int, ...], int]]:
    """Dimension-allowed (bulk, k) keys with l + k <= max_points"""
    keys = []
    for l in range(max_points + 1):
        for k in range(max_points - l + 1):
            for ds in _multisets(l, max_descendant):
                if OpenGenus0Oracle.dimension_ok(ds, k) and k + 2 * l > 2:
                    keys.append((ds, k))
    return keys


def _multisets(size: int, top: int) -> List[Tuple[int, ...]]:
    if size == 0:
        return [()]
    out = []
    for rest in _multisets(size - 1, top):
        start = rest[-1] if rest else 0
        for d in range(start, top + 1):
            out.append(rest + (d,))
    return out
