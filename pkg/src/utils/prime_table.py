import math
from functools import lru_cache
from typing import List, NamedTuple, Tuple

import numpy as np
from scipy import special

from src.config import PRIME_LIMIT_MAX, PRIME_TAIL_DIRECT_SPAN, PRIME_TAIL_RELATIVE_FLOOR, SIEVE_SEGMENT
from src.utils.errors import ConfigurationError, InsufficientTableError, RangeError
from src.utils.logger import setup_logger

logger = setup_logger(__name__)


class PrimePowers(NamedTuple):
    """Prime powers p^n <= Y as parallel arrays, sorted by value."""
    primes: np.ndarray
    exponents: np.ndarray
    values: np.ndarray

    def __len__(self) -> int:
        return int(self.values.size)

    def pairs(self) -> List[Tuple[int, int]]:
        return list(zip(self.primes.tolist(), self.exponents.tolist()))


class PrimeTable:
    """
    Ascending primes up to a limit.

    The backing array is read-only, so one table can be shared by every worker
    thread. Build tables with sieve() or get_prime_table().
    """

    __slots__ = ("limit", "primes")

    def __init__(self, limit: int, primes: np.ndarray):
        primes = np.ascontiguousarray(primes, dtype=np.int64)
        primes.setflags(write=False)
        self.limit = int(limit)
        self.primes = primes

    def __len__(self) -> int:
        return int(self.primes.size)

    def __repr__(self) -> str:
        return f"PrimeTable(limit={self.limit}, count={len(self)})"

    def primes_up_to(self, bound: float) -> np.ndarray:
        """
        Primes p <= bound, as a read-only view.

        Raises:
            InsufficientTableError: If bound exceeds the table limit.
        """
        if bound > self.limit:
            raise InsufficientTableError(
                f"bound {bound:g} exceeds table limit {self.limit}", "prime_table", "primes_up_to")
        return self.primes[: int(np.searchsorted(self.primes, math.floor(bound), side="right"))]

    def prime_powers(self, Y: float) -> PrimePowers:
        return prime_powers(self, Y)


def _simple_sieve(limit: int) -> np.ndarray:
    if limit < 2:
        return np.array([], dtype=np.int64)
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if is_prime[p]:
            is_prime[p * p:: p] = False
    return np.flatnonzero(is_prime).astype(np.int64)


def sieve(limit: int) -> PrimeTable:
    """
    Segmented odd-only sieve of Eratosthenes.

    Args:
        limit (int): Largest integer examined, 2 <= limit <= 10^9.

    Returns:
        PrimeTable: Exactly the primes <= limit.

    Raises:
        ConfigurationError: If limit is outside [2, 10^9].
    """
    if isinstance(limit, bool) or int(limit) != limit or not 2 <= limit <= PRIME_LIMIT_MAX:
        raise ConfigurationError(f"prime limit must be an integer in [2, {PRIME_LIMIT_MAX}], got {limit}",
                                 "prime_table", "sieve")
    limit = int(limit)
    base = _simple_sieve(math.isqrt(limit) + 1)
    odd_base = base[1:]

    chunks = [np.array([2], dtype=np.int64)]
    low = 3
    span = 2 * SIEVE_SEGMENT
    while low <= limit:
        high = min(low + span, limit + 1)
        mask = np.ones((high - low + 1) // 2, dtype=bool)
        for p in odd_base:
            p = int(p)
            p2 = p * p
            if p2 >= high:
                break
            start = max(p2, ((low + p - 1) // p) * p)
            if start % 2 == 0:
                start += p
            if start < high:
                mask[(start - low) // 2:: p] = False
        chunks.append(low + 2 * np.flatnonzero(mask).astype(np.int64))
        low = high if high % 2 == 1 else high + 1

    primes = np.concatenate(chunks)
    primes = primes[primes <= limit]
    logger.debug(f"Sieved {primes.size} primes up to {limit}")
    return PrimeTable(limit, primes)


@lru_cache(maxsize=4)
def get_prime_table(limit: int) -> PrimeTable:
    """Shared, cached table for a given limit."""
    return sieve(limit)


def prime_powers(table: PrimeTable, Y: float) -> PrimePowers:
    """
    All prime powers p^n <= Y, each exactly once, sorted by p^n.

    Args:
        table (PrimeTable): Table reaching at least Y.
        Y (float): Upper bound for p^n.

    Returns:
        PrimePowers: Parallel arrays (primes, exponents, values).

    Raises:
        InsufficientTableError: If Y exceeds the table limit.
    """
    if Y > table.limit:
        raise InsufficientTableError(f"Y = {Y:g} exceeds table limit {table.limit}", "prime_table", "prime_powers")
    base = table.primes_up_to(Y)
    primes, exponents, values = [], [], []
    n = 1
    candidates = base
    while candidates.size:
        powers = candidates ** n
        keep = powers <= Y
        if not keep.any():
            break
        primes.append(candidates[keep])
        exponents.append(np.full(int(keep.sum()), n, dtype=np.int64))
        values.append(powers[keep])
        candidates = candidates[keep]
        n += 1

    if not primes:
        empty = np.array([], dtype=np.int64)
        return PrimePowers(empty, empty, empty)
    primes = np.concatenate(primes)
    exponents = np.concatenate(exponents)
    values = np.concatenate(values)
    order = np.argsort(values, kind="stable")
    return PrimePowers(primes[order], exponents[order], values[order])


def _mobius(n: int) -> int:
    result = 1
    m = n
    p = 2
    while p * p <= m:
        if m % p == 0:
            m //= p
            if m % p == 0:
                return 0
            result = -result
        p += 1
    return -result if m > 1 else result


def prime_zeta(s: float) -> float:
    """
    Prime zeta function P(s) = sum over primes of p^-s, for real s > 1.

    Uses P(s) = sum_k mu(k)/k log zeta(ks), with log zeta(x) = log1p(zeta(x) - 1)
    so large arguments keep full relative precision.

    Raises:
        RangeError: If s <= 1.
    """
    if s <= 1:
        raise RangeError(f"prime zeta needs s > 1, got {s}", "prime_table", "prime_zeta")
    total = 0.0
    k = 1
    while True:
        term_size = 2.0 ** (-k * s)
        if k > 1 and term_size < 1e-18 * max(total, 1e-300):
            break
        mu = _mobius(k)
        if mu:
            total += mu / k * math.log1p(float(special.zetac(k * s)))
        k += 1
    return total


def prime_zeta_tail(s: float, P: float, table: PrimeTable) -> float:
    """
    Sum over primes p > P of p^-s, for real s > 1.

    P(s) minus the head sum while that difference keeps its digits. Once the tail
    falls below PRIME_TAIL_RELATIVE_FLOOR * P(s) the primes in (P, P2] are summed
    directly and E1((s-1) log P2) covers the rest.

    Args:
        s (float): Exponent, s > 1.
        P (float): Cutoff; primes <= P are excluded.
        table (PrimeTable): Table reaching P.

    Returns:
        float: The tail sum.
    """
    head = table.primes_up_to(P).astype(float)
    total = prime_zeta(s)
    tail = total - float(np.sum(head ** (-s)))
    if tail > PRIME_TAIL_RELATIVE_FLOOR * total:
        return tail
    P2 = int(min(4.0 * P, P + PRIME_TAIL_DIRECT_SPAN, PRIME_LIMIT_MAX))
    if P2 <= P + 1:
        return log_integral_tail(s, P)
    wide = table if table.limit >= P2 else get_prime_table(P2)
    beyond = wide.primes_up_to(P2)[len(head):].astype(float)
    return float(np.sum(beyond ** (-s))) + log_integral_tail(s, P2)


def log_integral_tail(s: float, P: float) -> float:
    """
    Logarithmic-integral approximation of sum_{p > P} p^-s, namely E1((s-1) log P).
    """
    if s <= 1:
        raise RangeError(f"tail needs s > 1, got {s}", "prime_table", "log_integral_tail")
    return float(special.exp1((s - 1.0) * math.log(P)))
