import itertools
import math
from collections import Counter
from functools import lru_cache
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from models.pydantic_classes import ModelConfig, ModelSample
from src.config import MC_CHUNK, MODEL_PRIME_CAP, MODEL_TRUNCATION_SD
from src.utils.errors import ComplexityGuardError, InsufficientTableError, RangeError
from src.utils.logger import setup_logger
from src.utils.parallel import chunked_map
from src.utils.prime_table import PrimeTable, get_prime_table, prime_powers, prime_zeta_tail

logger = setup_logger(__name__)

_BLOCK_ELEMENTS = 2**22
_WORD = 2**64 - 1


class _Streams:
    """
    Philox counter streams keyed by master_seed, one per stream index.

    A stream starts at counter (0, 0, index low word, index high word), so one
    bit generator is repositioned per stream instead of built per stream.
    """

    def __init__(self, master_seed: int):
        self.bit_generator = np.random.Philox(key=int(master_seed) & _WORD)
        self.generator = np.random.Generator(self.bit_generator)
        self._state = self.bit_generator.state

    def at(self, stream_index: int) -> np.random.Generator:
        index = int(stream_index)
        self._state["state"]["counter"] = np.array([0, 0, index & _WORD, (index >> 64) & _WORD], dtype=np.uint64)
        self._state["buffer_pos"] = 4
        self._state["has_uint32"] = 0
        self._state["uinteger"] = 0
        self.bit_generator.state = self._state
        return self.generator


def _stream_generator(master_seed: int, stream_index: int) -> np.random.Generator:
    return _Streams(master_seed).at(stream_index)


def truncation_sd(sigma: float, P: int, table: Optional[PrimeTable] = None) -> float:
    """
    Standard deviation sqrt(1/2 sum_{p>P} p^(-2 sigma)) of the dropped tail.
    """
    table = table or get_prime_table(max(int(math.ceil(P)), 2))
    return math.sqrt(0.5 * prime_zeta_tail(2.0 * sigma, P, table))


def default_prime_cutoff(sigma: float, target_sd: float = MODEL_TRUNCATION_SD, cap: int = MODEL_PRIME_CAP) -> int:
    """
    Smallest P whose integral-bound truncation sd sqrt(P^(1-2 sigma)/(2 (2 sigma - 1) log P))
    is below target_sd, capped at cap.
    """
    def excess(log_P: float) -> float:
        variance = 0.5 * math.exp((1.0 - 2.0 * sigma) * log_P) / ((2.0 * sigma - 1.0) * log_P)
        return math.log(variance) - 2.0 * math.log(target_sd)

    log_cap = math.log(cap)
    if excess(log_cap) > 0:
        logger.info(f"Prime cutoff capped at {cap} for sigma={sigma}")
        return int(cap)
    log_P = optimize.brentq(excess, math.log(2.0), log_cap)
    return max(2, int(math.ceil(math.exp(log_P))))


def model_config(sigma: float, master_seed: int = 0, tail_mode: str = "drop", prime_cutoff: Optional[int] = None,
                 cap: int = MODEL_PRIME_CAP) -> ModelConfig:
    """
    Build a ModelConfig, resolving the default prime cutoff for sigma.

    Under "drop" a default cutoff whose truncation sd reaches MODEL_TRUNCATION_SD
    (the cap binds) is logged as a warning; "gaussian-compensate" adds the missing
    variance back.
    """
    P = prime_cutoff if prime_cutoff is not None else default_prime_cutoff(sigma, cap=cap)
    cfg = ModelConfig(sigma=sigma, prime_cutoff=int(P), master_seed=int(master_seed), tail_mode=tail_mode)
    if tail_mode == "drop":
        sd = truncation_sd(sigma, cfg.prime_cutoff)
        if sd >= MODEL_TRUNCATION_SD:
            # an explicit cutoff is a deliberate partial product
            log = logger.debug if prime_cutoff is not None else logger.warning
            log(f"Model at sigma={sigma} drops primes above {int(P)}: truncation sd {sd:.2e} "
                f"exceeds {MODEL_TRUNCATION_SD:g}; use gaussian-compensate or a larger cutoff")
    return cfg


class RandomModel:
    """
    Sampler for log zeta(sigma, X) and R_Y(sigma, X) over the primes p <= P.

    Stream i draws theta_p = 2 pi U for the primes in ascending order from a Philox
    stream keyed by (master_seed, i), followed by two standard normals used by the
    gaussian-compensate tail. Every sigma and every Y reuse the same phases, which
    gives common random numbers across parameters.
    """

    def __init__(self, cfg: ModelConfig, table: Optional[PrimeTable] = None):
        self.cfg = cfg
        self.table = table or get_prime_table(max(cfg.prime_cutoff, 2))
        if self.table.limit < cfg.prime_cutoff:
            raise InsufficientTableError(f"table limit {self.table.limit} below P = {cfg.prime_cutoff}",
                                         "random_model", "sample_log_zeta")
        self.primes = self.table.primes_up_to(cfg.prime_cutoff)
        self.log_p = np.log(self.primes.astype(float))
        self._tail_sd = {}

    @property
    def prime_count(self) -> int:
        return int(self.primes.size)

    def tail_sd(self, sigma: float) -> float:
        """Per-component sd of the neglected sum over p > P of -Log(1 - X(p) p^-sigma)."""
        if sigma not in self._tail_sd:
            P = self.cfg.prime_cutoff
            variance = sum(prime_zeta_tail(2.0 * n * sigma, P, self.table) / (n * n) for n in (1, 2, 3))
            self._tail_sd[sigma] = math.sqrt(0.5 * variance)
        return self._tail_sd[sigma]

    def _phase_block(self, lo: int, hi: int, prime_count: int, normals: bool) -> Tuple[np.ndarray, np.ndarray]:
        streams = _Streams(self.cfg.master_seed)
        thetas = np.empty((hi - lo, prime_count))
        extras = np.zeros((hi - lo, 2))
        for row, index in enumerate(range(lo, hi)):
            generator = streams.at(index)
            thetas[row] = 2.0 * math.pi * generator.random(prime_count)
            if normals:
                extras[row] = generator.standard_normal(2)
        return thetas, extras

    def sample_block(self, lo: int, hi: int, sigmas: Optional[Sequence[float]] = None) -> Tuple[np.ndarray, np.ndarray]:
        """
        Samples for stream indices [lo, hi) at one or several sigma.

        Args:
            lo (int): First stream index.
            hi (int): One past the last stream index.
            sigmas (Sequence[float], optional): Abscissae; defaults to cfg.sigma.

        Returns:
            tuple: (log_modulus, argument), each of shape (len(sigmas), hi - lo).
        """
        sigmas = [self.cfg.sigma] if sigmas is None else list(sigmas)
        compensate = self.cfg.tail_mode == "gaussian-compensate"
        log_modulus = np.empty((len(sigmas), hi - lo))
        argument = np.empty((len(sigmas), hi - lo))
        rows = max(1, _BLOCK_ELEMENTS // max(1, self.prime_count))
        radii = [np.exp(-sigma * self.log_p) for sigma in sigmas]
        for start in range(lo, hi, rows):
            stop = min(start + rows, hi)
            thetas, extras = self._phase_block(start, stop, self.prime_count, compensate)
            unit = np.exp(1j * thetas)
            for i, (sigma, radius) in enumerate(zip(sigmas, radii)):
                values = -np.sum(np.log1p(-unit * radius), axis=1)
                if compensate:
                    values = values + self.tail_sd(sigma) * (extras[:, 0] + 1j * extras[:, 1])
                log_modulus[i, start - lo:stop - lo] = values.real
                argument[i, start - lo:stop - lo] = values.imag
        return log_modulus, argument

    def sample(self, count: int, start: int = 0, sigmas: Optional[Sequence[float]] = None,
               desc: Optional[str] = None) -> Tuple[np.ndarray, np.ndarray]:
        """
        count samples from streams [start, start + count), chunked for the worker pool.

        Returns:
            tuple: (log_modulus, argument); 1-D for a single sigma, else (len(sigmas), count).
        """
        parts = chunked_map(lambda lo, hi: self.sample_block(lo, hi, sigmas), start, count, MC_CHUNK, desc)
        log_modulus = np.concatenate([part[0] for part in parts], axis=1)
        argument = np.concatenate([part[1] for part in parts], axis=1)
        if sigmas is None:
            return log_modulus[0], argument[0]
        return log_modulus, argument

    def sample_R_block(self, Y: float, lo: int, hi: int, sigma: Optional[float] = None) -> np.ndarray:
        """
        R_Y(sigma, X) = sum over p^n <= Y of X(p)^n/(n p^(n sigma)) for streams [lo, hi).

        Returns:
            np.ndarray: Complex values, one per stream.
        """
        sigma = self.cfg.sigma if sigma is None else sigma
        if Y > self.cfg.prime_cutoff:
            raise RangeError(f"Y = {Y:g} exceeds the prime cutoff {self.cfg.prime_cutoff}", "random_model", "sample_R")
        powers = prime_powers(self.table, Y)
        prime_count = int(np.searchsorted(self.primes, math.floor(Y), side="right"))
        column = np.searchsorted(self.primes[:prime_count], powers.primes)
        weights = np.exp(-sigma * np.log(powers.values.astype(float))) / powers.exponents
        values = np.empty(hi - lo, dtype=complex)
        rows = max(1, _BLOCK_ELEMENTS // max(1, prime_count, len(powers)))
        for start in range(lo, hi, rows):
            stop = min(start + rows, hi)
            thetas, _ = self._phase_block(start, stop, prime_count, False)
            values[start - lo:stop - lo] = np.exp(1j * powers.exponents * thetas[:, column]) @ weights
        return values

    def sample_R(self, Y: float, count: int, start: int = 0, sigma: Optional[float] = None,
                 desc: Optional[str] = None) -> np.ndarray:
        parts = chunked_map(lambda lo, hi: self.sample_R_block(Y, lo, hi, sigma), start, count, MC_CHUNK, desc)
        return np.concatenate(parts)


@lru_cache(maxsize=8)
def get_model(cfg: ModelConfig) -> RandomModel:
    return RandomModel(cfg)


def sample_log_zeta(cfg: ModelConfig, stream_index: int) -> ModelSample:
    """
    One draw of log zeta(sigma, X) = -sum_{p<=P} Log(1 - e^(i theta_p) p^-sigma).

    Args:
        cfg (ModelConfig): Model instance.
        stream_index (int): Non-negative stream index.

    Returns:
        ModelSample: log modulus and argument.
    """
    if stream_index < 0:
        raise RangeError("stream_index must be >= 0", "random_model", "sample_log_zeta")
    log_modulus, argument = get_model(cfg).sample_block(stream_index, stream_index + 1)
    return ModelSample(log_modulus=float(log_modulus[0, 0]), argument=float(argument[0, 0]))


def sample_R(cfg: ModelConfig, Y: float, stream_index: int) -> ModelSample:
    """One draw of R_Y(sigma, X) sharing its phases with sample_log_zeta."""
    if stream_index < 0:
        raise RangeError("stream_index must be >= 0", "random_model", "sample_R")
    value = get_model(cfg).sample_R_block(Y, stream_index, stream_index + 1)[0]
    return ModelSample(log_modulus=float(value.real), argument=float(value.imag))


def moment_oracle_small(primes: Iterable[int], sigma: float, k: int) -> float:
    """
    Exact E|sum_p X(p) p^-sigma|^(2k) by enumerating phase monomials.

    A pair of index tuples (I, J) contributes prod r_I prod r_J exactly when I and J
    are the same multiset, so the moment is the sum over multisets of
    (multiplicity * weight)^2.

    Args:
        primes (Iterable[int]): At most 6 primes.
        sigma (float): Abscissa.
        k (int): Moment order, 1 <= k <= 3.

    Returns:
        float: The exact moment.

    Raises:
        ComplexityGuardError: More than 6 primes or k > 3.
    """
    primes = list(primes)
    if len(primes) > 6 or k > 3 or k < 1:
        raise ComplexityGuardError("moment oracle is limited to <= 6 primes and 1 <= k <= 3",
                                   "random_model", "moment_oracle_small")
    radii = [p ** (-sigma) for p in primes]
    multiplicity = Counter(tuple(sorted(index)) for index in itertools.product(range(len(primes)), repeat=k))
    return math.fsum((count * math.prod(radii[i] for i in key)) ** 2 for key, count in multiplicity.items())
