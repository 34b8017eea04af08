import os
from typing import NamedTuple, Optional

import numpy as np

from src.utils.errors import CacheError
from src.utils.logger import setup_logger

logger = setup_logger(__name__)

MAGIC = b"ZRMC1"
KIND_MODEL = 0
KIND_EMPIRICAL = 1

HEADER_DTYPE = np.dtype([
    ("magic", "S5"),
    ("sigma", "<f8"),
    ("P", "<i8"),
    ("seed", "<u8"),
    ("count", "<i8"),
    ("kind", "u1"),
])
MODEL_RECORD = np.dtype([("log_modulus", "<f8"), ("argument", "<f8")])
EMPIRICAL_RECORD = np.dtype([("t", "<f8"), ("log_modulus", "<f8"), ("argument", "<f8")])


class CacheHeader(NamedTuple):
    sigma: float
    P: int
    seed: int
    count: int
    kind: int


def _record_dtype(kind: int) -> np.dtype:
    if kind == KIND_MODEL:
        return MODEL_RECORD
    if kind == KIND_EMPIRICAL:
        return EMPIRICAL_RECORD
    raise CacheError(f"unknown record kind {kind}", "sample_cache", "read")


def write_samples(path: str, sigma: float, P: int, seed: int, log_modulus: np.ndarray, argument: np.ndarray,
                  t: Optional[np.ndarray] = None) -> None:
    """
    Write a little-endian sample cache: header then one record per sample.

    Model records hold (log_modulus, argument); passing t writes empirical records
    (t, log_modulus, argument) and sets the kind byte.

    Args:
        path (str): Destination file.
        sigma (float): Line abscissa of the samples.
        P (int): Prime cutoff (model) or Y bound (empirical).
        seed (int): Master seed.
        log_modulus (np.ndarray): Real parts.
        argument (np.ndarray): Imaginary parts.
        t (np.ndarray, optional): Heights for empirical records.
    """
    kind = KIND_MODEL if t is None else KIND_EMPIRICAL
    records = np.empty(len(log_modulus), dtype=_record_dtype(kind))
    records["log_modulus"] = log_modulus
    records["argument"] = argument
    if t is not None:
        records["t"] = t
    header = np.array([(MAGIC, sigma, P, seed, len(records), kind)], dtype=HEADER_DTYPE)

    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    partial = f"{path}.partial"
    try:
        with open(partial, "wb") as handle:
            handle.write(header.tobytes())
            handle.write(records.tobytes())
        os.replace(partial, path)
    except OSError as e:
        raise CacheError(f"cannot write sample cache {path}: {e}", "sample_cache", "write") from e
    logger.debug(f"Wrote {len(records)} samples to {path}")


def read_header(path: str) -> CacheHeader:
    try:
        raw = np.fromfile(path, dtype=HEADER_DTYPE, count=1)
    except (OSError, ValueError) as e:
        raise CacheError(f"cannot read sample cache {path}: {e}", "sample_cache", "read") from e
    if raw.size != 1 or raw["magic"][0] != MAGIC:
        raise CacheError(f"{path} is not a sample cache", "sample_cache", "read")
    row = raw[0]
    return CacheHeader(float(row["sigma"]), int(row["P"]), int(row["seed"]), int(row["count"]), int(row["kind"]))


def read_samples(path: str):
    """
    Read a sample cache written by write_samples.

    Returns:
        tuple: (CacheHeader, records) where records is a structured array.

    Raises:
        CacheError: Bad magic, unknown kind or a record count that does not match the file size.
    """
    header = read_header(path)
    dtype = _record_dtype(header.kind)
    expected = HEADER_DTYPE.itemsize + header.count * dtype.itemsize
    if os.path.getsize(path) != expected:
        raise CacheError(f"{path} is truncated or corrupt ({os.path.getsize(path)} bytes, expected {expected})",
                         "sample_cache", "read")
    records = np.fromfile(path, dtype=dtype, offset=HEADER_DTYPE.itemsize, count=header.count)
    if not (np.all(np.isfinite(records["log_modulus"])) and np.all(np.isfinite(records["argument"]))):
        raise CacheError(f"{path} holds non-finite samples", "sample_cache", "read")
    return header, records


def model_cache_path(directory: str, sigma: float, P: int, seed: int, tail_mode: str) -> str:
    return os.path.join(directory, f"model_s{sigma:.6f}_P{P}_seed{seed}_{tail_mode}.zrmc")
