import numpy as np
import pytest

from src.utils.errors import CacheError
from src.utils.sample_cache import (KIND_EMPIRICAL, KIND_MODEL, model_cache_path, read_header, read_samples,
                                    write_samples)


def test_model_cache_file(tmp_path):
    path = str(tmp_path / "model.bin")
    log_modulus = np.array([0.1, -0.2, 0.3])
    argument = np.array([1.0, 2.0, -3.0])

    write_samples(path, 0.75, 20000, 42, log_modulus, argument)
    header = read_header(path)
    _, records = read_samples(path)

    assert (header.sigma, header.P, header.seed, header.count, header.kind) == (0.75, 20000, 42, 3, KIND_MODEL)
    assert np.array_equal(records["log_modulus"], log_modulus)
    assert np.array_equal(records["argument"], argument)


def test_empirical_records_carry_heights(tmp_path):
    path = str(tmp_path / "line.bin")
    t = np.array([1000.5, 1999.0])

    write_samples(path, 0.6, 7000, 1, np.zeros(2), np.ones(2), t=t)
    header, records = read_samples(path)

    assert header.kind == KIND_EMPIRICAL
    assert np.array_equal(records["t"], t)


def test_truncated_file(tmp_path):
    path = tmp_path / "model.bin"
    write_samples(str(path), 0.75, 100, 0, np.zeros(10), np.zeros(10))
    path.write_bytes(path.read_bytes()[:-5])

    with pytest.raises(CacheError):
        read_samples(str(path))


def test_wrong_magic(tmp_path):
    path = tmp_path / "model.bin"
    path.write_bytes(b"NOTACACHEFILE" * 8)

    with pytest.raises(CacheError):
        read_header(str(path))


def test_non_finite_values_rejected(tmp_path):
    path = str(tmp_path / "model.bin")
    write_samples(path, 0.75, 100, 0, np.array([0.0, np.nan]), np.zeros(2))

    with pytest.raises(CacheError):
        read_samples(path)


def test_cache_path_names_every_parameter(tmp_path):
    first = model_cache_path(str(tmp_path), 0.75, 20000, 1, "drop")
    assert first != model_cache_path(str(tmp_path), 0.75, 20000, 2, "drop")
    assert first != model_cache_path(str(tmp_path), 0.75, 20000, 1, "gaussian-compensate")
    assert first != model_cache_path(str(tmp_path), 0.8, 20000, 1, "drop")
