import argparse
import math
import os

import orjson
import pytest
from mpmath import mp

from main import _complex, _float_list, run


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(f"# small run\nprime_limit = 10000\noutput_dir = {tmp_path / 'runs'}\nformat = both\n",
                    encoding="utf-8")
    return str(path)


def _read(path):
    with open(path, "rb") as handle:
        return handle.read()


def test_complex_argument():
    assert _complex("1+i") == complex(1, 1)
    assert _complex("2 - 0.5i") == complex(2, -0.5)
    assert _complex("3") == complex(3, 0)
    with pytest.raises(argparse.ArgumentTypeError):
        _complex("one")


def test_float_list_argument():
    assert _float_list("1e3, 1e4,1e5") == [1e3, 1e4, 1e5]
    with pytest.raises(argparse.ArgumentTypeError):
        _float_list("1e3,x")


def test_invalid_sigma_exits_with_config_code(config_file):
    assert run(["--config", config_file, "moments", "--sigma", "0.4"]) == 2


def test_unknown_config_key_exits_with_config_code(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("colour = blue\n", encoding="utf-8")
    assert run(["--config", str(path), "moments"]) == 2


def test_missing_config_file(tmp_path):
    assert run(["--config", str(tmp_path / "missing.cfg"), "moments"]) == 2


def test_numeric_failure_exit_code(config_file):
    # sigma = 1 has no asymptotic constants
    assert run(["--config", config_file, "constants", "--sigma", "1"]) == 3


def test_moments_run_writes_artifacts(tmp_path, config_file, capsysbinary):
    assert run(["--config", config_file, "--seed", "5", "moments", "--sigma", "0.75", "--z-re", "2"]) == 0
    directory = tmp_path / "runs" / "moments"
    report = orjson.loads(_read(directory / "moments.json"))
    assert report["M"]["re"] == pytest.approx(math.log(float(mp.zeta(1.5))), abs=1e-7)
    assert report["M"]["im"] == pytest.approx(0.0, abs=1e-12)
    assert os.path.exists(directory / "moments.csv")
    manifest = orjson.loads(_read(directory / "manifest.json"))
    assert manifest["seed"] == 5
    assert manifest["inputs"]["prime_limit"] == 10000
    assert orjson.loads(capsysbinary.readouterr().out) == report


def test_reruns_are_byte_identical(tmp_path, config_file):
    path = tmp_path / "runs" / "moments" / "moments.json"
    assert run(["--config", config_file, "moments", "--z-re", "1.5", "--z-im", "0.5"]) == 0
    first = _read(path)
    assert run(["--config", config_file, "moments", "--z-re", "1.5", "--z-im", "0.5"]) == 0
    assert _read(path) == first


def test_flags_override_config(tmp_path, config_file):
    assert run(["--config", config_file, "--format", "json", "moments", "--sigma", "0.9"]) == 0
    directory = tmp_path / "runs" / "moments"
    assert not os.path.exists(directory / "moments.csv")
    assert orjson.loads(_read(directory / "moments.json"))["sigma"] == 0.9


def test_constants_run(tmp_path, config_file):
    assert run(["--config", config_file, "constants", "--sigma", "0.75"]) == 0
    report = orjson.loads(_read(tmp_path / "runs" / "constants" / "constants.json"))
    assert report["g0"] == pytest.approx(0.75 * report["g1"], rel=1e-6)
    assert report["A_fit"] is not None


def test_charfun_run_with_default_cutoff(tmp_path):
    # the default cutoff (log T)^4 is not an integer
    code = run(["--output-dir", str(tmp_path), "--samples", "200", "charfun", "--sigma", "0.75", "--T", "1e5",
                "--u", "1", "--v", "0"])
    assert code == 0
    report = orjson.loads(_read(tmp_path / "charfun" / "charfun.json"))
    assert report["tolerance"] > 0
    assert abs(report["phi_rand"]["value"]["re"]) <= 1.0
