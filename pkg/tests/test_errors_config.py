import pytest

from src.config import load_run_config, read_key_value_file
from src.utils.errors import (AcceptanceError, ConfigurationError, OnContourRootError, QuadratureError, RangeError,
                              ZetaLabError)


def test_error_message_names_module_and_operation():
    error = RangeError("sigma too small", "zeta_eval", "zeta_many")
    assert str(error) == "[zeta_eval.zeta_many] sigma too small"
    assert error.detail == "sigma too small"
    assert isinstance(error, ValueError)


def test_exit_codes():
    assert ZetaLabError("x").exit_code == 3
    assert ConfigurationError("x").exit_code == 2
    assert AcceptanceError("x").exit_code == 4
    assert RangeError("x").exit_code == 3


def test_quadrature_error_carries_best_estimate():
    error = QuadratureError("budget exhausted", best_estimate=0.25, err_est=1e-3,
                            module="special_functions", operation="periodic_mean")
    assert error.best_estimate == 0.25
    assert error.err_est == 1e-3
    assert "best estimate 0.25" in str(error)


def test_on_contour_error_keeps_point():
    error = OnContourRootError("root on contour", point=0.7 + 20j, module="apoints", operation="winding_count")
    assert error.point == 0.7 + 20j


def test_read_key_value_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\n\nsigma = 0.8\nT_list=1000, 2000,4000\nseed=7\n", encoding="utf-8")

    values = read_key_value_file(str(path))

    assert values == {"sigma": "0.8", "T_list": ["1000", "2000", "4000"], "seed": "7"}


def test_read_key_value_file_rejects_bare_line(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("sigma\n", encoding="utf-8")

    with pytest.raises(ConfigurationError, match="expected key=value"):
        read_key_value_file(str(path))


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigurationError):
        read_key_value_file(str(tmp_path / "absent.cfg"))


def test_load_run_config_precedence(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("sigma=0.8\nseed=7\nT_list=1000,2000,4000\n", encoding="utf-8")

    cfg = load_run_config(str(path), {"seed": 9, "threads": None})

    assert cfg.sigma == 0.8
    assert cfg.seed == 9
    assert cfg.T_list == [1000.0, 2000.0, 4000.0]


def test_load_run_config_reports_sigma_range():
    with pytest.raises(ConfigurationError, match=r"\(1/2, 1\]"):
        load_run_config(None, {"sigma": 0.4})


def test_load_run_config_rejects_unknown_key():
    with pytest.raises(ConfigurationError, match="colour"):
        load_run_config(None, {"colour": "blue"})


def test_load_run_config_needs_ascending_t_list():
    with pytest.raises(ConfigurationError, match="ascending"):
        load_run_config(None, {"T_list": [1e4, 1e3, 1e5]})


def test_explicit_y_policy_needs_y():
    with pytest.raises(ConfigurationError):
        load_run_config(None, {"Y_policy": "explicit"})
    assert load_run_config(None, {"Y_policy": "explicit", "Y": 500.0}).Y == 500.0
