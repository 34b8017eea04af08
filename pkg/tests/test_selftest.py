import orjson
import pytest

from main import run
from src.services.selftest import SCALES, Selftest
from src.utils.errors import QuadratureError


def _stub_checks(monkeypatch, outcomes):
    def checks(self):
        return [(name, (lambda outcome=outcome: outcome())) for name, outcome in outcomes]
    monkeypatch.setattr(Selftest, "checks", checks)


def _raise():
    raise QuadratureError("no convergence", best_estimate=0.0, err_est=1.0, module="moments", operation="M")


def test_scales_share_keys():
    assert set(SCALES["quick"]) == set(SCALES["full"])


def test_every_check_is_reported():
    names = [name for name, _ in Selftest().checks()]
    assert len(names) == len(set(names)) == 16


def test_failing_check_does_not_stop_the_run(monkeypatch):
    _stub_checks(monkeypatch, [("first", lambda: (True, "ok")), ("second", _raise), ("third", lambda: (False, "off"))])
    report = Selftest("quick", seed=1).run()
    assert [result.name for result in report.results] == ["first", "second", "third"]
    assert [result.passed for result in report.results] == [True, False, False]
    assert report.results[1].detail.startswith("QuadratureError: [moments.M]")
    assert not report.passed


def test_cli_exit_code_follows_acceptance(monkeypatch, tmp_path, capsysbinary):
    _stub_checks(monkeypatch, [("only", lambda: (True, "ok"))])
    assert run(["--output-dir", str(tmp_path), "selftest"]) == 0
    assert orjson.loads(capsysbinary.readouterr().out)["results"][0]["name"] == "only"
    assert (tmp_path / "selftest" / "selftest.json").exists()
    _stub_checks(monkeypatch, [("only", lambda: (False, "off"))])
    assert run(["--output-dir", str(tmp_path), "selftest"]) == 4


@pytest.mark.parametrize("check", ["moment_identity", "zero_mean", "saddle_round_trip", "moment_oracle"])
def test_cheap_checks_pass(check):
    passed, detail = getattr(Selftest("quick"), check)()
    assert passed, detail


@pytest.mark.slow
def test_quick_suite():
    report = Selftest("quick").run()
    assert report.passed, [(r.name, r.detail) for r in report.results if not r.passed]
