import os

import orjson
import pandas as pd
import pytest

from models.pydantic_classes import MomentReport
from src.utils.artifacts import ArtifactWriter, dumps, library_versions


def _report():
    return MomentReport(sigma=0.75, z=complex(2, -1), M=complex(0.5, 0.25), per_prime_terms_used=10,
                        tail_bound=1e-9, quad_err=1e-12)


def test_dumps_sorts_keys_and_splits_complex():
    text = dumps({"b": 1, "a": 2})
    assert text.index(b'"a"') < text.index(b'"b"')
    payload = orjson.loads(dumps(_report()))
    assert payload["z"] == {"re": 2.0, "im": -1.0}
    assert payload["M"] == {"re": 0.5, "im": 0.25}


def test_dumps_is_stable():
    assert dumps(_report()) == dumps(_report())
    assert orjson.loads(dumps([_report()])) == [orjson.loads(dumps(_report()))]


def test_both_formats(tmp_path):
    writer = ArtifactWriter(str(tmp_path), "moments", "both")
    json_path = writer.write_json("moments", _report())
    csv_path = writer.write_csv("moments", [{"sigma": 0.75, "M": 1 / 3}])
    assert os.path.dirname(json_path) == os.path.join(str(tmp_path), "moments")
    frame = pd.read_csv(csv_path)
    assert frame["M"].iloc[0] == pytest.approx(1 / 3, rel=1e-15)
    assert writer.artifacts == [json_path, csv_path]


def test_json_only_skips_csv(tmp_path):
    writer = ArtifactWriter(str(tmp_path), "tail", "json")
    assert writer.write_csv("tail", [{"x": 1}]) is None
    assert writer.write_json("tail", {"x": 1}) is not None
    assert not os.path.exists(os.path.join(str(tmp_path), "tail", "tail.csv"))


def test_gnuplot_only_when_asked(tmp_path):
    frame = pd.DataFrame({"T": [1e3, 1e4], "D_hat": [0.1, 0.05]})
    assert ArtifactWriter(str(tmp_path), "a").write_gnuplot("trend", frame, "T", ["D_hat"]) is None
    paths = ArtifactWriter(str(tmp_path), "b", emit_plots="gnuplot").write_gnuplot("trend", frame, "T", ["D_hat"],
                                                                                    logscale="xy")
    data_path, script_path = paths
    assert data_path.endswith("trend.dat") and script_path.endswith("trend.gp")
    with open(script_path, encoding="utf-8") as handle:
        script = handle.read()
    assert "set logscale xy" in script
    assert "'trend.dat' using 1:2" in script


def test_manifest_lists_artifacts(tmp_path):
    writer = ArtifactWriter(str(tmp_path), "constants", "both")
    writer.write_json("constants", {"g0": 1.0})
    manifest = writer.write_manifest({"sigma": 0.75}, seed=7)
    assert manifest.seed == 7
    assert manifest.artifacts == writer.artifacts
    assert manifest.wall_time_seconds >= 0
    on_disk = orjson.loads(open(os.path.join(str(tmp_path), "constants", "manifest.json"), "rb").read())
    assert on_disk["inputs"] == {"sigma": 0.75}
    assert set(library_versions()) <= set(on_disk["versions"])
