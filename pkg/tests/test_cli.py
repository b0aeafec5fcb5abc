"""
Tests for the command-line front end: outputs, files and exit codes.
"""

import json
import math

import numpy as np
import pytest

from drift_strichartz.cli import VOLUME_COLUMNS, main
from drift_strichartz.gallery import fixture
from drift_strichartz.propagation.grid import gaussian_probe, read_field
from drift_strichartz.propagation.propagator import propagate


def _run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def _volume_rows(out):
    lines = out.strip().splitlines()
    assert lines[0] == ",".join(VOLUME_COLUMNS)
    return [[float(v) for v in line.split(",")] for line in lines[1:]]


def test_analyze_fixture(capsys):
    code, out, _ = _run(capsys, "analyze", "--fixture", "ex-1.1")
    assert code == 0
    result = json.loads(out)
    assert result["D"] == 5
    assert result["pair_r"] == pytest.approx(2.8)
    assert result["expected"]["D"] == 5


def test_analyze_with_fixture_params(capsys):
    code, out, _ = _run(capsys, "analyze", "--fixture", "kolmogorov", "--param", "m=1")
    assert code == 0
    result = json.loads(out)
    assert result["label"] == "kolmogorov-m1"
    assert result["pair_r"] == pytest.approx(3.0)


def test_analyze_graph_matches_direct(capsys, monkeypatch):
    _, direct, _ = _run(capsys, "analyze", "--fixture", "rotation-7.2")
    monkeypatch.setenv("DRIFT_USE_GRAPH", "1")
    _, graph, _ = _run(capsys, "analyze", "--fixture", "rotation-7.2")
    assert json.loads(graph) == json.loads(direct)


def test_analyze_hoermander_failure(capsys, tmp_path):
    path = tmp_path / "degenerate.json"
    path.write_text(json.dumps({"n": 2, "Q": [1, 0, 0, 0], "B": [0, 0, 0, 0]}))
    code, out, err = _run(capsys, "analyze", "--input", str(path))
    assert code == 2
    assert out == ""
    assert "(H) fails" in err


def test_analyze_inconclusive(capsys, monkeypatch):
    monkeypatch.setenv("DRIFT_FIT_RESIDUAL_MAX", "1e-12")
    code, _, err = _run(capsys, "analyze", "--fixture", "anomalous-7.4")
    assert code == 3
    assert "diagnostics" in err


@pytest.mark.parametrize("argv", [
    ["analyze", "--fixture", "nope"],
    ["analyze", "--fixture", "fan", "--param", "n"],
    ["analyze", "--fixture", "fan", "--param", "n=9"],
    ["--workers", "0", "analyze", "--fixture", "free"],
])
def test_usage_errors_exit_1(capsys, argv):
    code, _, err = _run(capsys, *argv)
    assert code == 1
    assert err.startswith("error:")


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as info:
        main(["analyze"])
    assert info.value.code == 2


@pytest.mark.parametrize("name, t, expected", [
    ("kolmogorov-m1", 1.0, 1.0 / 12.0),
    ("free-2d", 2.0, 4.0),
    ("anomalous-7.4", 1.0, (1.0 + math.cos(2.0)) / 96.0),
])
def test_volume_values(capsys, name, t, expected):
    code, out, _ = _run(capsys, "volume", "--fixture", name, "--t0", str(t), "--t1", str(t), "--samples", "1")
    assert code == 0
    [row] = _volume_rows(out)
    assert row[0] == t
    assert row[1] == pytest.approx(expected, rel=1e-10)


def test_volume_comparison_columns(capsys, tmp_path):
    path = tmp_path / "tables" / "free.csv"
    code, out, _ = _run(capsys, "volume", "--fixture", "free-2d", "--t0", "0.5", "--t1", "4",
                        "--samples", "4", "--out", str(path))
    assert code == 0
    assert out == ""
    rows = _volume_rows(path.read_text())
    assert len(rows) == 4
    for t, V, hyp_a, hyp_b in rows:
        assert V == pytest.approx(t ** 2, rel=1e-10)
        assert hyp_a == pytest.approx(t ** 2, rel=1e-10)
        assert hyp_b == pytest.approx(t ** 2, rel=1e-10)


def test_verify_volume_writes_artifacts(capsys, tmp_path):
    code, out, _ = _run(capsys, "verify", "--fixture", "kolmogorov-m1", "--suite", "volume", "--out", str(tmp_path))
    assert code == 0
    assert json.loads(out)["volume"]["passed"] is True
    assert (tmp_path / "kolmogorov-m1.volume.json").exists()
    assert (tmp_path / "kolmogorov-m1.volume.csv").exists()


def test_verify_inadmissible_pair(capsys):
    code, _, err = _run(capsys, "verify", "--fixture", "kolmogorov-m1", "--suite", "strichartz", "--pair-r", "10")
    assert code == 1
    assert "2D/(D-2)" in err


def test_verify_failed_suite_exits_5(capsys):
    # the probe is wider than the guard band, so no time is ever resolved
    code, out, _ = _run(capsys, "verify", "--fixture", "conformal", "--suite", "group",
                        "--grid-L", "8", "--grid-n", "64", "--sigma", "6")
    assert code == 5
    assert json.loads(out)["group"]["passed"] is False


def test_verify_rejects_bad_grid(capsys):
    code, _, _ = _run(capsys, "verify", "--fixture", "free", "--suite", "group", "--grid-n", "48")
    assert code == 1


def test_propagate_round_trip(capsys, tmp_path):
    out_dir = tmp_path / "fields"
    code, out, _ = _run(capsys, "propagate", "--fixture", "conformal", "--grid-L", "8", "--grid-n", "64",
                        "--sigma", "1.5", "--times", "0.3,-0.3", "--csv", "--out", str(out_dir))
    assert code == 0
    summary = json.loads(out)
    assert summary["label"] == "conformal-n1"
    assert len(summary["rows"]) == 2
    for t, _, weighted_ratio, _ in summary["rows"]:
        assert weighted_ratio == pytest.approx(1.0, rel=1e-6)

    forward = read_field(out_dir / "conformal-n1.t+0.3.c16")
    assert forward.t == 0.3
    phi = gaussian_probe(forward.grid, 1.5)
    expected = propagate(fixture("conformal").spec, phi, 0.3)
    assert np.max(np.abs(forward.samples - expected.samples)) <= 1e-12
    assert (out_dir / "conformal-n1.t-0.3.csv").exists()
    header = (out_dir / "conformal-n1.norms.csv").read_text().splitlines()[0]
    assert header == "t,l2,weighted_l2_ratio,linf"

    back_dir = tmp_path / "back"
    code, _, _ = _run(capsys, "propagate", "--fixture", "conformal", "--field",
                      str(out_dir / "conformal-n1.t+0.3.c16"), "--times=-0.3", "--out", str(back_dir))
    assert code == 0
    back = read_field(back_dir / "conformal-n1.t-0.3.c16")
    assert back.t == pytest.approx(0.0)
    assert np.max(np.abs(back.samples - phi.samples)) <= 1e-5


def test_propagate_guard_exit_4(capsys, tmp_path):
    code, _, err = _run(capsys, "propagate", "--fixture", "conformal", "--grid-L", "8", "--grid-n", "64",
                        "--sigma", "1.5", "--times", "3", "--out", str(tmp_path))
    assert code == 4
    assert "escapes the box" in err


def test_propagate_dimension_mismatch(capsys, tmp_path):
    _run(capsys, "propagate", "--fixture", "free", "--grid-L", "8", "--grid-n", "64", "--sigma", "1.5",
         "--times", "0.1", "--out", str(tmp_path))
    code, _, err = _run(capsys, "propagate", "--fixture", "free-2d", "--field", str(tmp_path / "free-1d.t+0.1.c16"),
                        "--times", "0.1", "--out", str(tmp_path))
    assert code == 1
    assert "--field" in err


def test_fixtures_list(capsys):
    code, out, _ = _run(capsys, "fixtures", "list")
    assert code == 0
    names = [entry["name"] for entry in json.loads(out)]
    assert "kolmogorov-m1" in names
    assert "fan" in names


def test_fixtures_export_then_analyze(capsys, tmp_path):
    path = tmp_path / "problems" / "kolmogorov.json"
    code, _, _ = _run(capsys, "fixtures", "export", "kolmogorov", "--param", "m=1", "--out", str(path))
    assert code == 0
    document = json.loads(path.read_text())
    assert document["label"] == "kolmogorov-m1"
    code, out, _ = _run(capsys, "analyze", "--input", str(path))
    assert code == 0
    result = json.loads(out)
    assert result["D"] == 4
    assert result["expected"]["D"] == 4
    assert result["expected"]["case_tag"] == "Thm1.3-iii"


def test_fixtures_export_needs_name(capsys):
    code, _, err = _run(capsys, "fixtures", "export")
    assert code == 1
    assert "needs a fixture name" in err
