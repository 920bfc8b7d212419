import json

import pytest
from hypothesis import given, strategies as st

from slabdecay import cli
from slabdecay.cli import ConfigError, ExperimentConfig

THM11 = {"experiment": "thm11", "patch": {"name": "power", "p": 2, "n": 1},
         "grids": {"directions": 8, "t_min": 10, "t_max": 1000, "per_decade": 4}}
LATTICE = {"experiment": "lattice", "body": {"name": "disk"},
           "grids": {"k_min": 10, "k_max": 1000, "k_count": 60}, "params": {"alpha": 0.5}}


def _write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg) if not isinstance(cfg, str) else cfg)
    return str(path)


@given(st.sampled_from(["thm11", "thm12"]), st.integers(0, 2**31),
       st.floats(1.0, 100.0), st.integers(1, 12))
def test_config_round_trip(exp, seed, t_min, per_decade):
    cfg = ExperimentConfig.from_dict({
        "experiment": exp, "patch": {"name": "paraboloid"}, "seed": seed,
        "grids": {"t_min": t_min, "t_max": t_min * 100, "per_decade": per_decade},
        "thresholds": {"trend": 0.04}})
    back = ExperimentConfig.from_json(cfg.to_json())
    assert back == cfg
    assert back.threshold("trend") == 0.04 and back.threshold("stability") == 0.2


@pytest.mark.parametrize("bad", [
    {"patch": {"name": "paraboloid"}},
    {"experiment": "nope"},
    {"experiment": "thm11"},
    {"experiment": "thm11", "patch": {"name": "torus"}},
    {"experiment": "thm11", "patch": {"name": "paraboloid"}, "grids": {"t_min": -1}},
    {"experiment": "thm11", "patch": {"name": "paraboloid"}, "grids": {"t_min": 10, "t_max": 5}},
    {"experiment": "uniform", "body": {"name": "disk"}, "params": {"alpha": 1.2}},
    {"experiment": "lattice", "body": {"name": "disk"}, "colour": "red"},
    {"experiment": "full-report", "params": {"runs": []}},
    {"experiment": "lemma15", "body": {"name": "disk"}, "params": {"delta": 0}},
])
def test_invalid_configs_are_rejected(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(bad)


@pytest.mark.parametrize("text", ["{not json", json.dumps({"experiment": "thm11"}),
                                  json.dumps(["lattice"])])
def test_invalid_config_exits_2_without_output(tmp_path, text):
    out = tmp_path / "out"
    status = cli.main(["verify", "--config", _write(tmp_path, text), "--out", str(out)])
    assert status == 2
    assert not out.exists()


def test_wrong_subcommand_is_invalid(tmp_path):
    out = tmp_path / "out"
    assert cli.main(["lattice", "--config", _write(tmp_path, THM11), "--out", str(out)]) == 2
    assert not out.exists()


def test_lattice_run(tmp_path):
    out = tmp_path / "lat"
    assert cli.main(["lattice", "--config", _write(tmp_path, LATTICE), "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["predicted"] == pytest.approx(2 / 3)
    assert summary["pass"]["exponent"] and summary["all_pass"]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["thresholds"]["lattice_slack"] == 0.03
    assert (out / "records.csv").read_text().startswith("k,N,main,disc\n10,317,")


@pytest.mark.invariant
def test_verify_run_is_thread_independent(tmp_path):
    path = _write(tmp_path, THM11)
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["verify", "--config", path, "--out", str(a), "--threads", "1"]) == 0
    assert cli.main(["verify", "--config", path, "--out", str(b), "--threads", "3"]) == 0
    rec = (a / "records.csv").read_text()
    assert rec == (b / "records.csv").read_text()
    # header plus 8 directions x 9 frequencies
    assert len(rec.splitlines()) == 1 + 8 * 9
    assert (a / "summary.json").read_text() == (b / "summary.json").read_text()


def test_failing_thresholds_exit_1(tmp_path):
    cfg = dict(LATTICE, thresholds={"lattice_slack": 0.0}, body={"name": "square"})
    out = tmp_path / "sq"
    assert cli.main(["lattice", "--config", _write(tmp_path, cfg), "--out", str(out)]) == 1
    assert not json.loads((out / "summary.json").read_text())["all_pass"]


def test_full_report_and_report(tmp_path):
    cfg = {"experiment": "full-report", "params": {"runs": [LATTICE, THM11]}}
    out = tmp_path / "full"
    assert cli.main(["verify", "--config", _write(tmp_path, cfg), "--out", str(out)]) == 0
    md = (out / "report.md").read_text()
    assert "00_lattice" in md and "01_thm11" in md
    assert any(p.suffix == ".dat" for p in out.iterdir())
    assert cli.main(["report", str(out)]) == 0
    assert (out / "report.md").read_text() == md
    (out / "01_thm11" / "summary.json").write_text("{broken")
    assert cli.main(["report", str(out)]) == 0
    assert "Unreadable summaries" in (out / "report.md").read_text()


def test_report_on_empty_directory(tmp_path):
    assert cli.main(["report", str(tmp_path)]) == 2
