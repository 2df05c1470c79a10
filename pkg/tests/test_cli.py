import csv
import json

import numpy as np
import pytest

from lutbench import cli, experiment
from lutbench.emulator import load_model
from lutbench.experiment import ExperimentConfig, InvalidConfig
from lutbench.rtm import generate_lut
from lutbench.sampling import DEFAULT_SPECS, latin_hypercube
from lutbench.store import FormatError, load_lut, save_lut

SMALL = {"grid": {"start": 400.0, "stop": 2400.0, "step": 100.0},
         "lut_sizes": [40, 80], "reference_size": 150, "components": [2, 3],
         "restarts": 1, "max_iter": 60, "warmup": 2}


@pytest.fixture(scope="module")
def small_cfg(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "small.json"
    path.write_text(json.dumps(SMALL))
    return path


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory, small_cfg):
    out = tmp_path_factory.mktemp("run")
    code = cli.main(["run", "--generate", "--config", str(small_cfg), "--out", str(out)])
    assert code == 0
    return out


def read_summary(out):
    return list(csv.DictReader(open(out / "summary.csv")))


def test_default_config():
    cfg = ExperimentConfig()
    assert cfg.lut_sizes == [500, 2000] and cfg.reference_size == 5000
    assert cfg.components == [10, 20] and cfg.vertices
    assert len(cfg.spectral_grid()) == 401
    assert cfg.geom().sza == 55.0


def test_config_validation(tmp_path):
    with pytest.raises(InvalidConfig):
        ExperimentConfig(lut_sizes=[500, 2000], reference_size=2000)
    with pytest.raises(InvalidConfig):
        ExperimentConfig.from_dict({"unknown_key": 1})
    with pytest.raises(InvalidConfig):
        ExperimentConfig(methods=["cubic"])
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["generate", "--config", str(bad), "--out", str(tmp_path)]) == 2
    bad.write_text(json.dumps({"reference_size": 10}))
    assert cli.main(["generate", "--config", str(bad), "--out", str(tmp_path)]) == 2


def test_run_outputs(run_dir):
    rows = read_summary(run_dir)
    assert [(r["lut_size"], r["method"]) for r in rows] == [
        ("104", "linear"), ("104", "gpr-2"), ("104", "gpr-3"),
        ("144", "linear"), ("144", "gpr-2"), ("144", "gpr-3")]
    assert (run_dir / "summary.txt").is_file()
    for name in ("residuals_104.svg", "residuals_144.svg", "runtime.svg"):
        text = (run_dir / "figures" / name).read_text()
        assert text.startswith("<svg") and "<!-- data" in text
    assert load_lut(run_dir / "luts" / "reference_150.lut").n == 150
    assert load_lut(run_dir / "luts" / "train_80.lut").n == 144


def test_manifest_complete(run_dir):
    m = json.loads((run_dir / "manifest.json").read_text())
    files = sorted(str(p.relative_to(run_dir)) for p in run_dir.rglob("*") if p.is_file())
    assert sorted(m["artifacts"]) == files
    assert m["status"] == "ok" and m["config"]["seed"] == 2017
    assert "tool_version" in m and "linear_40_query" in m["stages"]


def test_validate_matches_run_row(run_dir, tmp_path):
    model = run_dir / "models" / "gpr_144_p3.model"
    ref = run_dir / "luts" / "reference_150.lut"
    rep = experiment.validate(model, ref)
    row = json.loads((run_dir / "reports" / "144_gpr-3.json").read_text())
    assert rep.lut_size == 144
    assert rep.rmse_mean == pytest.approx(row["rmse_mean"], rel=1e-12)
    assert rep.nrmse_mean == pytest.approx(row["nrmse_mean"], rel=1e-12)
    own = experiment.validate(model, run_dir / "luts" / "train_80.lut")
    assert own.nrmse_mean < rep.nrmse_mean
    assert cli.main(["validate", str(model), str(ref), "--out", str(tmp_path)]) == 0
    assert list((tmp_path / "reports").glob("validate_*.csv"))


def test_validate_grid_mismatch(run_dir, tmp_path):
    other = generate_lut(latin_hypercube(5, DEFAULT_SPECS, 0))
    save_lut(other, tmp_path / "other.lut")
    model = run_dir / "models" / "gpr_104_p2.model"
    with pytest.raises(FormatError):
        experiment.validate(model, tmp_path / "other.lut")
    assert cli.main(["validate", str(model), str(tmp_path / "other.lut"),
                     "--out", str(tmp_path)]) == 3
    assert load_model(model).p == 2


def test_only_linear(run_dir, small_cfg, tmp_path):
    # reuse the generated LUTs
    out = tmp_path / "lin"
    (out / "luts").mkdir(parents=True)
    for f in (run_dir / "luts").iterdir():
        (out / "luts" / f.name).write_bytes(f.read_bytes())
    assert cli.main(["run", "--only", "linear", "--config", str(small_cfg),
                     "--out", str(out)]) == 0
    rows = read_summary(out)
    assert [r["method"] for r in rows] == ["linear", "linear"]


def test_missing_lut_names_path(tmp_path, small_cfg, caplog):
    code = cli.main(["run", "--config", str(small_cfg), "--out", str(tmp_path)])
    assert code == 3
    assert str(tmp_path / "luts" / "reference_150.lut") in caplog.text
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["status"] == "failed"


def test_env_overrides_out(tmp_path, small_cfg, monkeypatch):
    monkeypatch.setenv("LUTBENCH_OUT", str(tmp_path / "env"))
    assert cli.main(["generate", "--config", str(small_cfg),
                     "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "env" / "luts" / "reference_150.lut").is_file()
    assert not (tmp_path / "flag").exists()


def test_generate_is_bit_identical(tmp_path, small_cfg):
    for d in ("a", "b"):
        assert cli.main(["generate", "--config", str(small_cfg),
                         "--out", str(tmp_path / d)]) == 0
    for f in (tmp_path / "a" / "luts").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / "luts" / f.name).read_bytes()


def test_seed_flag_changes_designs(tmp_path, small_cfg):
    cli.main(["generate", "--config", str(small_cfg), "--out", str(tmp_path / "a")])
    cli.main(["generate", "--config", str(small_cfg), "--seed", "5",
              "--out", str(tmp_path / "b")])
    a = load_lut(tmp_path / "a" / "luts" / "train_40.lut")
    b = load_lut(tmp_path / "b" / "luts" / "train_40.lut")
    assert a.n == b.n == 104
    assert not np.array_equal(a.points, b.points)
    assert b.design.seed == 45


def test_threads_flag(tmp_path, small_cfg):
    assert cli.main(["generate", "--threads", "1", "--config", str(small_cfg),
                     "--out", str(tmp_path)]) == 0
