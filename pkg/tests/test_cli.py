import numpy as np
import pytest
import yaml

from xlchansim.cli import main


@pytest.fixture
def small_yaml(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text(yaml.safe_dump({"bs_array": {"rows": 2, "cols": 8}, "simulation": {"n_ue": 4}}))
    return path


def test_simulate_writes_outputs(tmp_path, small_yaml, capsys, monkeypatch):
    monkeypatch.setenv("XLCHANSIM_THREADS", "1")
    out = tmp_path / "run"
    assert main(["simulate", "--config", str(small_yaml), "--features", "nf,sns-stoch", "--out", str(out), "--pdp"]) == 0
    lines = (out / "metrics.csv").read_text().splitlines()
    assert len(lines) == 5 and lines[1].split(",")[1] == "nf+sns-stoch"
    assert (out / "capacity_cdf.csv").exists() and (out / "coupling_loss_cdf.csv").exists()
    assert len(list((out / "pdp").iterdir())) == 4
    assert "4 drops" in capsys.readouterr().out


def test_default_subcommand(tmp_path, small_yaml, monkeypatch):
    monkeypatch.setenv("XLCHANSIM_THREADS", "1")
    assert main(["--config", str(small_yaml), "--ues", "2", "--out", str(tmp_path)]) == 0
    assert len((tmp_path / "metrics.csv").read_text().splitlines()) == 3


def test_nearfield_report(tmp_path, small_yaml):
    out = tmp_path / "nf.csv"
    assert main(["nearfield-report", "--config", str(small_yaml), "--ue", "2", "0", "1", "--out", str(out)]) == 0
    data = np.genfromtxt(out, delimiter=",", names=True)
    assert data.size == 16
    assert np.all(np.isfinite(data["phase_delta_rad"]))
    assert np.ptp(data["phase_delta_rad"]) > 0


def test_sns_field(tmp_path, small_yaml):
    out = tmp_path / "f.csv"
    assert main(["sns-field", "--config", str(small_yaml), "--vp", "0.5", "--out", str(out)]) == 0
    data = np.genfromtxt(out, delimiter=",", names=True)
    assert np.all((data["alpha"] > 0) & (data["alpha"] <= 1)) and np.any(data["alpha"] == 1.0)


def test_blockage_demo(tmp_path, small_yaml):
    out = tmp_path / "b.csv"
    assert main(["blockage-demo", "--config", str(small_yaml), "--azimuth", "9.5", "--zenith", "90",
                 "--out", str(out)]) == 0
    data = np.genfromtxt(out, delimiter=",", names=True)
    assert data.size == 16 and np.all(data["loss_db"] >= 0)


def test_exit_codes(tmp_path, small_yaml, capsys):
    assert main(["simulate", "--config", str(small_yaml), "--features", "sns-stoch,sns-block", "--out", str(tmp_path)]) == 2
    assert "config error" in capsys.readouterr().err
    assert main(["simulate", "--config", str(tmp_path / "missing.yaml")]) == 1
    with pytest.raises(SystemExit):
        main(["simulate", "--ues", "many"])
