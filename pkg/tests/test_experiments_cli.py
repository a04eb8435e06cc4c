import configparser

import numpy as np
import pytest

from hsriesz import cli, experiments, serialization as ser
from hsriesz.core import Ball, ParameterError, PixelSet, validate_configuration
from hsriesz.packing import UniformDensity, recovery_configuration


def _ini(path):
    p = configparser.ConfigParser(interpolation=None)
    p.read(path)
    return p


def test_resolve_parses_by_default_type():
    p = experiments.resolve("gamma-constants", {"dims": "1, 2", "tolerance": "1e-6"})
    assert p["dims"] == [1, 2] and p["tolerance"] == 1e-6
    assert p["sigmas"] == experiments.EXPERIMENTS["gamma-constants"].defaults["sigmas"]
    with pytest.raises(ParameterError):
        experiments.resolve("gamma-constants", {"colour": "blue"})
    with pytest.raises(ParameterError):
        experiments.resolve("no-such-experiment", {})


def test_run_writes_outputs_and_passes(tmp_path):
    code = experiments.run_experiment("gamma-constants", {}, tmp_path)
    assert code == 0
    assert {"manifest.resolved.ini", "results.csv", "summary.ini"} <= {f.name for f in tmp_path.iterdir()}
    summary = _ini(tmp_path / "summary.ini")
    assert summary["summary"]["passed"] == "true" and summary["summary"]["failed"] == "none"
    resolved = _ini(tmp_path / "manifest.resolved.ini")
    assert resolved["experiment"]["seed"] == "0" and "threads" not in resolved["experiment"]
    assert "tolerance" in resolved["parameters"]
    header, rows = ser.read_csv(tmp_path / "results.csv")
    assert rows and len(rows[0]) == len(header)


def test_failed_assertion_gives_exit_one(tmp_path):
    code = experiments.run_experiment("gamma-constants", {"tolerance": "-1"}, tmp_path)
    assert code == 1
    summary = _ini(tmp_path / "summary.ini")
    assert summary["summary"]["passed"] == "false" and summary["summary"]["failed"] != "none"
    assert any(v.startswith("fail") for v in summary["assertions"].values())


def test_runtime_error_gives_exit_two(tmp_path):
    code = experiments.run_experiment("gamma-constants", {"dims": "7"}, tmp_path)
    assert code == 2
    assert "error" in _ini(tmp_path / "summary.ini")["summary"]


def test_manifest_file_and_thread_independence(tmp_path):
    manifest = tmp_path / "m.ini"
    manifest.write_text("[experiment]\nname = gamma-constants\nseed = 3\nthreads = 2\n\n[parameters]\ndims = 2\n")
    a, b = tmp_path / "a", tmp_path / "b"
    assert experiments.run_manifest(manifest, a) == 0
    assert experiments.run_manifest(manifest, b, threads=1) == 0
    for name in ("manifest.resolved.ini", "results.csv", "summary.ini"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert _ini(a / "manifest.resolved.ini")["experiment"]["seed"] == "3"
    bad = tmp_path / "bad.ini"
    bad.write_text("[parameters]\ndims = 2\n")
    with pytest.raises(ParameterError):
        experiments.read_manifest(bad)


def test_cli_experiment_list_and_run(tmp_path, capsys):
    assert cli.main(["experiment", "list"]) == 0
    listed = capsys.readouterr().out
    assert all(name in listed for name in experiments.EXPERIMENTS)
    assert cli.main(["experiment", "run", "gamma-constants", "--out", str(tmp_path)]) == 0
    assert cli.main(["experiment", "run", "nonsense", "--out", str(tmp_path)]) == 2
    assert cli.main(["experiment", "run"]) == 2


@pytest.fixture
def disk_config(tmp_path):
    eps = 0.02
    c = recovery_configuration(UniformDensity(1.0, Ball.centered(2, 0.3)), eps)
    path = tmp_path / "config.txt"
    ser.save(c, path)
    return path


def test_cli_energy_and_bridge(disk_config, tmp_path, capsys):
    assert cli.main(["energy", str(disk_config), "--sigma", "-1", "--c1", "-1", "--c2", "10"]) == 0
    assert cli.main(["energy", str(disk_config), "--sigma", "0.5"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 4
    assert cli.main(["bridge", str(disk_config), "--sigma", "0.5", "--out", str(tmp_path / "b")]) == 0
    assert isinstance(ser.load(tmp_path / "b" / "set.txt"), PixelSet)
    assert cli.main(["bridge", str(disk_config), "--sigma", "-1"]) == 2
    assert cli.main(["energy", str(disk_config), "--sigma", "-1", "--c1", "1"]) == 2
    assert cli.main(["energy", str(tmp_path / "missing.txt"), "--sigma", "-1"]) == 2


def test_cli_perimeter_and_set_energy(tmp_path, capsys):
    E = PixelSet.from_cells(1 / 8, [(i, j) for i in range(-4, 4) for j in range(-4, 4)])
    path = tmp_path / "set.txt"
    ser.save(E, path)
    assert cli.main(["perimeter", str(path), "--sigma", "0.5"]) == 0
    assert cli.main(["perimeter", str(path), "--sigma", "0", "--radii", "4,8"]) == 0
    assert cli.main(["energy", str(path), "--sigma", "-1"]) == 0
    assert cli.main(["energy", str(path), "--sigma", "0.5", "--r-eps", "0.5"]) == 0
    assert cli.main(["energy", str(path), "--sigma", "0.5"]) == 2
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("d,sigma,cells,perimeter")


def test_cli_anneal_and_minimize(tmp_path):
    out = tmp_path / "a"
    args = ["anneal", "--sigma", "-1", "--epsilon", "0.05", "--n", "12", "--objective", "confined",
            "--c1", "-1", "--c2", "10", "--epochs", "3", "--out", str(out)]
    assert cli.main(args) == 0
    first = (out / "configuration.txt").read_bytes()
    assert cli.main(args) == 0
    assert (out / "configuration.txt").read_bytes() == first
    assert len(ser.read_csv(out / "trace.csv")[1]) == 3

    out = tmp_path / "m"
    assert cli.main(["minimize-density", "--sigma", "-1", "--c1", "-1", "--c2", "10", "--h", "0.0625",
                     "--steps", "20", "--out", str(out)]) == 0
    rho = ser.load(out / "density.txt")
    assert 0.0 <= np.min(rho.values) and np.max(rho.values) <= 1.0
    assert cli.main(["minimize-density", "--sigma", "-1", "--c1", "-1", "--c2", "10", "--h", "0.0625",
                     "--half-width", "0.3", "--steps", "5"]) == 2


def test_cli_anneal_from_file(tmp_path):
    c = validate_configuration([[0.0, 0.0], [0.2, 0.0], [0.0, 0.2]], 0.05)
    ser.save(c, tmp_path / "init.txt")
    assert cli.main(["anneal", "--sigma", "-1", "--epsilon", "0.05", "--init", str(tmp_path / "init.txt"),
                     "--epochs", "2"]) == 0
