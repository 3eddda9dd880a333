import json
import subprocess
import sys

import pytest

from bhanalog.cli import EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC, EXIT_OK, main
from bhanalog.runner import MANIFEST, verify_manifest

BASE = {
    "name": "tiny",
    "grid": {"shape": [32]},
    "params": {"J": 1.0, "U": 0.1},
    "initial": {"kind": "homogeneous", "n": 100, "noise": 1e-3},
    "integrator": {"dt": 0.01, "steps": 20, "stride": 10},
}


def write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def test_list_presets(capsys):
    assert main(["list-presets"]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 7 and lines[1].startswith("blackhole-1d")


def test_validate(tmp_path, capsys):
    assert main(["validate", write(tmp_path, BASE)]) == EXIT_OK
    assert "valid" in capsys.readouterr().out
    bad = json.loads(json.dumps(BASE))
    del bad["params"]["U"]
    assert main(["validate", write(tmp_path, bad)]) == EXIT_CONFIG
    assert "U" in capsys.readouterr().err
    (tmp_path / "broken.json").write_text("{")
    assert main(["validate", str(tmp_path / "broken.json")]) == EXIT_CONFIG
    assert main(["validate", str(tmp_path / "missing.json")]) == EXIT_IO


def test_run_and_formats(tmp_path):
    cfg = write(tmp_path, BASE)
    for fmt in ("csv", "json", "bin"):
        out = tmp_path / f"out-{fmt}"
        assert main(["run", cfg, "--out", str(out), "--format", fmt, "--quiet"]) == EXIT_OK
        assert (out / "snapshot.json").exists()
        assert verify_manifest(out) == []
    assert (tmp_path / "out-bin" / "snapshot.bin").exists()
    assert not (tmp_path / "out-json" / "snapshot.csv").exists()


def test_seed_flag(tmp_path):
    cfg = write(tmp_path, BASE)
    for tag, seed in (("a", "1"), ("b", "1"), ("c", "2")):
        assert main(["run", cfg, "--out", str(tmp_path / tag), "--seed", seed, "--quiet"]) == EXIT_OK
    read = lambda tag: (tmp_path / tag / "snapshot.csv").read_bytes()  # noqa: E731
    assert read("a") == read("b") != read("c")
    assert json.loads((tmp_path / "a" / MANIFEST).read_text())["seed"] == 1


def test_preset_with_override(tmp_path, capsys):
    out = tmp_path / "bh"
    code = main(["preset", "blackhole-1d", "--override", "integrator.steps=10", "--out", str(out)])
    assert code == EXIT_OK
    assert "horizon_bonds = 1" in capsys.readouterr().out
    assert json.loads((out / MANIFEST).read_text())["scenario"]["integrator"]["steps"] == 10
    assert main(["preset", "no-such-thing", "--out", str(tmp_path / "x")]) == EXIT_CONFIG
    assert main(["preset", "flrw", "--override", "params.U=-1", "--out", str(tmp_path / "y")]) == EXIT_CONFIG


def test_numeric_failure_exit(tmp_path):
    cfg = dict(BASE, params={"J": 1.0, "U": 1.0, "mu": 0.0},
               initial={"kind": "homogeneous", "n": 1e200}, integrator={"dt": 1.0, "steps": 3})
    out = tmp_path / "boom"
    assert main(["run", write(tmp_path, cfg), "--out", str(out), "--quiet"]) == EXIT_NUMERIC
    assert json.loads((out / MANIFEST).read_text())["status"] == "failed"


def test_dispersion_command(tmp_path):
    assert main(["dispersion", write(tmp_path, BASE), "--out", str(tmp_path / "d0"), "--quiet"]) == EXIT_CONFIG
    cfg = dict(BASE, dispersion={"modes": [[2], [4]], "periods": 20})
    out = tmp_path / "d1"
    assert main(["dispersion", write(tmp_path, cfg), "--out", str(out), "--quiet"]) == EXIT_OK
    lines = (out / "dispersion.csv").read_text().splitlines()
    assert lines[0] == "k_x,k_y,k_z,omega_measured,omega_oracle,V_lattice,V_bogoliubov" and len(lines) == 3
    assert sorted(p.name for p in out.iterdir()) == ["dispersion.csv", MANIFEST]


def test_io_failure(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["run", write(tmp_path, BASE), "--out", str(blocker / "sub"), "--quiet"]) == EXIT_IO


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "bhanalog", "list-presets"], capture_output=True, text=True)
    assert res.returncode == 0 and "dispersion-sweep" in res.stdout
    with pytest.raises(SystemExit):
        main([])
