import json
import math
import subprocess
import sys

import pytest

from wilddyn.cli import main
from wilddyn.core import Field
from wilddyn.harness import CSV_HEADER, ConfigError, load_config, parse_config, run_experiment

BASE = {"field": "complex", "p": 2, "operator": "diagonal", "depth": 6, "trunc": 6,
        "F": {"arcs": [["0", "1/16"]]},
        "vectors": [{"name": "off", "entries": [[2, 1.0]]}, {"name": "on", "entries": [[1, 1.0]]}]}


def test_parse_defaults():
    cfg = parse_config(BASE)
    assert cfg.field is Field.COMPLEX and cfg.p == 2 and cfg.horizon == "windows"
    assert [n for n, _ in cfg.vectors] == ["off", "on"]


@pytest.mark.parametrize("patch,key", [
    ({"bogus": 1}, "bogus"),
    ({"depth": 2}, "depth"),
    ({"operator": "nope"}, "operator"),
    ({"p": 0.5}, "p"),
    ({"suites": ["nope"]}, "suites[0]"),
    ({"vectors": [{"name": "a/b", "entries": []}]}, "vectors[0].name"),
    ({"vectors": [{"entries": [[0, 1.0]]}]}, "vectors[0].entries[0][0]"),
    ({"operator": "rotation"}, "field"),
    ({"F": {"disks": [[0, -1]]}}, "F"),
])
def test_config_errors_name_the_key(patch, key):
    with pytest.raises(ConfigError) as e:
        parse_config(dict(BASE, **patch))
    assert e.value.key == key


def test_real_field_rejects_complex_entries():
    raw = dict(BASE, field="real", vectors=[{"name": "z", "entries": [[1, "1+2j"]]}])
    with pytest.raises(ConfigError):
        parse_config(raw)


def test_run_writes_outputs(tmp_path):
    res = run_experiment(parse_config(dict(BASE, suites=["core"])), out_dir=tmp_path)
    names = sorted(p.name for p in res.files)
    assert names == ["classification.json", "lemma_suite.txt", "orbit_off.csv", "orbit_on.csv"]
    csv = (tmp_path / "orbit_off.csv").read_text().splitlines()
    assert csv[0] == CSV_HEADER
    for line in csv[1:]:
        t, lo, hi, dlo, dhi = line.split(",")
        assert float(lo) <= float(hi) and float(dlo) <= float(dhi)
    cls = json.loads((tmp_path / "classification.json").read_text())
    assert cls["off"]["predicted"] == "A" and cls["on"]["predicted"] == "B"
    assert "PASS" in (tmp_path / "lemma_suite.txt").read_text()
    assert res.checks_passed


def test_run_is_byte_deterministic(tmp_path):
    outs = []
    for d in ("a", "b"):
        res = run_experiment(parse_config(BASE), out_dir=tmp_path / d)
        outs.append({p.name: p.read_bytes() for p in res.files})
    assert outs[0] == outs[1]


def test_output_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv("WILDDYN_OUTPUT_DIR", str(tmp_path / "env"))
    res = run_experiment(parse_config(BASE))
    assert all(p.parent == tmp_path / "env" for p in res.files)


def test_toml_roundtrip(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('operator = "hajek_smith"\nfield = "real"\np = 3\ndepth = 3\n'
                 '[F]\nlines = ["0"]\n[[vectors]]\nname = "h"\nentries = [[1, 1.0], [2, 1.0]]\n')
    cfg = load_config(p)
    assert cfg.operator == "hajek_smith" and cfg.p == 3.0


def test_bad_toml(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text("p = = 2")
    with pytest.raises(ConfigError):
        load_config(p)


def test_cli_run_and_exit_codes(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "c.toml"
    cfg.write_text('depth = 6\ntrunc = 6\n[F]\narcs = [["0", "1/16"]]\n[[vectors]]\nname = "v"\nentries = [[2, 1.0]]\n')
    monkeypatch.setenv("WILDDYN_OUTPUT_DIR", str(tmp_path / "out"))
    assert main(["run", str(cfg)]) == 0
    assert (tmp_path / "out" / "orbit_v.csv").exists()
    bad = tmp_path / "bad.toml"
    bad.write_text("depth = 1\n[F]\nlines = [0]\n")
    assert main(["run", str(bad)]) == 2
    assert "depth" in capsys.readouterr().err


def test_cli_spectrum_demo_plot(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text('depth = 6\n[F]\narcs = [["0", "1/16"]]\n')
    assert main(["spectrum", str(cfg)]) == 0
    assert main(["demo", "backward-shift", "--horizon", "5"]) == 0
    assert main(["plot-script", "orbit_v.csv"]) == 0
    assert "orbit_v.csv" in capsys.readouterr().out


def test_cli_suite_module():
    assert main(["suite", "--module", "core"]) == 0


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "wilddyn", "demo", "backward-shift", "--horizon", "3"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "annihilated: True" in r.stdout
