import json
import subprocess
import sys

import pytest

from rncctl.cli import main


def test_solve_writes_outputs(tmp_path, capsys):
    assert main(["solve", "example1-4node", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "node 2: slope 0.19" in out
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["scenario"] == "example1-4node" and len(man["scenario_sha256"]) == 64
    assert man["backend"] in ("cython", "numpy")
    assert abs(man["summary"]["node_2"]["slope"] - 0.2) < 0.004
    assert (tmp_path / "trajectory.csv").read_text().startswith("t,V_2,V_3,V_4")


def test_mincut_dest(tmp_path, capsys):
    assert main(["mincut", "example1-4node", "--dest", "4", "--out", str(tmp_path)]) == 0
    assert capsys.readouterr().out.strip() == "0.52"


def test_structured_errors(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("schema_version: 1\nnetwork: {n_nodes: 2, source: 1, destinations: [2], m: 3}\n"
                   "links: {probabilities: [], bogus: 1}\n")
    assert main(["solve", str(bad), "--out", str(tmp_path / "o")]) == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "scenario" and err["line"] == 3
    assert main(["control-power", "example1-4node", "--out", str(tmp_path / "p")]) == 1
    assert main(["mincut", "example1-4node", "--dest", "1", "--out", str(tmp_path / "q")]) == 1
    with pytest.raises(SystemExit):
        main(["frobnicate"])


def test_online_power_reproducible(tmp_path):
    args = ["online-power", "sixnode-phy-canonical", "--seed", "7", "--t-end", "600"]
    assert main(args + ["--out", str(tmp_path / "a"), "--events"]) == 0
    assert main(args + ["--out", str(tmp_path / "b"), "--events"]) == 0
    for f in ("resource.csv", "trajectory.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    assert (tmp_path / "a" / "events.csv.gz").exists()


def test_control_csma_short(tmp_path):
    assert main(["control-csma", "sixnode-csma-table1", "--t-end", "200",
                 "--out", str(tmp_path)]) == 0
    head = (tmp_path / "resource.csv").read_text().splitlines()[0]
    assert head.startswith("t,beta_1")


def test_validate_and_sweep(tmp_path):
    assert main(["validate", "example1-4node", "--seeds", "2", "--m", "50", "--t-end", "400",
                 "--out", str(tmp_path / "v")]) == 0
    man = json.loads((tmp_path / "v" / "manifest.json").read_text())
    assert man["summary"]["node_4"]["sup_dev_frac_m"] < 0.3
    assert main(["solve", "example1-4node", "--sweep", "2", "--seed", "3",
                 "--out", str(tmp_path / "s")]) == 0
    assert (tmp_path / "s" / "seed-3" / "manifest.json").exists()
    assert (tmp_path / "s" / "seed-4" / "manifest.json").exists()


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "rncctl.cli", "list"], capture_output=True,
                       text=True, check=True)
    assert "sixnode-csma-table1" in r.stdout
