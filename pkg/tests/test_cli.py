import json
import subprocess
import sys

import numpy as np
import pytest

from funklab.cli import EXIT_FAIL, EXIT_INPUT, EXIT_OK, run


@pytest.fixture
def specs(tmp_path):
    def write(name, obj):
        p = tmp_path / name
        p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
        return str(p)
    return {
        "disc": write("disc.json", {"type": "disc", "radius": 1.0}),
        "big": write("big.json", {"type": "disc", "radius": 2.0}),
        "K": write("K.json", {"type": "ellipse", "A": [[1.0, 0.0], [0.0, 2.7777777777777777]]}),
        "B": write("B.json", {"type": "ellipse", "A": [[0.25, 0.0], [0.0, 0.25]]}),
        "gauss": write("g.json", {"preset": "gaussian", "n": 1}),
        "cap": write("cap.json", {"type": "cap", "theta": 0.7853981633974483}),
        "broken": write("broken.json", '{"type": "disc",\n  "radius": }'),
        "unknown": write("unknown.json", {"type": "disc", "radius": 1.0, "colour": "red"}),
        "dir": tmp_path,
    }


def test_distance_plain_number(specs, capsys):
    assert run(["distance", "--body", specs["disc"], "--from", "0,0", "--to", "0.5,0"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "0.693147"


def test_distance_json(specs, capsys):
    assert run(["distance", "--body", specs["disc"], "--kind", "hilbert", "--from", "0,0",
                "--to", "0.5,0", "--format", "json"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["result"]["distance"] == pytest.approx(0.5 * np.log(3.0), rel=1e-12)
    assert doc["config"]["command"] == "distance"


def test_malformed_json_reports_position(specs, capsys):
    assert run(["distance", "--body", specs["broken"], "--from", "0,0", "--to", "0.1,0"]) == EXIT_INPUT
    err = capsys.readouterr().err
    assert "line 2" in err and "column" in err


def test_unknown_field_rejected(specs, capsys):
    assert run(["distance", "--body", specs["unknown"], "--from", "0,0", "--to", "0.1,0"]) == EXIT_INPUT
    assert "colour" in capsys.readouterr().err


def test_bad_point_and_exterior_point(specs, capsys):
    assert run(["distance", "--body", specs["disc"], "--from", "0,x", "--to", "0.1,0"]) == EXIT_INPUT
    assert run(["distance", "--body", specs["disc"], "--from", "0,0", "--to", "2,0"]) == EXIT_INPUT


def test_unknown_subcommand(capsys):
    assert run(["teleport"]) == EXIT_INPUT
    assert run(["check", "nonsense", "--seed", "1"]) == EXIT_INPUT


def test_seed_required(specs, capsys):
    assert run(["check", "metric"]) == EXIT_INPUT
    assert "seed" in capsys.readouterr().err
    assert run(["beta", "direct", "--curve", specs["cap"], "--z", "1", "--method", "direct"]) == EXIT_INPUT


def test_check_is_deterministic(capsys):
    outs = []
    for _ in range(2):
        assert run(["check", "metric", "--seed", "7"]) == EXIT_OK
        cap = capsys.readouterr()
        outs.append(cap.out)
        assert "PASS metric" in cap.err
    assert outs[0] == outs[1]
    assert json.loads(outs[0])["result"]["passed"] is True


def test_periodic_csv(specs):
    out = specs["dir"] / "orbit.csv"
    assert run(["billiard", "periodic", "--inner", specs["disc"], "--outer", specs["big"],
                "--period", "2", "--out", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# config: ")
    assert lines[1] == "index,q,p,segment_length"
    assert len(lines) == 4


def test_caustic_svg_deterministic(specs, capsys):
    paths = [specs["dir"] / f"c{i}.svg" for i in range(2)]
    for p in paths:
        assert run(["billiard", "caustic", "--inner", specs["K"], "--outer", specs["B"],
                    "--bounces", "60", "--out", str(p)]) == EXIT_OK
    a, b = (p.read_bytes() for p in paths)
    assert a == b and a.startswith(b"<?xml")
    assert b"<dc:date>" not in a
    assert "harmonic residual" in capsys.readouterr().err


def test_svg_unavailable(specs, capsys):
    assert run(["functional", "twisted", "--function", specs["gauss"], "--out", "svg"]) == EXIT_INPUT


def test_functional_and_volume(specs, capsys):
    assert run(["functional", "twisted", "--function", specs["gauss"], "--rho", "0.5"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["result"]["twisted_product"] == pytest.approx(7.25520, abs=1e-3)
    assert run(["volume", "mahler", "--body", specs["disc"], "--rho", "0.5"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["result"]["value"] == pytest.approx(3.0536662, abs=1e-6)


def test_beta_stokes(specs, capsys):
    assert run(["beta", "direct", "--curve", specs["cap"], "--z", "1"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["result"]["value"] == pytest.approx(2.467401100272342, abs=1e-8)


def test_module_entry_point(specs):
    r = subprocess.run([sys.executable, "-m", "funklab", "distance", "--body", specs["disc"],
                        "--from", "0,0", "--to", "0.5,0"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip() == "0.693147"


def test_failed_check_exit_code(monkeypatch, capsys):
    from funklab import checks
    from funklab.checks import Check
    monkeypatch.setitem(checks.SUITES, "metric", lambda seed: [Check("metric", "forced", False, 0, "none")])
    assert run(["check", "metric", "--seed", "1"]) == EXIT_FAIL
    assert "FAIL metric: forced" in capsys.readouterr().err
