import json
import subprocess
import sys

import pytest

from permconc.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_group_inspect(capsys):
    code, out, _ = run(capsys, "group", "inspect", "--group", "An", "--n", "4")
    assert code == 0
    assert "|G|=12" in out
    assert "O_3 = {1, 2, 3}" in out and "3-local base" in out


def test_talagrand_singleton_is_hamming(capsys):
    code, out, _ = run(capsys, "dual", "talagrand-f", "--group", "Sn", "--n", "3", "--set", "id")
    assert code == 0
    data = json.loads(out)
    assert data["f"] == pytest.approx([0, 2, 2, 3, 3, 2])


def test_transport_and_measure(capsys):
    code, out, _ = run(capsys, "transport", "w1", "--group", "Sn", "--n", "3", "--nu1", "dirac:0", "--nu2", "mu")
    assert code == 0
    assert json.loads(out)["value"] == pytest.approx(2.0)
    code, out, _ = run(capsys, "measure", "entropy", "--group", "Sn", "--n", "3", "--nu", "dirac:0")
    assert code == 0


def test_usage_errors(capsys, tmp_path):
    assert run(capsys, "verify", "tw1", "--group", "Sn", "--n", "3")[0] == 2
    code, _, err = run(capsys, "sample", "draw", "--group", "Sn", "--n", "3")
    assert code == 2 and "--seed" in err
    bad = tmp_path / "g.json"
    bad.write_text(json.dumps({"generators": [[2, 1, 3]]}))
    code, _, err = run(capsys, "group", "build", "--group", str(bad))
    assert code == 2 and "'n'" in err
    bad.write_text(json.dumps({"n": 3, "generators": [[2, 2, 3]]}))
    code, _, err = run(capsys, "group", "build", "--group", str(bad))
    assert code == 2 and "generators[0]" in err
    assert run(capsys, "group", "inspect", "--group", "Sn")[0] == 2
    assert run(capsys, "nonsense")[0] == 2
    code, _, err = run(capsys, "measure", "entropy", "--group", "Sn", "--n", "3", "--measure", "ewens",
                       "--nu", "mu")
    assert code == 2 and "--theta" in err


def test_verification_failure_exit_code(capsys):
    code, out, _ = run(capsys, "verify", "canary", "--seed", "0", "--summary")
    assert code == 1
    assert json.loads(out)["status"] == "fail"
    code, _, _ = run(capsys, "verify", "tw1", "--group", "Sn", "--n", "3", "--seed", "0", "--trials", "20",
                     "--c-override", "1.5", "--summary")
    assert code == 1


def test_verify_all_ewens_end_to_end(tmp_path):
    argv = ["verify", "all", "--group", "Sn", "--n", "4", "--measure", "ewens", "--theta", "2", "--seed", "7"]
    outs = []
    for k in range(2):
        path = tmp_path / f"r{k}.json"
        proc = subprocess.run([sys.executable, "-m", "permconc.cli", *argv, "--trials", "100",
                               "--out", str(path), "--metadata", str(tmp_path / f"m{k}.json")],
                              capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    data = json.loads(outs[0])
    assert data["status"] == "pass"
    ids = {r["inequality_id"] for r in data["reports"]}
    assert {"tw1", "t_tilde", "t_paren", "talagrand", "ckp", "hoeffding_dual"} <= ids


def test_sample_outputs_reproducible(capsys, tmp_path):
    argv = ("sample", "deviation", "--group", "Sn", "--n", "4", "--seed", "3", "--csv", str(tmp_path / "a.csv"))
    code, a, _ = run(capsys, *argv)
    assert code == 0
    first = (tmp_path / "a.csv").read_bytes()
    _, b, _ = run(capsys, *argv)
    assert a == b and (tmp_path / "a.csv").read_bytes() == first
    assert json.loads(a)["pass"]
    code, d1, _ = run(capsys, "sample", "draw", "--group", "An", "--n", "4", "--seed", "5", "--count", "20")
    _, d2, _ = run(capsys, "sample", "draw", "--group", "An", "--n", "4", "--seed", "5", "--count", "20")
    assert code == 0 and d1 == d2


def test_slice_verify(capsys):
    code, out, _ = run(capsys, "verify", "slice", "--parts", "2,2", "--seed", "1", "--trials", "20", "--summary")
    assert code == 0
    assert json.loads(out)["status"] == "pass"
