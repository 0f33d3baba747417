import csv
import io
import subprocess


def run(cli, *args):
    return subprocess.run([cli, *args], capture_output=True, text=True, timeout=600)


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def write(tmp_path, text):
    path = tmp_path / "config.json"
    path.write_text(text)
    return str(path)


def test_baseline_and_optimize(cli, tmp_path):
    cfg = write(tmp_path, '{"slots": 48, "deferrals": [0, 2, 4], '
                          '"demand": {"synthetic": {"base": 200, "amplitude": 150}}}')
    r = run(cli, "baseline", "--config", cfg)
    assert r.returncode == 0, r.stderr
    assert [x["mode"] for x in rows(r.stdout)] == ["baseline"]

    out = tmp_path / "opt.csv"
    r = run(cli, "optimize", "--config", cfg, "--out", str(out))
    assert r.returncode == 0, r.stderr
    got = rows(out.read_text())
    assert [(x["mode"], x["D"]) for x in got] == [("baseline", "0"), ("base", "4")]
    assert float(got[1]["cost_norm"]) < 1.0


def test_sweep_dmax_and_verify(cli, tmp_path):
    cfg = write(tmp_path, '{"slots": 48, "deferrals": [0, 2, 8], '
                          '"demand": {"synthetic": {"base": 200, "amplitude": 150}}}')
    r = run(cli, "sweep", "--config", cfg, "--dmax", "3", "--mode", "shutdown")
    assert r.returncode == 0, r.stderr
    assert [x["D"] for x in rows(r.stdout)[1:]] == ["0", "2", "3"]
    r = run(cli, "verify", "--config", cfg, "--dmax", "2")
    assert r.returncode == 0, r.stderr
    assert "base D=2: ok" in r.stdout
    assert "profit" in r.stdout


def test_demo_config_runs(cli, root):
    r = run(cli, "optimize", "--config", str(root / "configs" / "demo.json"), "--mode", "renewable")
    assert r.returncode == 0, r.stderr
    assert rows(r.stdout)[1]["mode"] == "renewable"


def test_exit_codes(cli, tmp_path):
    assert run(cli, "sweep", "--config", write(tmp_path, '{"slotz": 1}')).returncode == 2
    assert run(cli, "sweep", "--config", write(tmp_path, '{"modes": ["renewable"]}')).returncode == 2
    bad_trace = tmp_path / "t.csv"
    bad_trace.write_text("slot,requests\n1,x\n")
    r = run(cli, "sweep", "--trace", str(bad_trace))
    assert r.returncode == 2 and ":2" in r.stderr
    assert run(cli, "frobnicate").returncode == 2

    tight = write(tmp_path, '{"slots": 24, "modes": ["shutdown"], "deferrals": [1], '
                            '"demand": {"synthetic": {"base": 200, "amplitude": 150}}, '
                            '"shutdown": {"initial_servers": 1, "pin_toggles": true}}')
    r = run(cli, "sweep", "--config", tight)
    assert r.returncode == 3
    assert rows(r.stdout)[1]["cost_usd"] == "nan"
