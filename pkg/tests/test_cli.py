import io
import json
import subprocess
import sys


from stabrep.cli import RunConfig, main


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


def test_code_info_builtin():
    code, text = run("code", "info", "c422")
    assert code == 0
    assert text.splitlines()[0] == "n=4 k=2 d=2 rate=0.5"
    assert "validation: pass" in text


def test_usage_errors_exit_one(capsys):
    assert run("bogus")[0] == 1
    assert run()[0] == 1
    assert run("code", "info", "no-such-code")[0] == 1
    assert run("sweep", "--codes", "c422", "--pt-grid", "nonsense", "--out", "x.csv")[0] == 1
    assert run("distill", "--code", "c422", "--pb", "2")[0] == 1


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "stabrep", "code", "info", "steane713"], capture_output=True,
                         text=True)
    assert res.returncode == 0 and res.stdout.startswith("n=7 k=1 d=3")


def test_gen_hgp_and_info(tmp_path):
    out = tmp_path / "c.json"
    code, text = run("code", "gen-hgp", "--nbits", "8", "--instances", "2", "--seed", "1", "--out", str(out))
    assert code == 0 and "[[100,4," in text
    code, text = run("code", "info", str(out))
    assert code == 0 and text.startswith("n=100 k=4")


def test_distill_rerun_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    code, _ = run("distill", "--code", "steane713", "--pb", "0.03", "--decoder", "lookup", "--trials", "400",
                  "--seed", "5", "--out", str(a))
    assert code == 0
    doc = json.loads(a.read_text())
    assert doc["config"]["seed"] == 5 and doc["result"]["trials"] == 400
    assert run("--workers", "3", "--config", str(a))[0] == 0
    # the rerun overwrites the same --out path, so compare through a copy
    first = a.read_text()
    b.write_text(first)
    assert run("--config", str(b))[0] == 0
    assert a.read_text() == first


def test_repeater_and_twoway(tmp_path):
    code, text = run("repeater", "--code", "steane713", "--segments", "3", "--pb", "0.02", "--decoder", "lookup",
                     "--trials", "200", "--no-end-nodes")
    assert code == 0 and text.startswith("repeater: steane713")
    code, text = run("distill", "--code", "c422", "--mode", "twoway", "--pb", "0.02", "--trials", "200")
    assert code == 0
    assert run("repeater", "--code", "c422", "--segments", "0")[0] == 1


def test_sweep_fit_plan(tmp_path):
    table = tmp_path / "t.csv"
    code, text = run("sweep", "--codes", "c422", "steane713", "--pt-grid", "0.05:0.2:4", "--decoder", "lookup",
                     "--trials", "300", "--out", str(table), "--svg", str(tmp_path / "t.svg"))
    assert code == 0
    assert table.read_text().splitlines()[0] == "code_id,n,p_t,trials,failures,p_l,ci_lo,ci_hi"
    meta = json.loads((tmp_path / "t.csv.json").read_text())
    assert meta["config"]["command"] == ["sweep"] and "provenance" in meta
    assert (tmp_path / "t.svg").read_text().startswith("<svg")
    fit_out = tmp_path / "fit.json"
    code, text = run("fit", "--table", str(table), "--out", str(fit_out))
    assert code == 0 and text.startswith("p0=")
    p0 = json.loads(fit_out.read_text())["result"]["p0"]
    code, text = run("plan", "--fit", str(fit_out), "--distance", "100", "--segment", "10", "--target", "0.5",
                     "--pt", str(p0 / 10), "--no-end-nodes")
    assert code == 0 and text.startswith("N=10 n=")
    assert run("plan", "--fit", str(fit_out), "--distance", "100", "--segment", "10", "--target", "0.5",
               "--pt", str(p0 * 2))[0] == 1


def test_fit_zero_point_rejected(tmp_path):
    t = tmp_path / "z.csv"
    t.write_text("code_id,n,p_t,trials,failures,p_l,ci_lo,ci_hi\n"
                 + "".join(f"a,10,{p},100,{f},0,0,0\n" for p, f in [(0.01, 0), (0.02, 1), (0.03, 2)])
                 + "".join(f"b,20,{p},100,{f},0,0,0\n" for p, f in [(0.01, 1), (0.02, 2), (0.03, 3)]))
    assert run("fit", "--table", str(t))[0] == 1


def test_sweep_rerun_identical(tmp_path):
    a = tmp_path / "a.csv"
    assert run("sweep", "--codes", "steane713", "--pt-grid", "0.05:0.1:2", "--decoder", "lookup",
               "--trials", "200", "--seed", "2", "--out", str(a))[0] == 0
    first = a.read_text()
    assert run("--workers", "4", "--config", str(a) + ".json")[0] == 0
    assert a.read_text() == first


def test_run_config_roundtrip():
    cfg = RunConfig(["distill"], {"code": "c422", "trials": 10, "no_end_nodes": False, "out": None}, 3)
    again = RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg
    argv = cfg.argv()
    assert argv[0] == "distill" and "--seed" in argv and "--out" not in argv


def test_verify_command():
    code, text = run("verify", "--max-weight", "1")
    assert code == 0 and text.count("PASS") == 6
