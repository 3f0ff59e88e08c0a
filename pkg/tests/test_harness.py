import csv
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stcode.cli import main
from stcode.harness import (
    OUT_ENV,
    SCHEMA,
    ConfigError,
    ExperimentConfig,
    load_config,
    parse_config,
    resolve_out,
    run_experiment,
    sweep,
)


def read_json(path):
    return json.loads(path.read_text())


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------- configs


configs = st.one_of(
    st.builds(lambda d, b, n, s: ExperimentConfig.create("code-info", seed=s, dims=d, boundary=b, N=n),
              st.tuples(st.integers(1, 6), st.integers(1, 6), st.integers(1, 6)),
              st.sampled_from(["Periodic3Torus", "OpenZ_KV", "OpenZ_WrongA", "OpenZ_WrongB"]),
              st.integers(2, 7), st.integers(0, 2**31)),
    st.builds(lambda L, seq, p, q, r, t: ExperimentConfig.create("ssec", L=L, sequence=seq, p=p, q=q,
                                                                  rounds=r, trials=t),
              st.sampled_from([2, 4]), st.sampled_from(["standard", "ybgr", "ybrg"]),
              st.floats(0, 1), st.floats(0, 1), st.integers(0, 10), st.integers(0, 10**5)),
    st.builds(lambda betas, bt: ExperimentConfig.create("mc-scan", betas=betas, beta_tau=bt),
              st.lists(st.floats(0, 5, allow_nan=False), min_size=1, max_size=5).map(tuple),
              st.one_of(st.none(), st.floats(0, 2))),
    st.builds(lambda sizes, beta: ExperimentConfig.create("mc-wilson", sizes=sizes, beta=beta),
              st.lists(st.tuples(st.integers(1, 5), st.integers(1, 5)), min_size=2, max_size=6).map(tuple),
              st.floats(0, 2)),
    st.builds(lambda n, L: ExperimentConfig.create("zn-verify", N=n, L=L), st.integers(2, 9),
              st.sampled_from([2, 4])),
)


@settings(max_examples=150, deadline=None)
@given(configs)
def test_config_round_trip(cfg):
    assert parse_config(cfg.serialize()) == cfg


def test_defaults_fill_schema():
    cfg = ExperimentConfig.create("mc-hysteresis")
    assert set(cfg.params) == set(SCHEMA["mc-hysteresis"])


@pytest.mark.parametrize("text", [
    "seed = 1\n",
    "kind = teleport\n",
    "kind = ssec\np = 1.5\n",
    "kind = ssec\nsequence = rgby\n",
    "kind = ssec\nwidth = 3\n",
    "kind = ssec\np = 0.1\np = 0.2\n",
    "kind = mc-scan\nL = 5\n",
    "kind = mc-wilson\nsizes = 1x1\n",
    "kind = ssec\nseed = one\n",
    "kind = ssec\njust text\n",
    "kind = mc-hysteresis\nreplicas = 0\n",
])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_out_precedence(monkeypatch):
    monkeypatch.delenv(OUT_ENV, raising=False)
    assert resolve_out(None) == "results"
    assert resolve_out(None, "cfg") == "cfg"
    monkeypatch.setenv(OUT_ENV, "env")
    assert resolve_out(None, "cfg") == "env"
    assert resolve_out("flag", "cfg") == "flag"


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.cfg")


# ---------------------------------------------------------------- runs


def test_code_info_cli(tmp_path, capsys):
    out = tmp_path / "ci"
    assert main(["code-info", "--dims", "2,2,3", "--boundary", "OpenZ_KV", "--out", str(out)]) == 0
    info = read_json(out / "code_info.json")
    assert info["k"] == 2
    man = read_json(out / "manifest.json")
    assert man["status"] == "ok" and man["kind"] == "code-info"
    assert "code_info.json" in man["outputs"] and man["version"]
    assert json.loads(capsys.readouterr().out)["status"] == "ok"


def test_zn_verify_cli(tmp_path):
    out = tmp_path / "zn"
    assert main(["zn", "verify", "--N", "3", "--L", "2", "--out", str(out)]) == 0
    assert read_json(out / "zn_verify.json")["all commutation identities hold"] is True


def test_exit_code_config_error(tmp_path, capsys):
    out = tmp_path / "bad"
    assert main(["ssec", "run", "--p", "1.5", "--out", str(out)]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["exit_code"] == 2 and err["error"] == "config"


def test_exit_code_runtime_error(tmp_path):
    cfg = ExperimentConfig.create("code-info", dims=(3, 2, 2), boundary="Periodic3Torus", out=str(tmp_path))
    res = run_experiment(cfg)
    assert res.exit_code == 1
    err = read_json(tmp_path / "error.json")
    assert err["error"] == "runtime" and "LatticeError" in err["message"]


def test_ssec_csv_byte_identical(tmp_path):
    args = ["ssec", "run", "--L", "2", "--p", "0.02", "--q", "0.02", "--trials", "60", "--seed", "4"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b"), "--threads", "2"]) == 0
    a = (tmp_path / "a" / "ssec.csv").read_bytes()
    assert a == (tmp_path / "b" / "ssec.csv").read_bytes()
    row = read_csv(tmp_path / "a" / "ssec.csv")[0]
    assert row["trials"] == "60" and float(row["wilson_lo"]) <= float(row["rate"]) <= float(row["wilson_hi"])


def test_manifest_reruns(tmp_path):
    out = tmp_path / "mc"
    assert main(["mc", "run", "--L", "2", "--Lt", "2", "--betas", "0.3,0.6", "--therm", "20", "--meas", "200",
                 "--bin", "20", "--out", str(out)]) == 0
    man = read_json(out / "manifest.json")
    cfg = parse_config(man["config"])
    again = tmp_path / "again"
    cfg.out = str(again)
    assert run_experiment(cfg).exit_code == 0
    assert (out / "plaquette.csv").read_bytes() == (again / "plaquette.csv").read_bytes()
    rows = read_csv(out / "plaquette.csv")
    assert [r["observable"] for r in rows] == ["plaquette", "acceptance"] * 2


def test_run_config_file(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text("# zn check\nkind = zn-verify\nN = 5\nL = 2\nout = " + str(tmp_path / "r") + "\n")
    assert main(["run", "--config", str(path)]) == 0
    assert read_json(tmp_path / "r" / "zn_verify.json")["N"] == 5


def test_env_var_output(tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "env"))
    assert main(["zn", "verify", "--N", "2", "--L", "2"]) == 0
    assert (tmp_path / "env" / "zn_verify.json").exists()


def test_hysteresis_and_wilson_cli(tmp_path):
    out = tmp_path / "h"
    assert main(["mc", "hysteresis", "--L", "2", "--Lt", "2", "--betas", "0.3,0.5",
                 "--sweeps-per-beta", "100", "--replicas", "2", "--out", str(out)]) == 0
    rows = read_csv(out / "hysteresis.csv")
    assert {r["branch"] for r in rows} == {"up", "down"}
    rep = read_json(out / "hysteresis.json")
    assert "loop_area" in rep and rep["replicas"] == 2
    out = tmp_path / "w"
    assert main(["mc", "wilson", "--L", "4", "--Lt", "4", "--beta", "0.3", "--sizes", "1x1,1x2,2x1",
                 "--therm", "20", "--meas", "100", "--bin", "10", "--out", str(out)]) == 0
    fit = read_json(out / "wilson_fit.json")
    assert fit["preferred"] in ("area", "perimeter")
    assert len(read_csv(out / "wilson.csv")) == 3


# ---------------------------------------------------------------- sweeps


def test_sweep_sorted_rows(tmp_path):
    tmpl = ExperimentConfig.create("zn-verify", out=str(tmp_path / "s"))
    res = sweep(tmpl, "N", ["5", "2", "3"])
    assert res.exit_code == 0
    rows = read_csv(tmp_path / "s" / "sweep.csv")
    assert [r["N"] for r in rows] == ["2", "3", "5"]
    assert all(r["ok"] == "True" for r in rows)
    assert (tmp_path / "s" / "N=3" / "zn_verify.json").exists()


def test_sweep_cli_and_empty_axis(tmp_path):
    path = tmp_path / "t.cfg"
    path.write_text("kind = code-info\ndims = 2,2,2\nboundary = Periodic3Torus\n")
    out = tmp_path / "empty"
    assert main(["sweep", "--config", str(path), "--param", "N", "--values", "", "--out", str(out)]) == 0
    assert (out / "sweep.csv").read_text().strip() == "N"
    out = tmp_path / "full"
    assert main(["sweep", "--config", str(path), "--param", "N", "--values", "3;2", "--out", str(out)]) == 0
    assert [r["N"] for r in read_csv(out / "sweep.csv")] == ["2", "3"]


def test_sweep_conflicting_paths(tmp_path):
    tmpl = ExperimentConfig.create("zn-verify", out=str(tmp_path))
    assert sweep(tmpl, "N", ["3", "3"]).exit_code == 2
    assert sweep(tmpl, "L", ["2", "2.0"]).exit_code == 2
    assert sweep(tmpl, "width", ["1"]).exit_code == 2
