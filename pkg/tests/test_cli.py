import json

import numpy as np
import pytest

from photsub.cli import main
from photsub.reports import read_csv

SMALL = ["--nth", "2", "--shots", "3000", "--seed", "5"]


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def exit_code(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    capsys.readouterr()
    return code


class TestTheory:
    def test_cps_sweep_constant_fano(self, capsys):
        code, out, _ = run(["theory", "cps-sweep", "--Mt", "1.254", "--Mr", "1.679", "--mr", "0..6"], capsys)
        assert code == 0
        meta, rows = read_csv(out)
        assert meta["program"] == "photsub" and meta["subject"] == "cps-sweep"
        assert [r["m_R"] for r in rows] == list(range(7))
        for r in rows:
            assert r["F_CPS"] == pytest.approx(1.46809, abs=1e-5)
        eps = [r["eps"] for r in rows]
        assert all(b > a for a, b in zip(eps, eps[1:]))

    def test_joint_vacuum_transmitted_arm(self, capsys):
        code, out, _ = run(["theory", "joint", "--Mt", "0", "--Mr", "0", "--mt-max", "3", "--mr-max", "3"], capsys)
        assert code == 0
        _, rows = read_csv(out)
        p = {(int(r["m_T"]), int(r["m_R"])): r["p"] for r in rows}
        assert p[0, 0] == 1.0
        assert sum(p.values()) == 1.0

    def test_joint_json(self, capsys):
        code, out, _ = run(["theory", "joint", "--Mt", "1", "--Mr", "1", "--mt-max", "5",
                            "--mr-max", "5", "--format", "json"], capsys)
        assert code == 0
        d = json.loads(out)
        table = np.asarray(d["table"]) if "table" in d else np.asarray(d["data"]["table"])
        assert table.shape == (6, 6)

    def test_ips_sweep(self, capsys):
        code, out, _ = run(["theory", "ips-sweep", "--nth", "2"], capsys)
        assert code == 0
        _, (row,) = read_csv(out)
        assert row["p_on"] == pytest.approx(0.5, abs=1e-12)
        assert row["M_IPS"] == pytest.approx(1.5, abs=1e-12)
        assert row["F_IPS"] == pytest.approx(11 / 6, abs=1e-12)

    def test_geometric_nth_grid(self, capsys):
        code, out, _ = run(["theory", "ips-sweep", "--nth", "0.1:100:5"], capsys)
        _, rows = read_csv(out)
        assert [r["n_th"] for r in rows] == pytest.approx(np.geomspace(0.1, 100, 5))

    def test_wigner_sidecar(self, tmp_path, capsys):
        out = tmp_path / "w.csv"
        code, _, _ = run(["theory", "wigner", "--nth", "1", "--points", "32", "--out", str(out)], capsys)
        assert code == 0
        meta = json.loads(out.with_suffix(".json").read_text())
        assert meta["convention"]["vacuum_variance"] == 0.5
        _, rows = read_csv(out.read_text())
        assert len(rows) == 32 * 32

    def test_outdir_env(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("PHOTSUB_OUTDIR", str(tmp_path))
        code, _, _ = run(["theory", "ips-sweep", "--nth", "1", "--out", "ips.csv"], capsys)
        assert code == 0
        assert (tmp_path / "ips.csv").read_text().startswith("# {")

    @pytest.mark.parametrize("argv", [
        ["theory", "cps-sweep", "--Mt", "1", "--Mr", "1", "--mr", "5..2"],
        ["theory", "joint"],
        ["theory", "ips-sweep", "--nth", "a,b"],
        ["bogus"],
    ])
    def test_usage_errors(self, argv, capsys):
        assert exit_code(argv, capsys) == 2

    @pytest.mark.parametrize("argv", [
        ["theory", "cps-sweep", "--Mt", "-1", "--Mr", "1", "--mr", "0..2"],
        ["theory", "ips-sweep", "--nth", "1", "--tau", "1.5"],
    ])
    def test_domain_errors(self, argv, capsys):
        assert exit_code(argv, capsys) == 3


class TestExperiment:
    @pytest.mark.parametrize("binary", [False, True])
    def test_simulate_then_analyze(self, tmp_path, capsys, binary):
        shots = tmp_path / "run.shots"
        s1 = tmp_path / "sim.json"
        s2 = tmp_path / "ana.json"
        argv = ["simulate", *SMALL, "--out", str(shots), "--summary", str(s1)]
        assert run(argv + (["--binary"] if binary else []), capsys)[0] == 0
        assert run(["analyze", str(shots), "--out", str(s2)], capsys)[0] == 0
        assert s1.read_bytes() == s2.read_bytes()
        assert (tmp_path / "sim_hist.csv").exists()
        summary = json.loads(s1.read_text())
        assert summary["shots"] == 3000

    def test_analyze_single_mode(self, tmp_path, capsys):
        shots = tmp_path / "run.jsonl"
        run(["simulate", *SMALL, "--out", str(shots)], capsys)
        code, out, _ = run(["analyze", str(shots), "--mode", "cps:1"], capsys)
        assert code == 0
        assert [e["mode"] for e in json.loads(out)["conditioned"]] == ["cps:1"]

    def test_truncated_file(self, tmp_path, capsys):
        shots = tmp_path / "run.jsonl"
        run(["simulate", *SMALL, "--out", str(shots)], capsys)
        shots.write_bytes(shots.read_bytes()[:-20])
        assert exit_code(["analyze", str(shots)], capsys) == 4

    def test_missing_file(self, tmp_path, capsys):
        assert exit_code(["analyze", str(tmp_path / "nope")], capsys) == 4

    def test_ips_on_vacuum_is_conditioning_error(self, tmp_path, capsys):
        shots = tmp_path / "vac.jsonl"
        assert run(["simulate", "--nth", "0", "--shots", "200", "--out", str(shots)], capsys)[0] == 0
        assert exit_code(["analyze", str(shots), "--mode", "ips"], capsys) == 3

    def test_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "n_th": 1.0, "tau": 0.5, "shots": 100, "seed": 3,
            "det_t": {"eta": 1.0, "gamma": 0.1, "noise_sigma": 0.0},
            "det_r": {"eta": 1.0, "gamma": 0.1, "noise_sigma": 0.0},
        }))
        code, out, _ = run(["simulate", "--config", str(cfg), "--out", str(tmp_path / "s.jsonl")], capsys)
        assert code == 0
        assert json.loads(out)["config"]["n_th"] == 1.0

    def test_calibrate(self, tmp_path, capsys):
        shots = tmp_path / "run.jsonl"
        run(["simulate", "--shots", "20000", "--seed", "3", "--out", str(shots)], capsys)
        for arm, gamma in (("t", 0.093), ("r", 0.104)):
            code, out, _ = run(["calibrate", str(shots), "--arm", arm], capsys)
            assert code == 0
            assert json.loads(out)["gamma"] == pytest.approx(gamma, rel=0.005)

    def test_calibrate_voltage_column(self, tmp_path, capsys):
        v = tmp_path / "v.txt"
        m = np.random.default_rng(0).geometric(0.4, 5000) - 1
        np.savetxt(v, 0.2 * m)
        code, out, _ = run(["calibrate", str(v), "--range", "0.05:0.5"], capsys)
        assert code == 0
        assert json.loads(out)["gamma"] == pytest.approx(0.2, rel=0.005)
