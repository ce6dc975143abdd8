import json
import math
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from mrfcd.cli import ExperimentConfig, main, parse_config
from mrfcd.lecam import BoundReport, sample_threshold
from mrfcd.plot import emit_plot, render_svg
from mrfcd.risk import RiskReport, reports_from_csv

SVG = "{http://www.w3.org/2000/svg}"


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestBound:
    def test_json_on_stdout(self, capsys):
        code, out, _ = run_cli(capsys, "bound", "--kind", "ising-easy", "--p", "100", "--alpha", "0.3", "--delta", "0.5")
        assert code == 0
        rep = BoundReport.from_dict(json.loads(out))
        assert rep.n_threshold == pytest.approx(sample_threshold("ising-easy", p=100, alpha=0.3, delta=0.5))

    def test_inf_threshold(self, capsys):
        code, out, _ = run_cli(capsys, "bound", "--kind", "gaussian", "--p", "10", "--gamma", "0", "--delta", "0.1")
        assert code == 0 and json.loads(out)["n_threshold"] == "inf"

    def test_structure_learning_mode(self, capsys):
        _, out, _ = run_cli(capsys, "bound", "--kind", "gaussian", "--p", "50", "--gamma", "0.2", "--delta", "0.2",
                            "--mode", "structure-learning")
        assert BoundReport.from_dict(json.loads(out)).n_threshold == sample_threshold("gaussian", p=50, gamma=0.2, delta=0.4)

    def test_csv_format(self, capsys):
        code, out, _ = run_cli(capsys, "bound", "--kind", "ising-clique", "--p", "20", "--d", "4", "--beta", "1.5",
                               "--delta", "0.5", "--format", "csv")
        header, row = out.strip().splitlines()
        assert code == 0 and header.startswith("kind,p,d,") and row.startswith("ising-clique,20,4,")

    @pytest.mark.parametrize("argv", [
        ["bound", "--kind", "ising-clique", "--p", "20", "--d", "4", "--beta", "0.1", "--delta", "0.5"],
        ["bound", "--kind", "ising-easy", "--p", "20", "--alpha", "0.3", "--delta", "1.5"],
        ["bound", "--kind", "nonsense", "--p", "20", "--delta", "0.5"],
        ["bound", "--kind", "ising-easy", "--p", "20"],
        ["frobnicate"],
        [],
    ])
    def test_invalid_exit_2(self, capsys, argv):
        code, _, err = run_cli(capsys, *argv)
        assert code == 2


class TestSimulate:
    ARGS = ["simulate", "--kind", "ising-clique", "--p", "10", "--d", "4", "--beta", "0.9", "--n", "20",
            "--trials", "3000", "--seed", "42"]

    def test_deterministic_csv(self, tmp_path, capsys):
        paths = []
        for threads in ("1", "4", "1"):
            path = tmp_path / f"r{len(paths)}.csv"
            assert main(self.ARGS + ["--threads", threads, "--out", str(path)]) == 0
            paths.append(path)
        blobs = [p.read_bytes() for p in paths]
        assert blobs[0] == blobs[1] == blobs[2]
        rep, = reports_from_csv(blobs[0].decode())
        assert (rep.kind, rep.p, rep.d, rep.lam, rep.n, rep.seed) == ("ising-clique", 10, 4, 0.9, 20, 42)

    def test_env_thread_fallback(self, monkeypatch):
        monkeypatch.setenv("MRFCD_THREADS", "3")
        assert parse_config(self.ARGS).threads == 3

    def test_json_format(self, capsys):
        code, out, _ = run_cli(capsys, *self.ARGS, "--format", "json")
        assert code == 0 and json.loads(out)["n"] == 20

    @pytest.mark.parametrize("extra", [["--trials", "10"], ["--lambda", "0.7", "--kind", "gaussian"], ["--seed", "-1"]])
    def test_invalid(self, capsys, extra):
        code, _, _ = run_cli(capsys, *self.ARGS, *extra)
        assert code == 2


class TestSweep:
    def test_outputs(self, tmp_path, capsys):
        out, smooth, plot = tmp_path / "s.csv", tmp_path / "m.csv", tmp_path / "s.svg"
        argv = ["sweep", "--kind", "ising-easy", "--p", "5", "--alpha", "0.6", "--n-list", "0,4,16",
                "--trials", "500", "--seed", "3", "--out", str(out), "--smoothed-out", str(smooth), "--plot", str(plot)]
        assert main(argv) == 0
        reports = reports_from_csv(out.read_text())
        assert [r.n for r in reports] == [0, 4, 16]
        assert smooth.read_text().startswith("n,risk,risk_smoothed\n")
        ET.fromstring(plot.read_text())
        first = out.read_bytes()
        assert main(argv + ["--threads", "2"]) == 0
        assert out.read_bytes() == first

    def test_no_temp_files_left(self, tmp_path):
        argv = ["sweep", "--kind", "gaussian", "--p", "4", "--gamma", "0.3", "--n-list", "2",
                "--trials", "200", "--seed", "1", "--out", str(tmp_path / "g.csv")]
        assert main(argv) == 0
        assert [p.name for p in tmp_path.iterdir()] == ["g.csv"]


class TestConfig:
    def test_round_trip(self):
        cfg = parse_config(["sweep", "--kind", "ising-clique", "--p", "10", "--d", "4", "--beta", "0.9",
                            "--n-list", "1,2,3", "--trials", "100", "--seed", "7"])
        assert ExperimentConfig.from_json(cfg.to_json()) == cfg

    def test_file_with_flag_override(self, tmp_path, capsys):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"command": "bound", "kind": "ising-easy", "p": 10, "alpha": 0.5, "delta": 0.9}))
        code, out, _ = run_cli(capsys, "bound", "--config", str(path), "--delta", "0.5")
        assert code == 0
        assert json.loads(out)["n_threshold"] == pytest.approx(19.78096338441862196, rel=1e-13)

    def test_unknown_key(self, tmp_path, capsys):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"kind": "ising-easy", "colour": "red"}))
        code, _, _ = run_cli(capsys, "bound", "--config", str(path))
        assert code == 2

    def test_missing_file(self, tmp_path, capsys):
        code, _, _ = run_cli(capsys, "bound", "--config", str(tmp_path / "nope.json"))
        assert code == 2


class TestVerify:
    def test_all_pass(self, capsys):
        code, out, _ = run_cli(capsys, "verify", "--suite", "all")
        assert code == 0
        names = ("lemma1-chain", "lemma2", "appendix-sandwich", "det-identities", "chi2-oracles", "footnote-039")
        assert all(f"PASS {nm}:" in out for nm in names)

    def test_unknown_suite(self, capsys):
        code, _, _ = run_cli(capsys, "verify", "--suite", "nope")
        assert code == 2


def risk_report(n, risk, lb):
    return RiskReport("ising-single-edge", 4, None, 0.5, n, 100, 1, risk, 0.01, lb, 0.0)


class TestPlot:
    def test_one_point(self):
        root = ET.fromstring(render_svg([risk_report(3, 0.9, 0.8)]))
        groups = root.findall(f"{SVG}g")
        assert len(groups[0].findall(f"{SVG}circle")) == 1

    def test_two_series(self):
        root = ET.fromstring(render_svg([risk_report(n, 1 - n / 20, 0.9 - n / 20) for n in (1, 5, 9)]))
        names = [g.get("data-name") for g in root.findall(f"{SVG}g")]
        assert names == ["empirical optimal risk", "Le Cam lower bound"]
        labels = " ".join(t.text for t in root.iter(f"{SVG}text"))
        assert "samples per dataset n" in labels and "probability" in labels

    def test_byte_identical(self, tmp_path):
        reps = [risk_report(n, 0.5, 0.4) for n in (1, 2)]
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        emit_plot(reps, str(a))
        emit_plot(reps, str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_threshold_plot(self, tmp_path, capsys):
        files = []
        for alpha in (0.2, 0.4, 0.8):
            path = tmp_path / f"b{alpha}.json"
            assert main(["bound", "--kind", "ising-easy", "--p", "30", "--alpha", str(alpha), "--delta", "0.5",
                         "--out", str(path)]) == 0
            files += ["--input", str(path)]
        svg = tmp_path / "t.svg"
        assert main(["plot", *files, "--out", str(svg)]) == 0
        root = ET.fromstring(svg.read_text())
        assert len(root.find(f"{SVG}g").findall(f"{SVG}circle")) == 3

    def test_empty(self, capsys):
        with pytest.raises(Exception):
            render_svg([])


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "mrfcd", "bound", "--kind", "gaussian", "--p", "100",
                           "--gamma", "0.39", "--delta", "0"], capture_output=True, text=True, check=True)
    assert math.isclose(json.loads(proc.stdout)["n_threshold"], math.log(101) / (2 * 0.39**2), rel_tol=1e-13)
