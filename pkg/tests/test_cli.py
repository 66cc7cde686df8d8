import json
import subprocess
import sys

import pytest

from memwalk import __version__, synthesize_returns
from memwalk.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestPdf:
    def test_binomial_golden_csv(self, capsys):
        code, out, _ = run(capsys, "pdf", "--n", "4", "--kappa", "0")
        assert code == 0
        assert out == ("x,prob\n-4,0.0625\n-2,0.25\n0,0.375\n"
                       "2,0.25\n4,0.0625\n")

    def test_json_document(self, capsys):
        code, out, _ = run(capsys, "pdf", "--n", "2", "--kappa", "0.2",
                           "--format", "json")
        assert code == 0
        doc = json.loads(out)
        assert doc["provenance"]["command"] == "pdf"
        assert doc["provenance"]["version"] == __version__
        assert doc["provenance"]["parameters"]["kappa"] == 0.2
        assert doc["data"]["x"] == [-2, 0, 2]
        # eps = kappa/n = 0.1: the two-step hand PDF
        assert doc["data"]["prob"] == pytest.approx([0.3, 0.4, 0.3], abs=1e-15)

    def test_regime_flags(self, capsys):
        code, out, _ = run(capsys, "pdf", "--n", "20", "--kappa", "0.5",
                           "--b", "0.4", "--delta", "5")
        assert code == 0
        assert out.startswith("x,prob\n")

    def test_file_output_with_sidecar(self, tmp_path, capsys):
        out_path = tmp_path / "pdf.csv"
        code, _, _ = run(capsys, "pdf", "--n", "4", "--kappa", "0",
                         "--out", str(out_path))
        assert code == 0
        assert out_path.read_text().startswith("x,prob\n")
        side = json.loads((tmp_path / "pdf.csv.provenance.json").read_text())
        assert side["command"] == "pdf"
        assert side["validity"]["valid"] is True

    def test_byte_identical_reruns(self, tmp_path, capsys):
        paths = []
        for name in ("a.csv", "b.csv"):
            p = tmp_path / name
            run(capsys, "pdf", "--n", "31", "--kappa", "-0.4",
                "--out", str(p))
            paths.append(p.read_bytes())
        assert paths[0] == paths[1]


class TestExitCodes:
    def test_missing_required(self, capsys):
        code, _, err = run(capsys, "pdf", "--kappa", "0.4")
        assert code == 2
        assert "--n" in err

    def test_strict_validity(self, capsys):
        code, _, err = run(capsys, "pdf", "--n", "100", "--kappa", "30",
                           "--strict")
        assert code == 3

    def test_missing_input_file(self, capsys):
        code, _, err = run(capsys, "fit", "--input", "/nonexistent/p.csv")
        assert code == 4

    def test_bad_returns_header(self, tmp_path, capsys):
        bad = tmp_path / "r.csv"
        bad.write_text("ret\n0.1\n")
        code, _, err = run(capsys, "fit", "--returns-csv", str(bad))
        assert code == 4

    def test_malformed_bounds(self, capsys):
        code, _, err = run(capsys, "fit", "--returns-csv", "x.csv",
                           "--bounds", "1,2,3")
        assert code == 2

    def test_b_without_delta(self, capsys):
        code, _, err = run(capsys, "pdf", "--n", "10", "--kappa", "0.1",
                           "--b", "0.4")
        assert code == 2


class TestTables:
    def test_moments(self, capsys):
        code, out, _ = run(capsys, "moments", "--n", "100", "--kappa", "0")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "statistic,value"
        stats = dict(line.split(",") for line in lines[1:])
        assert float(stats["variance"]) == pytest.approx(100.0, rel=1e-12)
        assert float(stats["kurtosis"]) == pytest.approx(2.98, rel=1e-12)

    def test_convergence_roundtrip(self, capsys):
        code, out, _ = run(capsys, "convergence", "--kappa", "0.4",
                           "--n-list", "100,1000")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "n,variance_over_n,kurtosis"
        rows = [line.split(",") for line in lines[1:]]
        assert [int(r[0]) for r in rows] == [100, 1000]
        kurt = [float(r[2]) for r in rows]
        assert abs(kurt[1] - 3) < abs(kurt[0] - 3)

    def test_autocorr_columns(self, capsys):
        code, out, _ = run(capsys, "autocorr", "--n", "50", "--kappa", "0.4",
                           "--lag", "2,3", "--n-walks", "5000", "--seed", "2")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "lag,exact,leading,mc_estimate,mc_se"
        assert len(lines) == 3
        first = lines[1].split(",")
        assert int(first[0]) == 2
        exact, mc, se = float(first[1]), float(first[3]), float(first[4])
        assert abs(mc - exact) < 5 * se

    def test_sample_stats(self, capsys):
        code, out, _ = run(capsys, "sample", "--n", "60", "--kappa", "-0.4",
                           "--n-walks", "8000", "--seed", "6")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "statistic,value,se"
        names = [line.split(",")[0] for line in lines[1:]]
        assert names == ["mean", "variance", "fourth", "kurtosis", "mean_abs"]

    def test_baseline_identity(self, capsys):
        code, out, _ = run(capsys, "baseline", "--alpha", "2", "--scale",
                           "0.7071067811865476", "--u-max", "3", "--points",
                           "7")
        assert code == 0
        for line in out.strip().splitlines()[1:]:
            _, gauss, stable = (float(v) for v in line.split(","))
            assert stable == pytest.approx(gauss, abs=1e-10)


class TestSynthAndFit:
    def test_synth_writes_returns_csv(self, tmp_path, capsys):
        out_path = tmp_path / "returns.csv"
        code, _, _ = run(capsys, "synth", "--b", "0.4", "--delta-sigma", "10",
                         "--kappa", "2.5", "--n-walks", "500", "--seed", "3",
                         "--out", str(out_path))
        assert code == 0
        lines = out_path.read_text().strip().splitlines()
        assert lines[0] == "return"
        assert len(lines) == 501
        float(lines[1])

    def test_synth_matches_library(self, tmp_path, capsys):
        out_path = tmp_path / "r.csv"
        run(capsys, "synth", "--b", "1.0", "--delta-sigma", "10", "--kappa",
            "0", "--n-walks", "50", "--seed", "9", "--out", str(out_path))
        lib = synthesize_returns((1.0, 10.0, 0.0), 50, 9)
        got = [float(v) for v in
               out_path.read_text().strip().splitlines()[1:]]
        assert got == pytest.approx(list(lib.values), rel=1e-15)

    def test_fit_json_schema(self, tmp_path, capsys):
        returns_path = tmp_path / "r.csv"
        run(capsys, "synth", "--b", "0.4", "--delta-sigma", "10", "--kappa",
            "2.5", "--n-walks", "60000", "--seed", "11",
            "--out", str(returns_path))
        fit_path = tmp_path / "fit.json"
        code, _, _ = run(capsys, "fit", "--returns-csv", str(returns_path),
                         "--n-model", "300", "--fit-range", "1.5,6",
                         "--out", str(fit_path))
        assert code == 0
        doc = json.loads(fit_path.read_text())
        for key in ("b", "delta_sigma", "delta_lattice", "kappa", "chi2",
                    "n_model", "fit_range", "validity_fraction",
                    "n_bins_used"):
            assert key in doc
        assert doc["chi2"] >= 0
        assert doc["chi2"] <= doc["gaussian_chi2"]
        assert doc["n_model"] == 300
        assert doc["provenance"]["command"] == "fit"

    def test_fit_from_prices(self, price_csv, capsys):
        import numpy as np

        rng = np.random.default_rng(8)
        prices = 100 * np.exp(np.cumsum(0.01 * rng.standard_normal(3000)))
        # ISO dates must be unique and sorted; 28-day months stay valid
        rows = [(f"{1000 + i // 336:04d}-{1 + (i // 28) % 12:02d}-"
                 f"{1 + i % 28:02d}", f"{p:.6f}")
                for i, p in enumerate(prices)]
        path = price_csv(rows)
        code, out, _ = run(capsys, "fit", "--input", str(path),
                           "--n-model", "200", "--fit-range", "1.5,4",
                           "--no-doubling-check")
        assert code == 0
        doc = json.loads(out)
        assert doc["n_returns"] == 2999


class TestConfigFile:
    def test_config_supplies_defaults(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("n=4\nkappa=0\n# comment\n\nn_list=100,200\n")
        code, out, _ = run(capsys, "pdf", "--config", str(cfg))
        assert code == 0
        assert out.splitlines()[0] == "x,prob"

    def test_flags_override_config(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("n=4\nkappa=0.4\n")
        code, out, _ = run(capsys, "pdf", "--config", str(cfg),
                           "--kappa", "0")
        assert code == 0
        assert "0.0625" in out  # binomial values, so kappa=0 won

    def test_shared_config_across_commands(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("n=50\nkappa=0.4\nn_list=10,20\nn_walks=1000\n")
        for argv in (["pdf"], ["convergence"], ["sample", "--seed", "1"]):
            code, _, _ = run(capsys, *argv, "--config", str(cfg))
            assert code == 0

    def test_malformed_config(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("n 4\n")
        code, _, err = run(capsys, "pdf", "--config", str(cfg))
        assert code == 4


def test_console_script_version():
    out = subprocess.run([sys.executable, "-m", "memwalk.cli", "--version"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert __version__ in out.stdout
