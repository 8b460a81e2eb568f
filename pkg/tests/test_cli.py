import json
import subprocess
import sys

import numpy as np
import pytest

from colored_mardia.cli import EXIT_ACCEPT, EXIT_ERROR, EXIT_REJECT, main
from colored_mardia.generators import ProcessSpec, SeededRng, generate
from colored_mardia.stats import write_csv


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_white_noise_mostly_accepted(tmp_path, capsys):
    accepted, pvals = 0, []
    for seed in range(20):
        path = tmp_path / f"w{seed}.csv"
        write_csv(SeededRng(seed).generator().standard_normal((1, 1000)), path)
        code, out, _ = run(["test", "--input", str(path), "--mode", "scalar-colored", "--json"], capsys)
        assert code in (EXIT_ACCEPT, EXIT_REJECT)
        accepted += code == EXIT_ACCEPT
        pvals.append(json.loads(out)["p_value"])
    assert accepted >= 16
    assert 0.2 < np.mean(pvals) < 0.8


def test_clayton_rejected_with_tiny_p_typically(tmp_path, capsys):
    spec = ProcessSpec("clayton-copula", a=0.8, theta=2.0)
    tiny, seeds = 0, 50
    for seed in range(seeds):
        path = tmp_path / f"c{seed}.csv"
        write_csv(generate(spec, 1000, SeededRng(seed).generator()), path)
        code, out, _ = run(["test", "-i", str(path), "--mode", "bivariate", "--json"], capsys)
        p_value = json.loads(out)["p_value"]
        assert code == (EXIT_REJECT if p_value < 0.05 else EXIT_ACCEPT)
        tiny += p_value < 0.001
    assert tiny / seeds > 0.5


def test_dimension_mismatch_exit_one(tmp_path, capsys):
    path = tmp_path / "three.csv"
    write_csv(np.random.default_rng(0).standard_normal((3, 100)), path)
    code, _, err = run(["test", "-i", str(path), "--mode", "bivariate"], capsys)
    assert code == EXIT_ERROR
    assert "p = 2" in err


def test_missing_file_exit_one(capsys):
    code, _, err = run(["test", "-i", "/nonexistent/file.csv"], capsys)
    assert code == EXIT_ERROR and err


@pytest.mark.parametrize("argv", [["test"], ["test", "-i", "x.csv", "--bogus"], ["nope"],
                                  ["verify", "--order", "9"], ["test", "-i", "x.csv", "--max-lag", "-3"]])
def test_usage_errors_exit_one(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == EXIT_ERROR


def test_help_documents_flags(capsys):
    flags = {
        "test": ["--input", "--mode", "--alpha", "--delta", "--max-lag", "--json", "--no-center"],
        "table1": ["--replications", "--full", "--alphas", "--seed", "--workers", "--output-csv"],
        "detect": ["--snr-min", "--snr-max", "--snr-points", "--replications", "--seed"],
        "verify": ["--case", "--order"],
        "simulate": ["--family", "--theta", "--seed", "--output"],
    }
    for cmd, expected in flags.items():
        with pytest.raises(SystemExit) as exc:
            main([cmd, "--help"])
        assert exc.value.code == 0
        text = capsys.readouterr().out
        for flag in expected:
            assert flag in text


def test_verify_pairing_counts(capsys):
    code, out, _ = run(["verify", "--case", "pairing-counts"], capsys)
    assert code == EXIT_ACCEPT
    for c in ("3", "15", "105", "945", "10395", "135135", "2027025"):
        assert f": {c} (" in out


def test_verify_a2(capsys):
    code, out, _ = run(["verify", "--case", "a2-coefficients"], capsys)
    assert code == EXIT_ACCEPT
    assert "sum 105" in out


def test_verify_scalar_mean_oracle(capsys):
    code, out, _ = run(["verify", "--case", "scalar-mean-oracle"], capsys)
    assert code == EXIT_ACCEPT and "PASS" in out


def test_simulate_then_test_round_trip(tmp_path, capsys):
    path = tmp_path / "g.csv"
    code, _, _ = run(["simulate", "--family", "gaussian-copula", "--a", "0.5", "--seed", "4",
                      "-N", "500", "-o", str(path)], capsys)
    assert code == EXIT_ACCEPT
    code, out, _ = run(["test", "-i", str(path), "--mode", "bivariate", "--json"], capsys)
    assert json.loads(out)["diagnostics"]["n_samples"] == 500


def test_simulate_seed_drawn_and_printed(tmp_path, capsys):
    path = tmp_path / "s.csv"
    code, _, err = run(["simulate", "-N", "10", "-o", str(path)], capsys)
    assert code == EXIT_ACCEPT
    assert err.startswith("seed: ")


def test_simulate_requires_theta(capsys):
    code, _, err = run(["simulate", "--family", "clayton-copula", "--seed", "1"], capsys)
    assert code == EXIT_ERROR and "--theta" in err


def test_table1_byte_identical(tmp_path, capsys):
    outs = []
    for k in range(2):
        csv_path, json_path = tmp_path / f"t{k}.csv", tmp_path / f"t{k}.json"
        code, stdout, _ = run(["table1", "-M", "20", "-N", "300", "--seed", "5",
                               "--output-csv", str(csv_path), "--output-json", str(json_path)], capsys)
        assert code == EXIT_ACCEPT
        outs.append((stdout, csv_path.read_bytes(), json_path.read_bytes()))
    assert outs[0] == outs[1]
    assert len(outs[0][0].splitlines()) == 1 + 9


def test_table1_config_file(tmp_path, capsys):
    cfg = {"spec": ProcessSpec("gaussian-copula", a=0.8, r12=0.8).to_dict(), "M": 15, "N": 200,
           "scenario": "cfg"}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    code, out, _ = run(["table1", "--config", str(path), "-M", "10", "--seed", "2",
                        "--output-csv", str(tmp_path / "o.csv")], capsys)
    assert code == EXIT_ACCEPT
    rows = (tmp_path / "o.csv").read_text().splitlines()
    assert rows[1].split(",")[5] == "10"


def test_detect_small(tmp_path, capsys):
    code, out, _ = run(["detect", "--snr-points", "2", "--replications", "10", "-N", "300",
                        "--seed", "1", "--output-json", str(tmp_path / "d.json")], capsys)
    assert code == EXIT_ACCEPT
    assert "50% power SNR" in out
    doc = json.loads((tmp_path / "d.json").read_text())
    assert doc["seed"] == 1 and len(doc["results"]) == 2 * 3


def test_module_entry_point(tmp_path):
    path = tmp_path / "x.csv"
    write_csv(np.random.default_rng(2).standard_normal((2, 200)), path)
    proc = subprocess.run([sys.executable, "-m", "colored_mardia", "test", "-i", str(path)],
                          capture_output=True, text=True)
    assert proc.returncode in (EXIT_ACCEPT, EXIT_REJECT)
    assert "statistic" in proc.stdout
