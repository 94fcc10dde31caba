"""End-to-end tests for the command-line interface.

Each test drives ``main`` with an argv list and checks exit codes (0 ok,
2 bad arguments, 1 runtime failure), the files written, and that the CLI's
artifacts round-trip through the library's own loaders.
"""

import json

import numpy as np
import pytest

from convpolar.channel import parse_channel
from convpolar.circuit import build_circuit, encode
from convpolar.cli import main
from convpolar.erasure_exact import first_error_probs
from convpolar.simulate import CodeSpec, SimReport, make_code, run_mc


@pytest.fixture()
def code_file(tmp_path):
    path = tmp_path / "code.json"
    rc = main(["construct", "--family", "conv", "--n", "4", "--rate", "1/2",
               "--channel", "bec:0.5", "--out", str(path)])
    assert rc == 0
    return path


def test_construct_roundtrips_codespec(code_file):
    spec = CodeSpec.from_json(code_file.read_text(encoding="utf-8"))
    assert spec == make_code("conv", 4, 8, parse_channel("bec:0.5"))
    assert spec.construction == "erasure-exact:0.5"


def test_construct_bitflip_method(tmp_path):
    out = tmp_path / "c.json"
    rc = main(["construct", "--family", "polar", "--n", "3", "--rate", "1/2",
               "--channel", "bsc:0.1", "--method", "bitflip", "--out", str(out)])
    assert rc == 0
    spec = CodeSpec.from_json(out.read_text(encoding="utf-8"))
    assert spec.construction == "bitflip-heuristic:0.1"


def test_construct_bad_inputs(tmp_path):
    out = str(tmp_path / "x.json")
    assert main(["construct", "--family", "conv", "--n", "3", "--rate", "1/3",
                 "--channel", "bec:0.5", "--out", out]) == 2
    assert main(["construct", "--family", "conv", "--n", "3", "--rate", "1/2",
                 "--channel", "foo:0.5", "--out", out]) == 2
    assert main(["construct", "--family", "conv", "--n", "3", "--rate", "7/2",
                 "--channel", "bec:0.5", "--out", out]) == 2


def test_encode_matches_library(code_file, capsys):
    spec = CodeSpec.from_json(code_file.read_text(encoding="utf-8"))
    data = "10110100"
    rc = main(["encode", "--code", str(code_file), "--data", data])
    assert rc == 0
    word = capsys.readouterr().out.strip()
    x = np.zeros(16, dtype=np.uint8)
    for pos, bit in zip(spec.data_positions, data):
        x[pos - 1] = int(bit)
    expected = "".join(str(int(b)) for b in encode(spec.circuit(), x))
    assert word == expected


def test_encode_validates_data(code_file):
    assert main(["encode", "--code", str(code_file), "--data", "01"]) == 2
    assert main(["encode", "--code", str(code_file), "--data", "0110x110"]) == 2
    assert main(["encode", "--code", "/nonexistent.json", "--data", "0"]) == 2


def test_decode_inverts_encode(code_file, tmp_path, capsys):
    data = "01100110"
    out = tmp_path / "word.txt"
    assert main(["encode", "--code", str(code_file), "--data", data,
                 "--out", str(out)]) == 0
    word = out.read_text(encoding="utf-8").strip()
    received = ",".join(word)
    rc = main(["decode", "--code", str(code_file), "--channel", "bsc:0.05",
               "--received", received])
    assert rc == 0
    assert capsys.readouterr().out.strip() == data


def test_decode_handles_erasure_tokens(code_file, capsys):
    # all-zero codeword with a couple of erased symbols still decodes to zero
    symbols = ["0"] * 16
    symbols[3] = "e"
    symbols[9] = "?"
    rc = main(["decode", "--code", str(code_file), "--channel", "bec:0.4",
               "--received", ",".join(symbols)])
    assert rc == 0
    assert capsys.readouterr().out.strip() == "0" * 8


def test_decode_bad_symbols(code_file):
    assert main(["decode", "--code", str(code_file), "--channel", "bsc:0.05",
                 "--received", "0,1"]) == 2
    assert main(["decode", "--code", str(code_file), "--channel", "bsc:0.05",
                 "--received", ",".join(["e"] * 16)]) == 2
    assert main(["decode", "--code", str(code_file), "--channel", "awgn:1.0",
                 "--received", ",".join(["zero"] * 16)]) == 2


def test_decode_contradiction_is_runtime_failure(tmp_path):
    # N=2, data {1}, frozen {2}; a noiseless channel that insists on the
    # non-codeword (0,1) leaves the decoder no consistent choice.
    path = tmp_path / "tiny.json"
    assert main(["construct", "--family", "polar", "--n", "1", "--rate", "1/2",
                 "--channel", "bec:0.5", "--out", str(path)]) == 0
    rc = main(["decode", "--code", str(path), "--channel", "bsc:0.0",
               "--received", "0,1"])
    assert rc == 1


def test_analyze_bec_csv(code_file, tmp_path):
    out = tmp_path / "probs.csv"
    rc = main(["analyze-bec", "--code", str(code_file), "--eps", "0.5",
               "--out", str(out)])
    assert rc == 0
    lines = out.read_text(encoding="utf-8").strip().splitlines()
    assert lines[0] == "position,p_first_error"
    assert len(lines) == 17
    probs = first_error_probs(build_circuit("conv", 4, "periodic"), 0.5)
    for i, line in enumerate(lines[1:]):
        pos, val = line.split(",")
        assert int(pos) == i + 1
        assert float(val) == probs[i]
    assert main(["analyze-bec", "--code", str(code_file), "--eps", "1.5",
                 "--out", str(out)]) == 2


def test_fit_exponent_csv_and_fit(tmp_path, capsys):
    out = tmp_path / "curve.csv"
    rc = main(["fit-exponent", "--family", "polar", "--rate", "1/4",
               "--eps", "0.5", "--n-min", "3", "--n-max", "7",
               "--out", str(out)])
    assert rc == 0
    printed = capsys.readouterr().out
    assert "lower: gamma=" in printed and "upper: gamma=" in printed
    lines = out.read_text(encoding="utf-8").strip().splitlines()
    assert lines[0] == "n,fer_lower,fer_upper"
    assert len(lines) == 6
    for expected_n, line in zip(range(3, 8), lines[1:]):
        n, lo, hi = line.split(",")
        assert int(n) == expected_n
        assert 0.0 < float(lo) <= float(hi) <= 1.0
    assert main(["fit-exponent", "--family", "polar", "--rate", "1/4",
                 "--eps", "0.5", "--n-min", "5", "--n-max", "3",
                 "--out", str(out)]) == 2


def test_simulate_report_and_rerun_identical(code_file, tmp_path):
    r1, r2 = tmp_path / "r1.json", tmp_path / "r2.json"
    argv = ["simulate", "--code", str(code_file), "--channel", "bsc:0.08",
            "--trials", "600", "--seed", "7"]
    assert main(argv + ["--out", str(r1)]) == 0
    assert main(argv + ["--out", str(r2)]) == 0
    assert r1.read_bytes() == r2.read_bytes()
    report = SimReport.from_json(r1.read_text(encoding="utf-8"))
    spec = CodeSpec.from_json(code_file.read_text(encoding="utf-8"))
    assert report == run_mc(spec, parse_channel("bsc:0.08"), 600, seed=7)
    assert "wall_time" not in json.loads(r1.read_text(encoding="utf-8"))


def test_simulate_reports_awgn_operating_point(code_file, tmp_path, capsys):
    out = tmp_path / "r.json"
    rc = main(["simulate", "--code", str(code_file), "--channel", "awgn:0.9",
               "--trials", "200", "--seed", "1", "--out", str(out)])
    assert rc == 0
    printed = capsys.readouterr().out
    assert "sigma=0.9" in printed
    # Eb/N0 = 1/(2 R sigma^2) with R = 1/2: 10*log10(1/0.81)
    assert f"eb_n0={10 * np.log10(1 / 0.81):.3f}dB" in printed


def test_simulate_bad_args(code_file, tmp_path):
    out = str(tmp_path / "r.json")
    assert main(["simulate", "--code", str(code_file), "--channel", "bsc:0.08",
                 "--trials", "0", "--out", out]) == 2
    assert main(["simulate", "--code", str(code_file), "--channel", "bsc:0.08",
                 "--trials", "10", "--seed", "-1", "--out", out]) == 2
    assert main(["simulate", "--code", "/nonexistent.json", "--channel",
                 "bsc:0.08", "--trials", "10", "--out", out]) == 2


def test_argparse_errors_exit_two(capsys):
    for argv in (["frobnicate"], [], ["construct", "--family", "conv"]):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 2
    capsys.readouterr()  # swallow usage text
