import json

import numpy as np
import pytest

from hsgeo.algebra import Family, TruncatedAlgebra
from hsgeo.cli import main
from hsgeo.config import ConfigError, load_config, parse_n_range, read_config_file
from hsgeo.explog import matrix_to_json
from hsgeo.reports import CSV_FIELDS, verification_matrix
from hsgeo.scaling import ScalingSequence


@pytest.fixture(autouse=True)
def _isolate(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("HSGEO_CONFIG", raising=False)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    values = {}
    for line in out.out.splitlines():
        key, sep, val = line.partition(" = ")
        if sep:
            values[key.strip()] = val.strip()
    return code, values, out


# -- ricci -----------------------------------------------------------------------------

@pytest.mark.parametrize("family,i,j,expected", [("so", 1, 2, 5.0), ("tri", 1, 2, 0.0), ("gl", 3, 3, -13.5)])
def test_ricci_examples(capsys, family, i, j, expected):
    code, vals, _ = run(capsys, "ricci", "--family", family, "--scaling", "const:1",
                        "--i", str(i), "--j", str(j), "--N", "10")
    assert code == 0
    assert float(vals["closed_form"]) == pytest.approx(expected, abs=1e-12)


def test_ricci_both_reports_oracle(capsys, tmp_path):
    code, vals, _ = run(capsys, "ricci", "--family", "gl", "--scaling", "power:1", "--i", "1", "--j", "2",
                        "--N", "6", "--both", "--out", "r.json", "--format", "json")
    assert code == 0
    assert float(vals["residual"]) <= 1e-12
    doc = json.loads((tmp_path / "r.json").read_text())
    assert doc["entries"][0]["N"] == 6


def test_ricci_corrected_formula(capsys):
    code, vals, _ = run(capsys, "ricci", "--family", "so", "--i", "1", "--j", "2", "--N", "10",
                        "--formula", "corrected", "--both")
    assert code == 0
    assert float(vals["closed_form"]) == pytest.approx(2.0)
    assert float(vals["residual"]) <= 1e-12


@pytest.mark.parametrize("argv", [
    ["ricci", "--family", "so", "--i", "2", "--j", "1", "--N", "10"],
    ["ricci", "--family", "gl", "--i", "3", "--j", "3", "--N", "3"],
    ["verify", "--N", "3", "--i", "3", "--j", "3", "--family", "gl"],
    ["sweep", "--family", "tri", "--k", "2", "--m", "2", "--N-range", "5:10:1"],
])
def test_index_errors_exit_3(capsys, argv):
    assert main(argv) == 3


@pytest.mark.parametrize("argv", [
    ["ricci", "--family", "gl", "--i", "1", "--j", "2"],
    ["ricci", "--family", "xx", "--i", "1", "--j", "2", "--N", "4"],
    ["ricci", "--family", "gl", "--scaling", "power:-1", "--i", "1", "--j", "2", "--N", "4"],
    ["ricci", "--family", "gl", "--i", "1", "--j", "2", "--N", "4", "--tol", "-1"],
    ["ricci", "--family", "gl", "--i", "one", "--j", "2", "--N", "4"],
    ["sweep", "--family", "tri", "--k", "1", "--m", "2", "--N-range", "10:5:1"],
    ["verify", "--family", "gl", "--N", "30"],
    ["counterexample", "--terms", "0"],
    ["bcdh", "--order", "7"],
    ["bcdh", "--order", "2", "--x", "missing.json", "--y", "missing.json"],
    ["nonsense"],
    ["ricci", "--config", "nope.cfg", "--family", "gl", "--i", "1", "--j", "2", "--N", "4"],
])
def test_config_errors_exit_2(capsys, argv):
    assert main(argv) == 2


# -- verify -----------------------------------------------------------------------------

def test_verify_corrected_matrix_passes(capsys, tmp_path):
    code, vals, _ = run(capsys, "verify", "--formula", "corrected", "--out", "v.csv")
    assert code == 0
    lines = (tmp_path / "v.csv").read_text().splitlines()
    assert lines[0] == ",".join(CSV_FIELDS)
    # 3 families x 3 scalings x 4 truncations; base pairs with indices <= 4
    assert len(lines) - 1 == 3 * 4 * (16 + 6 + 6)
    assert vals["verdict"] == "PASS"


def test_verify_published_matrix_flags_skew_and_triangular(capsys, tmp_path):
    code, vals, out = run(capsys, "verify", "--out", "v.json", "--format", "json")
    assert code == 1
    doc = json.loads((tmp_path / "v.json").read_text())
    failing = {(e["family"]) for e in doc["entries"] if e["residual"] > 1e-9 * (1 + abs(e["closed_form"]))}
    assert failing == {"so", "tri"}
    assert "elapsed_s" in doc


def test_verify_perturbation_is_caught(capsys):
    code, vals, _ = run(capsys, "verify", "--family", "gl", "--formula", "corrected", "--N", "6",
                        "--perturb", "1e-6")
    assert code == 1
    assert vals["failures"] == "1"


def test_verify_report_written_on_failure(capsys, tmp_path):
    assert main(["verify", "--family", "tri", "--N", "6"]) == 1
    assert (tmp_path / "hsgeo_verify.csv").exists()


def test_verify_deterministic_output_is_byte_identical(capsys, tmp_path):
    outputs = []
    for jobs in ("1", "3", "1"):
        for fmt in ("csv", "json"):
            name = f"v{jobs}{len(outputs)}.{fmt}"
            main(["verify", "--family", "so", "--N-range", "6:10:2", "--jobs", jobs, "--deterministic",
                  "--format", fmt, "--out", name])
            outputs.append((fmt, (tmp_path / name).read_bytes()))
    for fmt in ("csv", "json"):
        blobs = {b for f, b in outputs if f == fmt}
        assert len(blobs) == 1


def test_report_round_trips_17_digits():
    report = verification_matrix([Family.GENERAL], ["power:1"], [6], "published", pairs=[(1, 2)])
    row = report.to_csv().splitlines()[1].split(",")
    assert float(row[5]) == report.entries[0].closed_form
    assert float(row[6]) == report.entries[0].oracle


# -- sweep --------------------------------------------------------------------------------

def test_sweep_triangular(capsys, tmp_path):
    code, vals, _ = run(capsys, "sweep", "--family", "tri", "--scaling", "power:1", "--k", "1", "--m", "2",
                        "--N-range", "20:200:10", "--out", "tri.csv")
    assert code == 0
    assert abs(float(vals["fitted_slope"]) + 1 / 32) <= 1e-9
    assert float(vals["predicted_slope"]) == -1 / 32
    assert vals["verdict"] == "-inf"
    csv = (tmp_path / "tri.csv").read_text().splitlines()
    assert csv[0] == "N,a_km" and len(csv) == 1 + 19
    fit = json.loads((tmp_path / "tri.fit.json").read_text())
    assert fit["window"] == [110, 200]


def test_sweep_skew_prints_runtime_prediction(capsys):
    code, vals, _ = run(capsys, "sweep", "--family", "so", "--scaling", "power:1", "--k", "1", "--m", "2",
                        "--N-range", "20:200:10")
    assert code == 0
    lam1, lam2 = 1.0, 0.5
    assert float(vals["predicted_slope"]) == pytest.approx((2 * lam1**2 - 3 * lam2**2) * (lam2**2 - lam1**2) / 8)


def test_sweep_general_line(capsys):
    code, vals, _ = run(capsys, "sweep", "--family", "gl", "--scaling", "const:1", "--i", "1", "--j", "2",
                        "--N-range", "10:100:10", "--format", "json", "--out", "gl.json")
    assert code == 0
    assert float(vals["fitted_slope"]) == pytest.approx(-0.5, abs=1e-12)
    assert float(vals["predicted_slope"]) == -0.5


# -- counterexample, bcdh, selfadjoint ---------------------------------------------------------

def test_counterexample(capsys):
    code, vals, _ = run(capsys, "counterexample", "--terms", "1000")
    assert code == 0
    assert abs(float(vals["partial_sum"]) - 1000.0) <= 1e-6
    assert vals["verdict"] == "unbounded"


def test_bcdh_commuting_files(capsys, tmp_path):
    alg = TruncatedAlgebra(Family.GENERAL, ScalingSequence.constant(1.0), 4)
    (tmp_path / "x.json").write_text(matrix_to_json(alg.embed(0.3 * alg.xi(1, 2))))
    (tmp_path / "y.json").write_text(matrix_to_json(alg.embed(0.2 * alg.xi(3, 4))))
    code, vals, _ = run(capsys, "bcdh", "--order", "4", "--x", "x.json", "--y", "y.json")
    assert code == 0
    assert float(vals["remainder"]) <= 1e-13


def test_bcdh_rejects_matrices_outside_the_family(capsys, tmp_path):
    (tmp_path / "x.json").write_text(matrix_to_json(np.eye(3)))
    (tmp_path / "y.json").write_text(matrix_to_json(np.eye(3)))
    assert main(["bcdh", "--family", "so", "--order", "2", "--x", "x.json", "--y", "y.json"]) == 2
    (tmp_path / "bad.json").write_text("{")
    assert main(["bcdh", "--order", "2", "--x", "bad.json", "--y", "bad.json"]) == 2


def test_bcdh_order_two_remainder_scaling(capsys):
    _, big, _ = run(capsys, "bcdh", "--order", "2", "--eps", "0.1", "--seed", "3")
    _, small, _ = run(capsys, "bcdh", "--order", "2", "--eps", "0.05", "--seed", "3")
    r1, r2 = float(big["remainder"]), float(small["remainder"])
    assert r1 <= 5e-3
    # third-order remainder: halving the inputs divides it by about eight, at least by four
    assert r1 / r2 >= 4


def test_selfadjoint_dump(capsys, tmp_path):
    code, vals, _ = run(capsys, "selfadjoint", "--family", "tri", "--scaling", "power:1", "--k", "1",
                        "--m", "3", "--N", "6", "--formula", "corrected", "--out", "sa.csv")
    assert code == 0
    assert float(vals["max_offdiagonal"]) <= 1e-10
    assert float(vals["residual"]) <= 1e-12
    lines = (tmp_path / "sa.csv").read_text().splitlines()
    assert lines == ["i,j,coefficient", f"1,3,{vals['diagonal']}"]


# -- config ---------------------------------------------------------------------------------------

def test_n_range_parsing():
    assert parse_n_range("20:200:10")[:3] == (20, 30, 40)
    assert parse_n_range("20:200:10")[-1] == 200
    assert parse_n_range("3:5") == (3, 4, 5)
    assert parse_n_range("6,8") == (6, 8)
    for bad in ("5:1:1", "1:5:0", "a:b", "0", ""):
        with pytest.raises(ConfigError):
            parse_n_range(bad)


def test_config_file_and_precedence(tmp_path, monkeypatch):
    env_cfg = tmp_path / "env.cfg"
    env_cfg.write_text("# defaults\nfamily = so\nscaling = power:1\ntol = 1e-8\njobs = 2\n")
    file_cfg = tmp_path / "run.cfg"
    file_cfg.write_text("family = tri\nN-range = 10:20:5\ndeterministic = yes\n")
    monkeypatch.setenv("HSGEO_CONFIG", str(env_cfg))
    cfg = load_config(str(file_cfg), {"tol": 1e-10})
    assert cfg.family == "tri"
    assert cfg.scaling == "power:1"
    assert cfg.N == (10, 15, 20)
    assert cfg.tol == 1e-10
    assert cfg.jobs == 2 and cfg.deterministic is True


def test_config_rejects_unknown_keys_and_bad_values(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("colour = blue\n")
    with pytest.raises(ConfigError):
        read_config_file(path)
    path.write_text("tol = fast\n")
    with pytest.raises(ConfigError):
        read_config_file(path)
    path.write_text("format = xml\n")
    with pytest.raises(ConfigError):
        load_config(str(path), env={})


def test_cli_reads_env_config(capsys, tmp_path, monkeypatch):
    cfg = tmp_path / "env.cfg"
    cfg.write_text("family = gl\nscaling = const:1\nN = 10\n")
    monkeypatch.setenv("HSGEO_CONFIG", str(cfg))
    code, vals, _ = run(capsys, "ricci", "--i", "1", "--j", "2")
    assert code == 0 and float(vals["closed_form"]) == -5.0
