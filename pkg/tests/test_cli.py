import json
import os
from types import SimpleNamespace

import numpy as np
import pytest

from shumfit import cli


def write_dataset(path, n_per_cat=10, d=2, gap=2.5, seed=0, negative=False):
    rng = np.random.default_rng(seed)
    names = [f"m{k + 1}" for k in range(d)]
    with open(path, "w") as fh:
        fh.write("outcome," + ",".join(names) + "\n")
        for label in range(3):
            shift = -10.0 if negative else gap * label + 5.0
            for _ in range(n_per_cat):
                row = rng.normal(shift, 0.5, size=d)
                fh.write(f"{label}," + ",".join(repr(float(v)) for v in row) + "\n")
    return names


def read(path):
    with open(path, "rb") as fh:
        return fh.read()


def test_fit_end_to_end(tmp_path, capsys):
    csv = tmp_path / "data.csv"
    write_dataset(csv)
    out = tmp_path / "out"
    code = cli.main([
        "fit", "--data", str(csv), "--outcome", "outcome",
        "--markers", "m1,m2", "--methods", "empirical,naive,minmax",
        "--out", str(out),
    ])
    assert code == 0
    captured = capsys.readouterr()
    assert "coefficients (unit norm)" in captured.out
    assert "baseline 1/M! = 0.1667" in captured.out
    assert "minmax: max + (" in captured.out

    payload = json.loads(read(out / "fit_report.json"))
    manifest = json.loads(read(out / "manifest.json"))
    assert payload["manifest_hash"] == manifest["manifest_hash"]
    assert set(payload["reports"]) == {"empirical", "naive", "minmax"}
    emp = payload["reports"]["empirical"]
    assert emp["ehum"] > 0.9  # well-separated design
    assert len(emp["coefficients"]) == 2
    timings = json.loads(read(out / "timings.json"))
    assert timings["command"][0] == "fit"


def test_fit_csv_format_and_hash_line(tmp_path):
    csv = tmp_path / "data.csv"
    write_dataset(csv)
    out = tmp_path / "out"
    code = cli.main([
        "fit", "--data", str(csv), "--outcome", "outcome",
        "--markers", "m1,m2", "--methods", "naive",
        "--format", "csv", "--out", str(out),
    ])
    assert code == 0
    lines = read(out / "fit_report.csv").decode().splitlines()
    manifest = json.loads(read(out / "manifest.json"))
    assert lines[0] == f"# manifest_hash={manifest['manifest_hash']}"
    assert lines[1] == "method,quantity,value"
    naive_rows = [ln for ln in lines if ln.startswith("naive,m1,")]
    assert naive_rows and naive_rows[0].endswith("0.7071")


def test_fit_missing_column_exits_2(tmp_path, capsys):
    csv = tmp_path / "data.csv"
    write_dataset(csv)
    code = cli.main([
        "fit", "--data", str(csv), "--outcome", "outcome",
        "--markers", "m1,nosuch", "--out", str(tmp_path / "o"),
    ])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_fit_unknown_method_exits_2(tmp_path):
    csv = tmp_path / "data.csv"
    write_dataset(csv)
    code = cli.main([
        "fit", "--data", str(csv), "--outcome", "outcome",
        "--markers", "m1,m2", "--methods", "empirical,logit",
    ])
    assert code == 2


def test_fit_bad_lambda_exits_2(tmp_path):
    csv = tmp_path / "data.csv"
    write_dataset(csv)
    code = cli.main([
        "fit", "--data", str(csv), "--outcome", "outcome",
        "--markers", "m1,m2", "--lambda", "wide",
    ])
    assert code == 2


def test_fit_failure_exits_3(tmp_path, capsys):
    csv = tmp_path / "tiny.csv"
    write_dataset(csv, n_per_cat=1)
    code = cli.main([
        "fit", "--data", str(csv), "--outcome", "outcome",
        "--markers", "m1,m2", "--methods", "parametric",
        "--out", str(tmp_path / "o"),
    ])
    assert code == 3
    assert "parametric" in capsys.readouterr().err


def test_fit_lambda_rule_note_on_auto(tmp_path, capsys):
    csv = tmp_path / "data.csv"
    write_dataset(csv)
    code = cli.main([
        "fit", "--data", str(csv), "--outcome", "outcome",
        "--markers", "m1,m2", "--methods", "sshum",
        "--out", str(tmp_path / "o"),
    ])
    assert code == 0
    assert "lambda rule check (sshum)" in capsys.readouterr().err


def test_log_transform_rejects_nonpositive(tmp_path):
    csv = tmp_path / "neg.csv"
    write_dataset(csv, negative=True)
    code = cli.main([
        "hum", "--data", str(csv), "--outcome", "outcome",
        "--markers", "m1,m2", "--weights", "1,1", "--log-transform",
    ])
    assert code == 2


def test_hum_command_output(tmp_path, capsys):
    csv = tmp_path / "data.csv"
    write_dataset(csv)
    out = tmp_path / "out"
    code = cli.main([
        "hum", "--data", str(csv), "--outcome", "outcome",
        "--markers", "m1,m2", "--weights", "1.0,0.5", "--out", str(out),
    ])
    assert code == 0
    text = capsys.readouterr().out
    assert "combined ehum:" in text
    assert "individual marker ehum:" in text
    assert "baseline 1/M!: 0.1667" in text
    report = json.loads(read(out / "hum.json"))
    assert set(report["individual_ehum"]) == {"m1", "m2"}
    assert 0.0 <= report["combined_ehum"] <= 1.0


def test_hum_naive_weights_four_markers(tmp_path, capsys):
    csv = tmp_path / "wide.csv"
    write_dataset(csv, d=4)
    code = cli.main([
        "hum", "--data", str(csv), "--outcome", "outcome",
        "--markers", "m1,m2,m3,m4", "--weights", "naive",
    ])
    assert code == 0
    assert "combined ehum:" in capsys.readouterr().out


def test_hum_weight_count_mismatch_exits_2(tmp_path, capsys):
    csv = tmp_path / "data.csv"
    write_dataset(csv)
    code = cli.main([
        "hum", "--data", str(csv), "--outcome", "outcome",
        "--markers", "m1,m2", "--weights", "1,2,3",
    ])
    assert code == 2
    assert "2 markers" in capsys.readouterr().err


def test_bad_scenario_choice_is_a_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        cli.main(["simulate", "--scenario", "9", "--n", "10,10,10", "--reps", "1"])
    assert exc.value.code == 2


def test_simulate_end_to_end_and_byte_identity(tmp_path, capsys):
    args = ["simulate", "--scenario", "1", "--n", "15,15,15", "--reps", "3",
            "--methods", "naive,minmax,parametric", "--seed", "1"]
    out1, out2, out3 = (tmp_path / name for name in ("a", "b", "c"))
    assert cli.main(args + ["--out", str(out1), "--workers", "1"]) == 0
    assert cli.main(args + ["--out", str(out2), "--workers", "1"]) == 0
    assert cli.main(args + ["--out", str(out3), "--workers", "2"]) == 0
    capsys.readouterr()

    reproducible = ("study_summary.json", "study_ehum.csv",
                    "study_coefficients.csv", "manifest.json")
    for name in reproducible:
        assert read(out1 / name) == read(out2 / name), name
        assert read(out1 / name) == read(out3 / name), name
    assert (out1 / "timings.json").exists()

    summary = json.loads(read(out1 / "study_summary.json"))
    assert set(summary["methods"]) == {"naive", "minmax", "parametric"}
    ehum_lines = read(out1 / "study_ehum.csv").decode().splitlines()
    assert ehum_lines[1] == "method,mean_ehum,sd_ehum,n_failures"


def test_simulate_stdout_table(tmp_path, capsys):
    code = cli.main([
        "simulate", "--scenario", "2", "--n", "12,12,12", "--reps", "2",
        "--methods", "naive", "--out", str(tmp_path / "o"), "--workers", "1",
    ])
    assert code == 0
    text = capsys.readouterr().out
    assert "scenario 2" in text
    assert "naive" in text


def test_simulate_abort_exits_3(tmp_path, capsys):
    code = cli.main([
        "simulate", "--scenario", "1", "--n", "1,1,1", "--reps", "2",
        "--methods", "parametric", "--out", str(tmp_path / "o"), "--workers", "1",
    ])
    assert code == 3


def test_out_dir_env_override(tmp_path, monkeypatch):
    target = tmp_path / "envout"
    monkeypatch.setenv("SHUMFIT_OUT_DIR", str(target))
    args = SimpleNamespace(out=None)
    assert cli._out_dir(args) == str(target)
    assert target.is_dir()
    args = SimpleNamespace(out=str(tmp_path / "explicit"))
    assert cli._out_dir(args).endswith("explicit")


def test_workers_env_override(monkeypatch):
    monkeypatch.setenv("SHUMFIT_WORKERS", "3")
    assert cli._workers(SimpleNamespace(workers=None)) == 3
    assert cli._workers(SimpleNamespace(workers=5)) == 5
    monkeypatch.delenv("SHUMFIT_WORKERS")
    assert cli._workers(SimpleNamespace(workers=None)) >= 1


def test_fit_reruns_are_byte_identical(tmp_path, capsys):
    csv = tmp_path / "data.csv"
    write_dataset(csv)
    args = ["fit", "--data", str(csv), "--outcome", "outcome",
            "--markers", "m1,m2", "--methods", "empirical,sshum",
            "--bootstrap", "4", "--seed", "7"]
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert cli.main(args + ["--out", str(out1)]) == 0
    assert cli.main(args + ["--out", str(out2)]) == 0
    capsys.readouterr()
    for name in ("fit_report.json", "manifest.json"):
        assert read(out1 / name) == read(out2 / name), name
