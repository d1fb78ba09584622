import os

import numpy as np
import pytest

from stosymp.cli import main, parse_args


def run_cli(args):
    return main(args)


def test_parse_basic_order_command():
    args = parse_args(["order", "--example", "ex1", "--t-end", "1",
                       "--paths", "200", "--seed", "7"])
    assert args.command == "order" and args.paths == 200 and args.seed == 7


def test_zero_dt_is_usage_error():
    with pytest.raises(SystemExit) as err:
        parse_args(["run", "--example", "ex1", "--dt", "0", "--t-end", "1"])
    assert err.value.code == 2


def test_unknown_flag_is_usage_error():
    with pytest.raises(SystemExit) as err:
        parse_args(["run", "--example", "ex1", "--dt", "0.1", "--t-end", "1",
                    "--bogus", "3"])
    assert err.value.code == 2


def test_config_file_merging_and_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("gamma = 0.5\nseed = 11  # comment\n")
    args = parse_args(["run", "--config", str(cfg), "--dt", "0.01",
                       "--t-end", "0.1"])
    assert args.gamma == 0.5 and args.seed == 11
    # explicit flag wins over the config value
    args2 = parse_args(["run", "--config", str(cfg), "--dt", "0.01",
                        "--t-end", "0.1", "--gamma", "1.0"])
    assert args2.gamma == 1.0


def test_config_unknown_key_rejected(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("bogus = 3\n")
    with pytest.raises(SystemExit) as err:
        parse_args(["run", "--config", str(cfg), "--dt", "0.01", "--t-end", "0.1"])
    assert err.value.code == 2


def test_run_command_byte_identical(tmp_path):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    base = ["run", "--example", "ex1", "--scheme", "ses-sp-2", "--dt", "0.01",
            "--t-end", "0.05", "--seed", "3", "--gamma", "0.2"]
    assert run_cli(base + ["--out", str(out1)]) == 0
    assert run_cli(base + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_order_command_writes_slopes(tmp_path):
    out = tmp_path / "order.csv"
    code = run_cli(["order", "--example", "ex1", "--schemes", "ses-sp-1",
                    "--t-end", "0.125", "--dt-list", "0.03125,0.015625",
                    "--ref-dt", "0.0078125", "--paths", "4", "--out", str(out)])
    assert code == 0
    header = out.read_text().splitlines()[0].split(",")
    assert "slope_x" in header and "err_x" in header


def test_track_command(tmp_path):
    stem = tmp_path / "trk"
    code = run_cli(["track", "--example", "ex3", "--scheme", "ses-sp-1",
                    "--dt", "0.01", "--t-end", "0.1",
                    "--invariants", "quadratic", "--out", str(stem)])
    assert code == 0
    body = (tmp_path / "trk_quadratic.csv").read_text().splitlines()
    assert body[0] == "t,value"
    assert len(body) == 12
    assert (tmp_path / "trk_defect.csv").exists()


def test_nls_command_charge_column(tmp_path):
    stem = tmp_path / "nls"
    code = run_cli(["nls", "--dt", "0.001", "--t-end", "0.02", "--h", "1",
                    "--recipe", "strang-ab", "--tol", "1e-13",
                    "--out", str(stem)])
    assert code == 0
    lines = (tmp_path / "nls_summary.csv").read_text().splitlines()
    assert lines[0] == "t,charge,defect,newton_iters"
    charges = np.array([float(l.split(",")[1]) for l in lines[1:]])
    assert np.max(np.abs(charges - charges[0])) <= 1e-8 * charges[0]


def test_nls_bad_spacing_exit_2(tmp_path, capsys):
    code = run_cli(["nls", "--dt", "0.001", "--t-end", "0.01", "--h", "0.7"])
    assert code == 2


def test_check_command():
    assert run_cli(["check", "--example", "ex1"]) == 0
    assert run_cli(["check", "--example", "ex3"]) == 0


def test_csv_has_17_significant_digits(tmp_path):
    out = tmp_path / "r.csv"
    run_cli(["run", "--example", "ex1", "--dt", "0.01", "--t-end", "0.02",
             "--seed", "0", "--out", str(out)])
    row = out.read_text().splitlines()[2].split(",")
    # a generic double prints at full precision (about 17 digits)
    assert any(len(cell.replace("-", "").replace(".", "").lstrip("0")) >= 15
               for cell in row[1:])
