import json

import numpy as np
import pytest

from conftest import campaign_fingerprint
from pnpcs.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_bounds_single_value_matches_table(capsys):
    code, out, _ = run_cli(capsys, "bounds", "--ensemble", "rademacher", "--beta", "0.1", "--r", "50")
    assert code == 0
    assert out.strip() == "3113"


def test_bounds_table_csv(capsys):
    code, out, _ = run_cli(
        capsys, "bounds", "--ensemble", "rademacher", "--beta", "0.1",
        "--r", "50,100", "--kind", "robust", "--epsilon", "0.8",
    )
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "ensemble,r,beta,epsilon,m_bound"
    assert lines[1].endswith(",4742")
    assert lines[2].endswith(",9358")


def test_bounds_robust_without_epsilon_is_config_error(capsys):
    code, _, err = run_cli(
        capsys, "bounds", "--ensemble", "gaussian", "--beta", "0.1", "--r", "5", "--kind", "robust"
    )
    assert code == 2
    assert err.startswith("error: config:")


def test_bounds_thresholds(capsys):
    code, out, _ = run_cli(
        capsys, "bounds", "--ensemble", "gaussian", "--beta", "0.5", "--r", "10",
        "--thresholds-n", "1500", "--beta1", "0.9",
    )
    assert code == 0
    values = dict(line.split("=") for line in out.strip().splitlines())
    assert 0 < float(values["beta0"]) < 1
    assert 0 < float(values["epsilon0"]) < float(values["epsilon1"]) < 1


def test_bounds_thresholds_infeasible_exit_code(capsys):
    code, _, err = run_cli(
        capsys, "bounds", "--ensemble", "gaussian", "--beta", "0.5", "--r", "10",
        "--thresholds-n", "100",
    )
    assert code == 3
    assert "no thresholds" in err


def test_unknown_flag_rejected():
    with pytest.raises(SystemExit) as exit_info:
        main(["bounds", "--ensemble", "gaussian", "--beta", "0.5", "--r", "5", "--bogus"])
    assert exit_info.value.code == 2


def test_help_exits_zero(capsys):
    with pytest.raises(SystemExit) as exit_info:
        main(["bounds", "--help"])
    assert exit_info.value.code == 0
    assert "--ensemble" in capsys.readouterr().out


def test_denoiser_build_save_and_reload(tmp_path, capsys):
    out_file = tmp_path / "d.npz"
    code, out, _ = run_cli(
        capsys, "denoiser", "--synthetic", "scanline", "--n", "48",
        "--patch-radius", "1", "--rank", "8", "--out", str(out_file),
    )
    assert code == 0
    assert "rank=8" in out
    assert out_file.exists()
    assert (tmp_path / "d.npz.manifest.txt").exists()
    from pnpcs.denoiser import load_denoiser

    loaded = load_denoiser(out_file)
    assert loaded.rank == 8 and loaded.n == 48


def test_solve_exact_instance_json(tmp_path, capsys):
    out_file = tmp_path / "sol.json"
    code, out, _ = run_cli(
        capsys, "solve", "--synthetic", "scanline", "--n", "48", "--rank", "6",
        "--patch-radius", "1", "--m", "12", "--seed", "3", "--out", str(out_file),
    )
    assert code == 0
    record = json.loads(out_file.read_text())
    assert record["status"] == "optimal"
    assert record["relative_error"] < 1e-8
    assert json.loads(out)["status"] == "optimal"


def test_solve_infeasible_exit_code(tmp_path, capsys):
    # off-range truth with m > rank: measurements leave the range image
    code, _, err = run_cli(
        capsys, "solve", "--synthetic", "scanline", "--n", "48", "--rank", "4",
        "--patch-radius", "1", "--m", "20", "--seed", "3", "--off-range",
    )
    assert code == 3
    assert "infeasible" in err


def test_campaign_cli_and_manifest_rerun(tmp_path, capsys):
    config = tmp_path / "phase.cfg"
    config.write_text(
        "kind=phase_gaussian\nn=32\nr_values=6\nm_values=4,6,8\ntrials=5\n"
        "master_seed=5\npatch_radius=1\n"
    )
    out_a = tmp_path / "a"
    code, out, _ = run_cli(capsys, "campaign", "--config", str(config), "--out", str(out_a))
    assert code == 0
    assert "probability by m" in out
    out_b = tmp_path / "b"
    code, _, _ = run_cli(capsys, "campaign", "--config", str(config), "--out", str(out_b))
    assert code == 0
    assert (out_a / "summary.csv").read_bytes() == (out_b / "summary.csv").read_bytes()

    # rerun from the emitted manifest reproduces everything byte-for-byte
    out_c = tmp_path / "c"
    code, _, _ = run_cli(
        capsys, "campaign", "--config", str(out_a / "manifest.txt"), "--out", str(out_c)
    )
    assert code == 0
    assert campaign_fingerprint(out_a) == campaign_fingerprint(out_c)


def test_campaign_set_overrides(tmp_path, capsys):
    config = tmp_path / "phase.cfg"
    config.write_text(
        "kind=phase_gaussian\nn=32\nr_values=6\nm_values=6\ntrials=4\npatch_radius=1\n"
    )
    code, _, _ = run_cli(
        capsys, "campaign", "--config", str(config), "--out", str(tmp_path / "o"),
        "--set", "trials=2",
    )
    assert code == 0
    trials = (tmp_path / "o" / "trials.csv").read_text().strip().splitlines()
    assert len(trials) == 1 + 2


def test_campaign_bad_config_exit_code(tmp_path, capsys):
    config = tmp_path / "bad.cfg"
    config.write_text("kind=phase_gaussian\nn=16\nm_values=99\n")
    code, _, err = run_cli(capsys, "campaign", "--config", str(config), "--out", str(tmp_path / "x"))
    assert code == 2
    assert err.startswith("error: config:")


def test_concentration_cli(tmp_path, capsys):
    code, out, _ = run_cli(
        capsys, "concentration", "--draws", "200", "--seed", "7", "--out", str(tmp_path)
    )
    assert code == 0
    assert "scalar gaussian" in out
    assert (tmp_path / "concentration.csv").exists()


def test_ecg_cli_smoke(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "ecg", "--out", str(tmp_path), "--smoke")
    assert code == 0
    values = dict(line.split("=") for line in out.strip().splitlines())
    assert float(values["snr_pnp_db"]) >= 120.0
