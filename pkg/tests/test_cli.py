import json

import numpy as np
import pytest

from rydsource.cli import main

from conftest import small_config


@pytest.fixture
def cfg_path(tmp_path):
    path = tmp_path / "small.json"
    small_config().save(path)
    return path


def test_presets_lists_all(capsys):
    assert main(["presets"]) == 0
    out = capsys.readouterr().out
    for name in ("CsRb_70P", "RbRb_A", "RbRb_B"):
        assert name in out
    doc = json.loads(out)
    assert doc["CsRb_70P"]["c3_ghz_um3"] == pytest.approx(11.7)


def test_budget_defaults_match_quoted_numbers(capsys):
    assert main(["budget"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["p_multi"] == pytest.approx(0.0096, abs=1e-4)
    assert doc["delta_omega_sr"] == pytest.approx(0.1514, abs=1e-3)


def test_budget_zero_atoms(capsys):
    assert main(["budget", "--n-atoms", "0"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["p_multi"] == 0.0
    assert doc["collective_estimate_raw"] == 0.0


def test_budget_assertion_miss_exit_code(capsys):
    code = main(["budget", "--assert", "p_multi>=0.5", "--quiet"])
    assert code == 2


def test_lz_validate_exit_and_csv(tmp_path, capsys):
    code = main(
        [
            "lz-validate", "--d-bar-mhz", "1.0", "--points", "4",
            "--out", str(tmp_path), "--quiet",
        ]
    )
    assert code == 0
    lines = (tmp_path / "lz_validate.csv").read_text().splitlines()
    assert lines[0] == "# schema: lz-validate-v1"
    assert lines[1].startswith("alpha_rad_per_us2")
    assert len(lines) == 2 + 4


def test_campaign_end_to_end(tmp_path, cfg_path, capsys):
    out = tmp_path / "run"
    code = main(
        [
            "campaign", "--config", str(cfg_path), "--out", str(out),
            "--threads", "2", "--set", "realizations=4",
            "--assert", "p_s_mean>=0.5", "--quiet",
        ]
    )
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["realizations"] == 4
    assert "realizations=4" in manifest["overrides"]
    stats = json.loads((out / "stats.json").read_text())
    assert stats["realizations"] == 4


def test_campaign_assertion_failure(tmp_path, cfg_path):
    out = tmp_path / "run"
    code = main(
        [
            "campaign", "--config", str(cfg_path), "--out", str(out),
            "--set", "realizations=2", "--assert", "p_s_mean>=1.5", "--quiet",
        ]
    )
    assert code == 2


def test_missing_config_is_error(tmp_path, capsys):
    code = main(["campaign", "--config", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "o")])
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_unknown_stats_key_is_error(tmp_path, cfg_path):
    code = main(
        [
            "prepare", "--config", str(cfg_path), "--out", str(tmp_path / "p"),
            "--set", "realizations=2", "--assert", "no_such_key>=0", "--quiet",
        ]
    )
    assert code == 1


def test_prepare_writes_trajectories(tmp_path, cfg_path):
    out = tmp_path / "prep"
    code = main(
        ["prepare", "--config", str(cfg_path), "--out", str(out),
         "--set", "realizations=3", "--quiet"]
    )
    assert code == 0
    assert (out / "trajectories" / "r00000.csv").exists()
    assert (out / "stats.json").exists()
    assert not (out / "angular").exists()


def test_emit_single_realization(tmp_path, cfg_path):
    out = tmp_path / "emit"
    code = main(
        ["emit", "--config", str(cfg_path), "--out", str(out), "--quiet"]
    )
    assert code == 0
    summary = json.loads((out / "emit_summary.json").read_text())
    assert 0 <= summary["p_s_final"] <= 1
    assert (out / "trajectory.csv").exists()
    assert (out / "sphere_r00000.csv").exists()
    assert (out / "cut_xz_r00000.csv").exists()
    assert (out / "spectrum_r00000.csv").exists()


def test_single_step_outputs(tmp_path, cfg_path):
    out = tmp_path / "ss"
    code = main(
        ["single-step", "--config", str(cfg_path), "--out", str(out), "--quiet"]
    )
    assert code == 0
    doc = json.loads((out / "single_step_summary.json").read_text())
    assert 0 < doc["extraction_prob"] <= 1
    wp = (out / "wavepacket.csv").read_text().splitlines()
    assert wp[0] == "# schema: wavepacket-v1"
    assert (out / "sphere_single_step.csv").exists()


def test_eit_outputs(tmp_path):
    out = tmp_path / "eit"
    code = main(["eit", "--out", str(out), "--quiet"])
    assert code == 0
    doc = json.loads((out / "eit_summary.json").read_text())
    assert doc["transparency_hwhm_rad_per_us"] == pytest.approx(
        doc["transparency_hwhm_analytic"], rel=0.1
    )
    assert (out / "susceptibility.csv").exists()
    assert (out / "polariton.csv").exists()


def test_seed_override_changes_hash(tmp_path, cfg_path):
    outs = []
    for seed in (1, 2):
        out = tmp_path / f"s{seed}"
        assert main(
            ["prepare", "--config", str(cfg_path), "--out", str(out),
             "--seed", str(seed), "--set", "realizations=2", "--quiet"]
        ) == 0
        outs.append(json.loads((out / "manifest.json").read_text()))
    assert outs[0]["config_hash"] != outs[1]["config_hash"]
    assert outs[0]["master_seed"] == 1 and outs[1]["master_seed"] == 2


def test_cli_threads_do_not_change_stats(tmp_path, cfg_path):
    blobs = []
    for threads in (1, 3):
        out = tmp_path / f"t{threads}"
        assert main(
            ["campaign", "--config", str(cfg_path), "--out", str(out),
             "--threads", str(threads), "--quiet"]
        ) == 0
        blobs.append((out / "stats.json").read_bytes())
    assert blobs[0] == blobs[1]
