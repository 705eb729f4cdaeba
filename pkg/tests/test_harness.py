import json

import numpy as np
import pytest

import rydsource.harness as harness
from rydsource import CampaignError, overlap_sampling, rerun_realization, run_campaign
from rydsource.harness import flatten_stats, write_campaign
from rydsource.outputs import dumps_fixed

from conftest import small_config


@pytest.fixture(scope="module")
def tiny_result():
    return run_campaign(small_config(), stages="full", threads=2, flagged=2,
                        inclined_rad=0.04 * np.pi)


def test_campaign_basic_stats(tiny_result):
    stats = tiny_result.stats
    assert stats["realizations"] == 6 and stats["failed"] == 0
    for key in ("p_s", "d_bar", "eta", "cone_fraction", "overlap"):
        assert key in stats
    s = stats["p_s"]
    assert s["min"] <= s["mean"] <= s["max"]
    assert 0 <= s["mean"] <= 1


def test_single_realization_statistics_markers():
    cfg = small_config(realizations=1)
    result = run_campaign(cfg, stages="prepare", threads=1)
    assert result.stats["p_s"]["std"] == 0.0
    assert result.stats["p_s"]["n"] == 1


def test_thread_count_invariance():
    blobs = []
    for threads in (1, 2, 4):
        result = run_campaign(small_config(), stages="full", threads=threads)
        blobs.append(dumps_fixed(result.stats))
    assert blobs[0] == blobs[1] == blobs[2]


def test_rerun_single_realization_matches(tiny_result):
    rec = rerun_realization(
        small_config(), 3, stages="full", inclined_rad=0.04 * np.pi
    )
    ref = tiny_result.records[3]
    assert rec.p_s_final == ref.p_s_final
    assert rec.d_bar == ref.d_bar
    assert rec.cone_conditional == ref.cone_conditional
    assert rec.cone_conditional_inclined == ref.cone_conditional_inclined


def test_aggregate_is_permutation_invariant(tiny_result):
    cfg = small_config()
    ctx = harness._build_context(cfg, "full", None, 0.07 * np.pi, 0, True)
    fwd, _ = harness.aggregate(list(tiny_result.records), ctx, cfg)
    rev, _ = harness.aggregate(list(tiny_result.records)[::-1], ctx, cfg)
    assert dumps_fixed(fwd) == dumps_fixed(rev)


def test_failure_policy(monkeypatch):
    real = harness._run_one

    def flaky(cfg, index, ctx):
        if index == 2:
            raise RuntimeError("synthetic failure")
        return real(cfg, index, ctx)

    monkeypatch.setattr(harness, "_run_one", flaky)
    with pytest.raises(CampaignError, match="failed"):
        run_campaign(small_config(), stages="couple", threads=1)


def test_overlap_sampling_contract(tiny_result):
    summary = overlap_sampling(tiny_result, n_pairs=1000)
    assert summary["n_pairs"] == 15  # C(6,2), sampling clamps to available pairs
    assert 0 <= summary["min"] <= summary["mean"] <= 1


def test_overlap_needs_two_states():
    result = run_campaign(small_config(realizations=1), stages="full", threads=1)
    with pytest.raises(CampaignError):
        overlap_sampling(result)


def test_flagged_cap():
    result = run_campaign(
        small_config(realizations=3), stages="prepare", threads=1, flagged=99
    )
    kept = [r for r in result.records if r.trajectory is not None]
    assert len(kept) == 3  # capped by realizations; never more than 16


def test_flatten_stats_keys(tiny_result):
    flat = flatten_stats(tiny_result.stats)
    assert "p_s_mean" in flat
    assert "cone_fraction_mean" in flat
    assert "overlap_min" in flat
    assert all(isinstance(v, float) for v in flat.values())


def test_write_campaign_layout(tmp_path, tiny_result):
    write_campaign(tiny_result, tmp_path)
    assert (tmp_path / "manifest.json").exists()
    assert (tmp_path / "stats.json").exists()
    assert (tmp_path / "spinwave_hist.csv").exists()
    assert (tmp_path / "trajectories" / "r00000.csv").exists()
    assert (tmp_path / "angular" / "cut_xz_r00000.csv").exists()
    assert (tmp_path / "angular" / "mean_sphere.csv").exists()
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["schema"] == "manifest-v1"
    assert manifest["config_hash"] == tiny_result.manifest.config_hash
    stats = json.loads((tmp_path / "stats.json").read_text())
    assert stats["realizations"] == 6
    # schema headers are versioned
    first = (tmp_path / "trajectories" / "r00000.csv").read_text().splitlines()[:2]
    assert first[0] == "# schema: trajectory-v1"
    assert first[1] == "t_us,P_G,P_S,norm_lost"


def test_stats_json_numbers_have_fixed_precision(tmp_path, tiny_result):
    write_campaign(tiny_result, tmp_path)
    text = (tmp_path / "stats.json").read_text()
    line = next(ln for ln in text.splitlines() if '"mean"' in ln)
    mantissa = line.split(":")[1].strip().rstrip(",")
    assert "e" in mantissa and len(mantissa.split("e")[0].split(".")[1]) == 16


def test_manifest_records_overrides():
    result = run_campaign(
        small_config(), stages="couple", threads=1,
        overrides=["gamma_sg_per_us=0"],
    )
    assert result.manifest.overrides == ["gamma_sg_per_us=0"]
    assert result.manifest.config["n_atoms"] == 30


def test_resolve_threads_env_fallback(monkeypatch):
    monkeypatch.setenv("RYD_THREADS", "5")
    assert harness.resolve_threads(None) == 5
    assert harness.resolve_threads(2) == 2
    monkeypatch.delenv("RYD_THREADS")
    assert harness.resolve_threads(None) >= 1


def test_all_csv_schemas_are_versioned(tmp_path, tiny_result):
    write_campaign(tiny_result, tmp_path)
    expected = {
        "spinwave_hist.csv": "# schema: spinwave-hist-v1",
        "trajectories/r00000.csv": "# schema: trajectory-v1",
        "angular/cut_xz_r00000.csv": "# schema: angular-cut-v1",
        "angular/cut_yz_r00000.csv": "# schema: angular-cut-v1",
        "angular/mean_sphere.csv": "# schema: angular-sphere-v1",
        "angular/spectrum.csv": "# schema: spectrum-v1",
    }
    for rel, header in expected.items():
        first = (tmp_path / rel).read_text().splitlines()[0]
        assert first == header, rel
