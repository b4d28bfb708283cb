import copy

import numpy as np
import pytest

from xlchansim.blocker import Blocker
from xlchansim.config import build_config, load_raw
from xlchansim.geometry import wrap_angle
from xlchansim.simulation import (
    STREAMS,
    blocker_alpha,
    metrics_csv,
    place_ue,
    run_drop,
    run_drop_loop,
    simulate,
    stream,
    worker_count,
)
from xlchansim.synthesis import DropConfig, assemble_cir


def small_config(features=(), scenario="InH", **sim):
    raw = load_raw()
    raw["bs_array"].update(rows=2, cols=8)
    raw["simulation"].update(scenario=scenario, n_ue=6, seed=11, features=list(features), **sim)
    return build_config(raw)


def test_streams_are_distinct():
    assert len(set(STREAMS.values())) == len(STREAMS)
    a = stream(1, 0, "delays").random(4)
    b = stream(1, 0, "powers").random(4)
    c = stream(1, 1, "delays").random(4)
    assert not np.allclose(a, b) and not np.allclose(a, c)
    np.testing.assert_array_equal(a, stream(1, 0, "delays").random(4))


def test_placement_within_annulus():
    cfg = small_config(scenario="UMi", radius_m=100.0)
    rng = np.random.default_rng(0)
    pts = np.array([place_ue(cfg, rng) for _ in range(2000)])
    r = np.hypot(pts[:, 0], pts[:, 1])
    assert r.min() >= 10.0 and r.max() <= 100.0
    assert np.all(pts[:, 2] == 1.5)
    # area-uniform: P(r < r_mid) with r_mid^2 halfway between the squared bounds
    r_mid = np.sqrt((10.0**2 + 100.0**2) / 2)
    assert np.mean(r < r_mid) == pytest.approx(0.5, abs=0.04)


def test_feature_toggles_keep_other_draws():
    ff = run_drop(small_config(), 3)
    full = run_drop(small_config(features=("nf", "sns-stoch", "sns-ue")), 3)
    np.testing.assert_array_equal(ff.ue_position, full.ue_position)
    np.testing.assert_array_equal(ff.clusters.abs_delays, full.clusters.abs_delays)
    np.testing.assert_array_equal(ff.clusters.powers, full.clusters.powers)
    np.testing.assert_array_equal(ff.clusters.angles.aoa, full.clusters.angles.aoa)
    np.testing.assert_array_equal(ff.clusters.phases, full.clusters.phases)
    assert ff.info["sf_db"] == full.info["sf_db"]
    assert full.sample.mode == "nf+sns-stoch+sns-ue"
    assert "usage" in full.info and 0.0 <= full.info["pr_sns"] <= 1.0


def test_blocker_outside_shadow_is_bit_exact():
    """A screen that no element-receiver segment crosses leaves the channel untouched."""
    cfg = small_config(features=("sns-block",))
    cfg.blockers = (Blocker(kind="billboard", center=(-20.0, 0.0, 3.0), w=1.0, h=1.0),)
    res = run_drop(small_config(), 2)
    c = copy.deepcopy(res.clusters)
    # keep every departure ray in the front half-space, away from the screen behind the array
    c.angles.aod = np.clip(wrap_angle(c.angles.aod), -np.pi / 3, np.pi / 3)
    c.angles.zod = np.clip(c.angles.zod, np.pi / 3, 2 * np.pi / 3)
    drop = DropConfig(bs_position=cfg.bs.reference_point, ue_position=np.array([5.0, 1.0, 1.0]),
                      wavelength=cfg.wavelength, k_factor=2.0)
    alpha, alpha_los = blocker_alpha(cfg, drop, c)
    assert np.all(alpha == 1.0) and np.all(alpha_los == 1.0)
    plain = assemble_cir(drop, c, cfg.bs, cfg.ue)
    blocked = assemble_cir(drop, c, cfg.bs, cfg.ue, alpha_nlos=alpha, alpha_los=alpha_los)
    assert plain.coefficients.tobytes() == blocked.coefficients.tobytes()


def test_blocker_in_los_attenuates():
    cfg = small_config(features=("sns-block",), radius_m=6.0)
    res = run_drop(small_config(radius_m=6.0), 0)
    ue = res.ue_position
    mid = 0.5 * (cfg.bs.reference_point + ue)
    cfg.blockers = (Blocker(kind="billboard", center=mid, w=20.0, h=20.0),)
    blocked = run_drop(cfg, 0)
    assert np.sum(np.abs(blocked.channel.coefficients[0]) ** 2) < 0.1 * np.sum(np.abs(res.channel.coefficients[0]) ** 2)


def test_determinism_and_worker_independence(tmp_path):
    cfg = small_config(features=("nf", "sns-stoch"))
    serial, _ = simulate(cfg, workers=1)
    parallel, _ = simulate(cfg, workers=2)
    assert metrics_csv(serial) == metrics_csv(parallel)
    p1 = run_drop_loop(cfg, tmp_path / "a", workers=1)
    p2 = run_drop_loop(cfg, tmp_path / "b", workers=1)
    for key in ("metrics", "capacity_cdf", "coupling_loss_cdf"):
        assert p1[key].read_bytes() == p2[key].read_bytes()


def test_run_drop_loop_outputs(tmp_path):
    cfg = small_config(export_pdp=True)
    paths = run_drop_loop(cfg, tmp_path, workers=1)
    lines = paths["metrics"].read_text().splitlines()
    assert lines[0] == "ue_id,mode,capacity_bpshz,coupling_loss_db"
    assert len(lines) == 1 + cfg.n_ue
    cdf = np.loadtxt(paths["capacity_cdf"], delimiter=",", skiprows=1)
    assert np.all(np.diff(cdf[:, 0]) >= 0) and cdf[-1, 1] == pytest.approx(1 - 0.5 / cfg.n_ue)
    assert len(list(paths["pdp"].glob("ue*.csv"))) == cfg.n_ue


def test_worker_count(monkeypatch):
    monkeypatch.setenv("XLCHANSIM_THREADS", "3")
    assert worker_count(10) == 3 and worker_count(2) == 2
    monkeypatch.setenv("XLCHANSIM_THREADS", "0")
    with pytest.raises(ValueError):
        worker_count(4)


def test_drop_metrics_finite():
    for feats in ((), ("nf",), ("sns-stoch",), ("sns-ue",)):
        res = run_drop(small_config(features=feats), 1)
        assert np.isfinite(res.sample.capacity) and res.sample.capacity > 0
        assert np.isfinite(res.sample.coupling_loss_db)
