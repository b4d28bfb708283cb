import numpy as np
import pytest
import yaml

from xlchansim.config import (
    DEPLOYMENT_DEFAULTS,
    NEAR_FIELD_TABLE,
    SNS_TABLE,
    ConfigError,
    build_config,
    load_config,
    load_raw,
    mode_label,
    parse_features,
    scenario_params,
)


def test_default_config_loads():
    cfg = load_config()
    assert cfg.scenario.name == "InH"
    assert cfg.bs.rows == 16 and cfg.bs.cols == 64 and cfg.bs.n_ports == 2048
    assert cfg.ue.n_ports == 8
    assert cfg.wavelength == pytest.approx(299792458 / 7e9)
    assert cfg.bs.spacing_h == pytest.approx(cfg.wavelength / 2)
    assert cfg.bs_height == 3.0 and cfg.ue_height == 1.0
    assert cfg.capacity_normalization == "frobenius"
    assert cfg.features == frozenset()


@pytest.mark.parametrize("name", sorted(DEPLOYMENT_DEFAULTS))
def test_yaml_scenarios_match_tables(name):
    p = load_config(scenario=name, radius_m=200.0).scenario
    assert (p.near_field.n_spec, p.near_field.beta_a, p.near_field.beta_b) == NEAR_FIELD_TABLE[name]
    s = p.sns
    assert (s.pr_mu, s.pr_sigma, s.vp_a, s.vp_b, s.vp_r, s.vp_noise_var) == SNS_TABLE[name]
    assert s.rolloff == 13.0


def test_deployment_defaults_and_overrides():
    cfg = load_config(scenario="UMi", radius_m=100.0)
    assert cfg.bs.reference_point[2] == 10.0
    assert cfg.min_distance_2d == 10.0 and cfg.radius == 100.0
    cfg = load_config(scenario="UMi", radius_m=100.0, min_distance_2d_m=20.0)
    assert cfg.min_distance_2d == 20.0


def test_user_yaml_deep_merge(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text(yaml.safe_dump({
        "simulation": {"n_ue": 7, "features": "nf,sns-ue"},
        "bs_array": {"rows": 2, "cols": 4},
        "scenarios": {"InH": {"sns": {"pr_mu": 0.5}, "pathloss": {"intercept_db": 40.0, "exponent": 2.0}}},
    }))
    raw = load_raw(path)
    assert raw["bs_array"]["polarizations"] == 2
    cfg = build_config(raw)
    assert cfg.n_ue == 7 and cfg.bs.n_ports == 16
    assert cfg.features == frozenset({"near_field", "sns_ue"})
    assert cfg.scenario.sns.pr_mu == 0.5 and cfg.scenario.sns.vp_b == 0.60
    assert cfg.pathloss.path_loss_db(10.0) == pytest.approx(60.0)


def test_parse_features():
    assert parse_features("nf, sns-stoch") == frozenset({"near_field", "sns_stochastic"})
    assert parse_features(["sns_blocker"]) == frozenset({"sns_blocker"})
    assert parse_features("none") == frozenset()
    assert parse_features(None) == frozenset()
    with pytest.raises(ConfigError):
        parse_features("nf,warp")
    with pytest.raises(ConfigError, match="mutually exclusive"):
        parse_features("sns-stoch,sns-block")


def test_mode_label():
    assert mode_label(frozenset()) == "ff"
    assert mode_label(parse_features("sns-ue,nf,sns-stoch")) == "nf+sns-stoch+sns-ue"


@pytest.mark.parametrize(
    "override",
    [
        dict(n_ue=0),
        dict(radius_m=5.0, min_distance_2d_m=5.0),
        dict(carrier_frequency_hz=-1.0),
        dict(sector_half_angle_deg=0.0),
        dict(capacity_normalization="trace"),
        dict(scenario="Moon"),
    ],
)
def test_validation_errors(override):
    with pytest.raises(ConfigError):
        load_config(**override)


def test_unknown_scenario_field(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text(yaml.safe_dump({"scenarios": {"InH": {"warp_factor": 9}}}))
    with pytest.raises(ConfigError):
        load_config(path)


def test_with_features():
    cfg = load_config()
    nf = cfg.with_features("nf")
    assert nf.features == frozenset({"near_field"}) and cfg.features == frozenset()
    with pytest.raises(ConfigError):
        cfg.with_features("sns-stoch,sns-block")


def test_scenario_params_override():
    p = scenario_params("UMa", n_clusters=8, near_field={"n_spec": 3})
    assert p.n_clusters == 8 and p.near_field.n_spec == 3 and p.near_field.beta_a == 1.93
    with pytest.raises(ConfigError):
        scenario_params("XYZ")
    assert np.isfinite(p.delay_spread)
