from decimal import Decimal, getcontext

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats
from scipy.constants import speed_of_light

from xlchansim.config import NEAR_FIELD_TABLE, scenario_params
from xlchansim.geometry import ArrayGeometry, angles_from_vector, element_positions, spherical_unit_vector
from xlchansim.nearfield import (
    NearFieldParams,
    assign_specular_clusters,
    element_angles,
    element_direction_vector,
    farfield_phase,
    generate_source_distances,
    los_pairwise,
    nearfield_phase_delta,
    sample_scaling_factor_bs,
    scaling_factor_ue,
    source_distances,
)

from conftest import LAMBDA
from test_smallscale import make_clusters
from xlchansim.smallscale import split_subclusters


def test_specular_assignment():
    np.testing.assert_array_equal(assign_specular_clusters([0.5, 0.3, 0.2], 2), [0, 1])
    assert assign_specular_clusters([0.5, 0.3, 0.2], 0).size == 0
    np.testing.assert_array_equal(assign_specular_clusters([0.2, 0.4, 0.4, 0.1], 2), [1, 2])
    with pytest.raises(ValueError):
        assign_specular_clusters([0.5, 0.5], 3)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=30), st.integers(0, 30))
def test_specular_matches_sort(powers, n_spec):
    n_spec = min(n_spec, len(powers))
    got = assign_specular_clusters(powers, n_spec)
    ranked = sorted(range(len(powers)), key=lambda i: (-powers[i], i))
    assert list(got) == sorted(ranked[:n_spec])


def test_specular_scaling_is_one(rng):
    s = sample_scaling_factor_bs([True, False, True], NearFieldParams(), rng)
    assert s[0] == 1.0 and s[2] == 1.0
    assert 0 < s[1] < 1


def test_umi_beta_mean():
    a, b = NEAR_FIELD_TABLE["UMi"][1:]
    s = sample_scaling_factor_bs(np.zeros(100_000, bool), NearFieldParams(2, a, b), np.random.default_rng(0))
    assert a / (a + b) == pytest.approx(0.51864, abs=1e-5)
    assert s.mean() == pytest.approx(0.51864, abs=0.005)
    assert np.all((s > 0) & (s < 1))


@pytest.mark.parametrize("name", ["UMa", "UMi", "InH", "InF"])
def test_beta_ks(name):
    _, a, b = NEAR_FIELD_TABLE[name]
    s = sample_scaling_factor_bs(np.zeros(100_000, bool), NearFieldParams(2, a, b), np.random.default_rng(11))
    assert stats.kstest(s, stats.beta(a, b).cdf).pvalue > 0.01


def test_ue_scaling():
    np.testing.assert_allclose(scaling_factor_ue([0.3, 0.4], [False, True]), [0.7, 1.0])


def test_source_distance_examples():
    assert source_distances(1.0, 50.0, 0.0) == 50.0
    assert source_distances(1.0, 100.0, 100e-9) == pytest.approx(129.9792458, rel=1e-12)
    assert source_distances(0.5, 100.0, 100e-9) == pytest.approx(129.9792458 / 2, rel=1e-12)
    assert source_distances(1.0, 100.0, 0.0, 100e-9) == pytest.approx(129.9792458, rel=1e-12)
    with pytest.raises(ValueError):
        source_distances(1.0, 0.0, 0.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["UMa", "UMi", "InH", "InF"]), st.booleans())
def test_source_distance_invariants(seed, name, los):
    params = scenario_params(name)
    rng = np.random.default_rng(seed)
    c = split_subclusters(make_clusters(params, rng, los=los, d_3d=25.0), params)
    nf = generate_source_distances(c, 25.0, params.near_field, rng)
    spec = nf.specular
    assert spec.sum() == params.near_field.n_spec
    np.testing.assert_array_equal(nf.s_bs[spec], 1.0)
    np.testing.assert_array_equal(nf.s_ue[spec], 1.0)
    assert np.all(nf.s_bs[~spec] + nf.s_ue[~spec] == 1.0)
    # Specular clusters see the full path on both sides.
    np.testing.assert_array_equal(nf.d1[spec], nf.path_length[spec])
    np.testing.assert_array_equal(nf.d2[spec], nf.path_length[spec])
    np.testing.assert_allclose((nf.d1 + nf.d2)[~spec], nf.path_length[~spec], rtol=1e-15)
    assert np.all(nf.d1 > 0) and np.all(nf.d2 > 0)
    assert np.all(nf.d1 <= nf.path_length) and np.all(nf.d2 <= nf.path_length)
    # Ray path length uses the sub-cluster delay of each ray.
    expected = 25.0 + speed_of_light * (c.ray_delays + c.excess_delay)
    np.testing.assert_allclose(nf.path_length, expected, rtol=1e-15)


def test_direction_vector_examples():
    r = np.array([1.0, 0.0, 0.0])
    np.testing.assert_array_equal(element_direction_vector(3.0, r, np.zeros(3)), [3.0, 0.0, 0.0])
    v = element_direction_vector(1000 * LAMBDA, r, [0.0, 0.5 * LAMBDA, 0.0])
    np.testing.assert_allclose(v, [1000 * LAMBDA, -0.5 * LAMBDA, 0.0], rtol=1e-15)
    with pytest.raises(ValueError, match="source inside array"):
        element_direction_vector(1.0, r, r)


def test_element_aod_spread_matches_geometry():
    lam = 0.0176
    d = 2.0
    geom = ArrayGeometry(rows=1, cols=101, spacing_h=lam, centered=True)
    off = element_positions(geom)
    r = spherical_unit_vector(np.pi / 2, 0.4)
    src = d * r
    _, aod = element_angles(d, r, off)
    brute = np.arctan2(src[1] - off[:, 1], src[0] - off[:, 0])
    np.testing.assert_allclose(aod, brute, atol=1e-12)


def _decimal_phase(d, y, lam):
    getcontext().prec = 50
    d, y, lam = Decimal(d), Decimal(y), Decimal(lam)
    diff = d - (d * d + y * y).sqrt()
    return float(2 * Decimal("3.14159265358979323846264338327950288") * diff / lam)


def test_phase_example():
    got = nearfield_phase_delta(1000 * LAMBDA, [1.0, 0.0, 0.0], [0.0, 0.5 * LAMBDA, 0.0], LAMBDA)
    assert got == pytest.approx(-7.853981e-4, rel=1e-6)
    assert got == pytest.approx(_decimal_phase(1000 * LAMBDA, 0.5 * LAMBDA, LAMBDA), rel=1e-10)
    assert nearfield_phase_delta(5.0, [0.0, 1.0, 0.0], np.zeros(3), LAMBDA) == 0.0


@pytest.mark.parametrize("d_over_lam", [1e2, 1e4, 1e6, 1e9])
def test_phase_stable_against_decimal(d_over_lam):
    y = 17.3 * LAMBDA
    got = nearfield_phase_delta(d_over_lam * LAMBDA, [1.0, 0.0, 0.0], [0.0, y, 0.0], LAMBDA)
    assert got == pytest.approx(_decimal_phase(d_over_lam * LAMBDA, y, LAMBDA), rel=1e-9)


@settings(max_examples=200, deadline=None)
@given(
    st.floats(1e-3, np.pi - 1e-3), st.floats(-np.pi, np.pi),
    st.tuples(*[st.floats(-100, 100)] * 3), st.floats(1e2, 1e8),
)
def test_farfield_consistency_bound(z, a, off_lam, d_lam):
    r = spherical_unit_vector(z, a)
    off = np.array(off_lam) * LAMBDA
    if np.linalg.norm(off) >= 0.5 * d_lam * LAMBDA:
        return
    d = d_lam * LAMBDA
    near = nearfield_phase_delta(d, r, off, LAMBDA)
    far = farfield_phase(r, off, LAMBDA)
    bound = 2 * np.pi * np.dot(off, off) / (2 * d * LAMBDA)
    assert abs(near - far) <= bound + 1e-9


def test_bound_value_at_million_wavelengths():
    bound = 2 * np.pi * (100 * LAMBDA) ** 2 / (2 * 1e6 * LAMBDA * LAMBDA)
    assert bound == pytest.approx(0.0314159, rel=1e-5)


@pytest.mark.parametrize("d_lam, limit", [(1e6, 1e-3), (1e7, 1e-4), (1e8, 1e-5)])
def test_full_panel_far_field_convergence(d_lam, limit):
    """Worst element error of a centred 64 x 16 half-wavelength panel scales as 1/d."""
    panel = ArrayGeometry(rows=16, cols=64, spacing_h=LAMBDA / 2, spacing_v=LAMBDA / 2, centered=True)
    off = element_positions(panel)
    rng = np.random.default_rng(21)
    r = spherical_unit_vector(rng.uniform(0, np.pi, 200), rng.uniform(-np.pi, np.pi, 200))
    d = d_lam * LAMBDA
    delta = nearfield_phase_delta(d, r[:, None, :], off[None], LAMBDA) - farfield_phase(r[:, None, :], off[None], LAMBDA)
    err = np.abs(np.exp(1j * delta) - 1).max()
    bound = np.pi * np.max(np.sum(off**2, axis=-1)) / (d * LAMBDA)
    assert err <= bound * (1 + 1e-6)
    assert err <= limit


def test_element_angles_converge(rng):
    off = rng.uniform(-1, 1, (50, 3))
    r = spherical_unit_vector(1.1, 0.7)
    z0, a0 = angles_from_vector(r)
    for d in (1e2, 1e4, 1e6):
        z, a = element_angles(d, r, off)
        limit = np.arctan(np.linalg.norm(off, axis=-1) / d)
        assert np.all(np.abs(z - z0) <= limit + 1e-12)
        assert np.all(np.abs(a - a0) * np.sin(z0) <= limit * 1.01 + 1e-12)


def test_los_pairwise_examples():
    dist, zod, aod, zoa, aoa = los_pairwise([0.0, 0.0, 0.0], [10.0, 0.0, 0.0])
    assert dist == 10.0
    assert zod == pytest.approx(np.pi / 2) and aod == 0.0
    assert zoa == pytest.approx(np.pi / 2) and aoa == pytest.approx(np.pi)
    d2, *_ = los_pairwise([10.0, 0.0, 0.0], [0.0, 0.0, 0.0])
    assert d2 == dist
    with pytest.raises(ValueError):
        los_pairwise([1.0, 1.0, 1.0], [1.0, 1.0, 1.0])


def test_los_pairwise_matches_brute_force():
    geom = ArrayGeometry(rows=8, cols=8, spacing_h=LAMBDA / 2, spacing_v=LAMBDA / 2, centered=True)
    tx = np.array([0.0, 0.0, 3.0]) + element_positions(geom)
    rx = np.array([2.0, 0.5, 1.0])
    dist, *_ = los_pairwise(tx, rx)
    d3d = np.linalg.norm(rx - np.array([0.0, 0.0, 3.0]))
    brute = np.array([np.sqrt(sum((rx[k] - t[k]) ** 2 for k in range(3))) for t in tx])
    np.testing.assert_allclose(2 * np.pi * (dist - d3d) / LAMBDA, 2 * np.pi * (brute - d3d) / LAMBDA, atol=1e-9)


def test_params_validation():
    with pytest.raises(ValueError):
        NearFieldParams(n_spec=-1)
    with pytest.raises(ValueError):
        NearFieldParams(beta_a=0.0)
