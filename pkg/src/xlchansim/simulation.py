"""Monte Carlo drop loop.

Every drop runs the extended generation procedure in order: UE placement,
large-scale parameters, delays, powers, angles, XPR and phases, absolute
delays, sub-cluster split, spherical-wave sources, BS-side SNS, UE-side SNS,
coefficient synthesis and metrics. Each concern draws from its own RNG
stream derived from ``(seed, ue_index, stream)``, so toggling a feature never
shifts the draws of another.
"""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .blocker import scene_loss_db
from .config import SimulationConfig, mode_label
from .geometry import element_positions, spherical_unit_vector
from .metrics import MetricSample, aggregate_cdf, capacity, coupling_loss, normalize_channel
from .nearfield import generate_source_distances
from .smallscale import (
    ClusterSet,
    absolute_delays,
    generate_angles,
    generate_delays,
    generate_powers,
    generate_xpr_phases,
    split_subclusters,
)
from .sns_stochastic import generate_stochastic_sns
from .sns_ue import sample_usage_scenario, ue_attenuation_vector
from .synthesis import ChannelRealization, DropConfig, assemble_cir

STREAMS = {
    "placement": 1,
    "lsp": 2,
    "delays": 3,
    "powers": 4,
    "angles": 5,
    "phases": 6,
    "excess": 7,
    "nf_scaling": 8,
    "sns_class": 9,
    "sns_vr": 10,
    "ue_usage": 11,
}

# Receiver distance for blocker evaluation of far-field departure rays.
FAR_POINT_DISTANCE = 1e4


def stream(seed: int, ue_index: int, name: str) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(ue_index), STREAMS[name]])


@dataclass
class DropResult:
    ue_id: int
    ue_position: np.ndarray
    clusters: ClusterSet
    channel: ChannelRealization
    sample: MetricSample
    info: dict = field(default_factory=dict)


def place_ue(config: SimulationConfig, rng: np.random.Generator) -> np.ndarray:
    """Uniform position in the disc (or sector) between the 2-D distance floor and the radius."""
    r2 = rng.uniform(config.min_distance_2d**2, config.radius**2)
    phi = rng.uniform(-config.sector_half_angle, config.sector_half_angle)
    r = np.sqrt(r2)
    return np.array([r * np.cos(phi), r * np.sin(phi), config.ue_height])


def generate_clusters(config: SimulationConfig, drop: DropConfig, ue_index: int, k_factor_db: float) -> ClusterSet:
    """Small-scale parameters of one drop, sub-clusters included."""
    params = config.scenario
    seed = config.seed
    delays = generate_delays(params, stream(seed, ue_index, "delays"))
    powers = generate_powers(delays, params, stream(seed, ue_index, "powers"))
    angles = generate_angles(
        powers, params, stream(seed, ue_index, "angles"),
        los=drop.los, k_factor_db=k_factor_db, los_angles=drop.los_angles(),
    )
    xpr, phases = generate_xpr_phases(params, stream(seed, ue_index, "phases"))
    abs_delays, excess = absolute_delays(delays, drop.d_3d, drop.los, params, stream(seed, ue_index, "excess"))
    clusters = ClusterSet(
        delays=delays, powers=powers, angles=angles, xpr=xpr, phases=phases,
        abs_delays=abs_delays, excess_delay=excess, los=drop.los, k_factor_db=k_factor_db,
    )
    return split_subclusters(clusters, params)


def blocker_alpha(config: SimulationConfig, drop: DropConfig, clusters: ClusterSet, nf=None):
    """Per-ray, per-BS-element attenuation (N, M, P) and LOS attenuation (P,) from the scene."""
    tx = drop.bs_position + element_positions(config.bs)
    lam = drop.wavelength
    r_tx = spherical_unit_vector(clusters.angles.zod, clusters.angles.aod)
    dist = nf.d1 if nf is not None else np.full(r_tx.shape[:-1], FAR_POINT_DISTANCE)
    rx = drop.bs_position + dist[..., None] * r_tx
    loss = scene_loss_db(config.blockers, tx[None, None, :, :], rx[:, :, None, :], lam, drop.t)
    loss_los = scene_loss_db(config.blockers, tx, drop.ue_position[None, :], lam, drop.t)
    return 10.0 ** (-loss / 10.0), 10.0 ** (-loss_los / 10.0)


def run_drop(config: SimulationConfig, ue_index: int) -> DropResult:
    """Generate one drop and its metrics."""
    feats = config.features
    seed = config.seed
    params = config.scenario

    ue_pos = place_ue(config, stream(seed, ue_index, "placement"))
    lsp = stream(seed, ue_index, "lsp")
    k_db = float(lsp.normal(params.k_factor_mean_db, params.k_factor_std_db))
    sf_db = config.pathloss.sample_shadowing_db(lsp)

    drop = DropConfig(
        bs_position=config.bs.reference_point,
        ue_position=ue_pos,
        wavelength=config.wavelength,
        k_factor=10.0 ** (k_db / 10.0) if config.los else 0.0,
        los=config.los,
        velocity=config.ue_velocity,
        t=config.time,
        near_field="near_field" in feats,
    )
    clusters = generate_clusters(config, drop, ue_index, k_db)

    nf = None
    if drop.near_field:
        nf = generate_source_distances(clusters, drop.d_3d, params.near_field, stream(seed, ue_index, "nf_scaling"))

    info = {}
    alpha_nlos = alpha_los = None
    if "sns_stochastic" in feats:
        state = generate_stochastic_sns(
            clusters.powers, drop.k_factor, drop.los, config.bs.plane_coords(),
            config.bs.width, config.bs.height, params.sns,
            stream(seed, ue_index, "sns_class"), stream(seed, ue_index, "sns_vr"),
            post_k=params.vp_power_post_k,
        )
        alpha_nlos = state.alpha_matrix()[:, None, :]
        alpha_los = state.los.alpha if state.los is not None else None
        info["pr_sns"] = state.pr_sns
        info["n_sns"] = int(sum(c.is_sns for c in state.clusters))
    elif "sns_blocker" in feats and config.blockers:
        alpha_nlos, alpha_los = blocker_alpha(config, drop, clusters, nf)

    beta = None
    if "sns_ue" in feats:
        kind = sample_usage_scenario(stream(seed, ue_index, "ue_usage"))
        beta = ue_attenuation_vector(kind, config.carrier_frequency, config.ue.n_ports, config.ue_table)
        info["usage"] = kind.value

    mode = mode_label(feats)
    channel = assemble_cir(
        drop, clusters, config.bs, config.ue, nf=nf,
        alpha_nlos=alpha_nlos, alpha_los=alpha_los, beta=beta,
        metadata={"drop": ue_index, "mode": mode},
    )
    pl_db = config.pathloss.path_loss_db(drop.d_3d)
    h = channel.narrowband()
    if config.capacity_normalization == "frobenius":
        h = normalize_channel(h)
    sample = MetricSample(
        ue_id=ue_index,
        mode=mode,
        capacity=capacity(h, config.snr),
        coupling_loss_db=coupling_loss(channel.coefficients, pl_db, sf_db),
    )
    info.update(d_3d=drop.d_3d, k_factor_db=k_db, sf_db=sf_db, pl_db=pl_db)
    return DropResult(ue_id=ue_index, ue_position=ue_pos, clusters=clusters, channel=channel, sample=sample, info=info)


def _drop_task(args):
    config, ue_index = args
    result = run_drop(config, ue_index)
    pdp = pdp_rows(result.channel) if config.export_pdp else None
    return result.sample, pdp


def worker_count(n_tasks: int) -> int:
    """Worker processes, capped by ``XLCHANSIM_THREADS`` (default: CPU count)."""
    cap = os.environ.get("XLCHANSIM_THREADS")
    n = int(cap) if cap else (os.cpu_count() or 1)
    if n < 1:
        raise ValueError("XLCHANSIM_THREADS must be >= 1")
    return max(1, min(n, n_tasks))


def simulate(config: SimulationConfig, workers: Optional[int] = None):
    """Run all drops; returns ``(samples, pdps)`` ordered by UE index.

    Drop errors propagate. Results are returned in UE order regardless of
    the number of worker processes, so outputs are deterministic.
    """
    config.validate()
    tasks = [(config, i) for i in range(config.n_ue)]
    n = worker_count(len(tasks)) if workers is None else workers
    if n == 1:
        out = [_drop_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            out = list(pool.map(_drop_task, tasks, chunksize=max(1, len(tasks) // (4 * n))))
    samples = [s for s, _ in out]
    pdps = [p for _, p in out]
    return samples, pdps


def pdp_rows(channel: ChannelRealization):
    """(delay_ns, power_db) per tap, power averaged over sublinks."""
    power = np.mean(np.abs(channel.coefficients) ** 2, axis=(1, 2))
    with np.errstate(divide="ignore"):
        return list(zip((channel.delays * 1e9).tolist(), (10 * np.log10(power)).tolist()))


def metrics_csv(samples) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["ue_id", "mode", "capacity_bpshz", "coupling_loss_db"])
    for s in samples:
        w.writerow([s.ue_id, s.mode, repr(s.capacity), repr(s.coupling_loss_db)])
    return buf.getvalue()


def cdf_csv(values) -> str:
    x, p = aggregate_cdf(values)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["value", "probability"])
    for xi, pi in zip(x.tolist(), p.tolist()):
        w.writerow([repr(xi), repr(pi)])
    return buf.getvalue()


def run_drop_loop(config: SimulationConfig, out_dir=None, workers: Optional[int] = None) -> dict:
    """Simulate every drop and write metrics, CDF and optional PDP files.

    Returns a mapping of output names to paths. All writes happen here, in
    the calling process.
    """
    out = Path(out_dir if out_dir is not None else config.output_dir)
    samples, pdps = simulate(config, workers)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "metrics": out / "metrics.csv",
        "capacity_cdf": out / "capacity_cdf.csv",
        "coupling_loss_cdf": out / "coupling_loss_cdf.csv",
    }
    paths["metrics"].write_text(metrics_csv(samples))
    paths["capacity_cdf"].write_text(cdf_csv([s.capacity for s in samples]))
    paths["coupling_loss_cdf"].write_text(cdf_csv([s.coupling_loss_db for s in samples]))
    if config.export_pdp:
        pdp_dir = out / "pdp"
        pdp_dir.mkdir(exist_ok=True)
        for i, rows in enumerate(pdps):
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["delay_ns", "power_db"])
            w.writerows([repr(d), repr(p)] for d, p in rows)
            (pdp_dir / f"ue{i:05d}.csv").write_text(buf.getvalue())
        paths["pdp"] = pdp_dir
    return paths
