"""Command-line entry point.

Subcommands:

* ``simulate`` runs the drop loop and writes metrics and CDF CSVs.
* ``nearfield-report`` dumps per-element phase and angle deltas of the direct path.
* ``sns-field`` dumps the attenuation raster of one visibility region.
* ``blockage-demo`` dumps the per-element blocker loss for one departure ray.

Without a subcommand, ``simulate`` is assumed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .blocker import scene_loss_db
from .config import ConfigError, load_config, mode_label
from .exports import raster_csv, rows_to_csv
from .geometry import angles_from_vector, element_positions, spherical_unit_vector, wrap_angle
from .nearfield import farfield_phase, los_pairwise
from .simulation import run_drop_loop
from .sns_stochastic import attenuation_factor, generate_vr, visibility_probability

SUBCOMMANDS = ("simulate", "nearfield-report", "sns-field", "blockage-demo")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, default=None, help="YAML config (defaults to the bundled one)")
    p.add_argument("--scenario", default=None, help="scenario name, e.g. InH or UMi")
    p.add_argument("--seed", type=int, default=None, help="master seed (u64)")
    p.add_argument("--out", type=Path, default=None, help="output directory or file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xlchansim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the Monte Carlo drop loop")
    _common(p)
    p.add_argument("--ues", type=int, default=None, help="number of UE drops")
    p.add_argument("--features", default=None, help="comma list of nf, sns-stoch | sns-block, sns-ue")
    p.add_argument("--radius", type=float, default=None, help="UE drop radius in metres")
    p.add_argument("--pdp", action="store_true", help="also export per-link PDP CSVs")

    p = sub.add_parser("nearfield-report", help="per-element near/far deltas of the direct path")
    _common(p)
    p.add_argument("--ue", type=float, nargs=3, default=(2.0, 0.0, 1.0), metavar=("X", "Y", "Z"))

    p = sub.add_parser("sns-field", help="attenuation raster of one visibility region")
    _common(p)
    p.add_argument("--vp", type=float, default=None, help="visibility probability (default: zero power gap)")

    p = sub.add_parser("blockage-demo", help="per-element blocker loss for one ray")
    _common(p)
    p.add_argument("--azimuth", type=float, default=0.0, help="departure azimuth in degrees")
    p.add_argument("--zenith", type=float, default=90.0, help="departure zenith in degrees")
    p.add_argument("--distance", type=float, default=1e4, help="receiver distance along the ray (m)")
    return parser


def _write(text: str, out: Path | None, default_name: str):
    if out is None:
        sys.stdout.write(text)
        return
    path = out / default_name if out.suffix == "" else out
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    print(f"wrote {path}", file=sys.stderr)


def cmd_simulate(args) -> int:
    overrides = dict(scenario=args.scenario, seed=args.seed, n_ue=args.ues, features=args.features, radius_m=args.radius)
    if args.pdp:
        overrides["export_pdp"] = True
    config = load_config(args.config, **overrides)
    paths = run_drop_loop(config, args.out)
    print(f"{config.n_ue} drops, mode {mode_label(config.features)}, scenario {config.scenario.name}")
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


def cmd_nearfield_report(args) -> int:
    config = load_config(args.config, scenario=args.scenario)
    bs = config.bs
    offsets = element_positions(bs)
    ue = np.asarray(args.ue, dtype=float)
    d = ue - bs.reference_point
    d3d = np.linalg.norm(d)
    r_hat = d / d3d
    dist, zod, aod, _, _ = los_pairwise(bs.reference_point + offsets, ue)
    lam = config.wavelength
    # Exact element phase relative to the reference, minus the plane-wave phase.
    delta = -2 * np.pi * (dist - d3d) / lam - farfield_phase(r_hat, offsets, lam)
    zod0, aod0 = angles_from_vector(r_hat)
    rows = [
        (i, *offsets[i], delta[i], np.degrees(zod[i] - zod0), np.degrees(wrap_angle(aod[i] - aod0)))
        for i in range(offsets.shape[0])
    ]
    header = ["element", "x_m", "y_m", "z_m", "phase_delta_rad", "zod_delta_deg", "aod_delta_deg"]
    _write(rows_to_csv(header, rows), args.out, "nearfield_report.csv")
    return 0


def cmd_sns_field(args) -> int:
    config = load_config(args.config, scenario=args.scenario)
    params = config.scenario.sns
    rng = np.random.default_rng(config.seed if args.seed is None else args.seed)
    vp = args.vp if args.vp is not None else float(visibility_probability(0.0, 0.0, params, xi=0.0))
    bs = config.bs
    region = generate_vr(vp, bs.width, bs.height, rng)
    coords = bs.plane_coords()
    alpha = attenuation_factor(coords[:, 0], coords[:, 1], region, params.rolloff)
    _write(raster_csv(coords, alpha), args.out, "sns_field.csv")
    return 0


def cmd_blockage_demo(args) -> int:
    config = load_config(args.config, scenario=args.scenario)
    if not config.blockers:
        raise ConfigError("the config has no blockers")
    bs = config.bs
    tx = bs.reference_point + element_positions(bs)
    r_hat = spherical_unit_vector(np.radians(args.zenith), np.radians(args.azimuth))
    rx = bs.reference_point + args.distance * r_hat
    loss = scene_loss_db(config.blockers, tx, rx[None, :], config.wavelength, config.time)
    coords = bs.plane_coords()
    _write(raster_csv(coords, loss, "loss_db"), args.out, "blockage_demo.csv")
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "nearfield-report": cmd_nearfield_report,
    "sns-field": cmd_sns_field,
    "blockage-demo": cmd_blockage_demo,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or (argv[0] not in SUBCOMMANDS and argv[0] not in ("-h", "--help")):
        argv.insert(0, "simulate")
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - any drop error must fail the run
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
