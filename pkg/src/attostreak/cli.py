"""Command-line surface: propagate, spectrogram, delay, diagnose."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import diagnostics, outputs, pipeline, streaking, units
from .config import RunConfig, config_hash, parse_config
from .propagator import save_trajectory
from .pulses import ir_vector_potential


def _load_config(args) -> RunConfig:
    config = parse_config(args.config) if args.config else RunConfig()
    if getattr(args, "screening", None):
        from dataclasses import replace
        config = replace(config,
                         pulses=replace(config.pulses, screening=args.screening))
    if getattr(args, "reduced", False):
        config = config.reduced()
    return config


def _out_dir(args, config: RunConfig) -> Path:
    out = Path(args.out_dir or config.outputs.directory)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_propagate(args) -> int:
    config = _load_config(args)
    out = _out_dir(args, config)
    traj = pipeline.propagate_single(config, args.e_f)
    tag = f"{config.pulses.screening}_ef{args.e_f:g}"
    path = out / f"trajectory_{tag}.bin"
    save_trajectory(traj, path)
    e_snapped = traj.grid.snapped_energy(config.work_function)
    sigma = diagnostics.momentum_spread(traj)
    outputs.write_columns(
        out / f"trajectory_{tag}_sigma_p.csv", config,
        ["t_au", "sigma_p_au", "central_amplitude"],
        [traj.times, sigma,
         np.abs(traj.coeffs[traj.grid.f_index, :])
         * np.sqrt(traj.grid.weights[traj.grid.f_index])],
        {"kind": "propagation_diagnostics",
         "snapped_final_energy_au": e_snapped})
    print(f"wrote {path} (snapped E_f = {e_snapped:.6f} a.u., "
          f"config {config_hash(config)})")
    return 0


def cmd_spectrogram(args) -> int:
    config = _load_config(args)
    out = _out_dir(args, config)
    band = pipeline.band_model(config, args.band, cache_dir=out / "cache")
    spec = pipeline.run_spectrogram(config, band, workers=args.workers)
    curve = streaking.centroid_curve(spec)
    tag = f"{args.band}_{config.pulses.screening}"
    outputs.write_spectrogram(spec, out / f"spectrogram_{tag}.csv", config,
                              config.pulses.screening)
    outputs.write_curve(curve, out / f"centroid_{tag}.csv", config,
                        {"band": args.band,
                         "screening": config.pulses.screening})
    print(f"wrote spectrogram_{tag}.csv and centroid_{tag}.csv "
          f"(config {config_hash(config)})")
    return 0


def cmd_delay(args) -> int:
    config = _load_config(args)
    out = _out_dir(args, config)
    run = pipeline.run_delay(config, workers=args.workers,
                             cache_dir=out / "cache")
    for (band, screening), curve in run.curves.items():
        outputs.write_curve(curve, out / f"centroid_{band}_{screening}.csv",
                            config, {"band": band, "screening": screening})
    for (band, screening), spec in run.spectrograms.items():
        outputs.write_spectrogram(
            spec, out / f"spectrogram_{band}_{screening}.csv", config,
            screening)
    for screening, result in run.delays.items():
        outputs.write_delay(result, out / f"delay_{screening}.json", config,
                            {"sign_convention":
                             "positive = core delayed relative to valence"})
        print(f"{screening}: core - valence delay = "
              f"{result.delta_tau_as:+.1f} as")
    return 0


def cmd_diagnose(args) -> int:
    config = _load_config(args)
    out = _out_dir(args, config)
    times = [float(t) for t in args.times.split(",")]
    traj = pipeline.propagate_single(config, args.e_f)
    z_grid = diagnostics.DEFAULT_Z_GRID
    tag = f"ef{args.e_f:g}_{config.pulses.screening}"

    # time series: central plane-wave amplitude and sigma_p(t)
    f = traj.grid.f_index
    outputs.write_columns(
        out / f"timeseries_{tag}.csv", config,
        ["t_au", "central_amplitude", "sigma_p_au"],
        [traj.times,
         np.abs(traj.coeffs[f, :]) * np.sqrt(traj.grid.weights[f]),
         diagnostics.momentum_spread(traj)],
        {"kind": "packet_timeseries", "final_energy_au": args.e_f})

    for t in times:
        idx = traj.index_of_time(t)
        t_snap = traj.times[idx]
        # momentum-distribution snapshot
        outputs.write_columns(
            out / f"momentum_{tag}_t{t:g}.csv", config,
            ["p_au", "abs_phi"],
            [traj.grid.nodes,
             np.abs(traj.coeffs[:, idx]) / np.sqrt(traj.grid.weights)],
            {"kind": "momentum_distribution", "time_au": float(t_snap)})
        # density-modulation snapshot
        slc = diagnostics.to_coordinate(traj, t, z_grid)
        outputs.write_columns(
            out / f"density_{tag}_t{t:g}.csv", config,
            ["z_nm", "delta_n"],
            [slc.z_nm, diagnostics.density_modulation(slc)],
            {"kind": "density_modulation", "time_au": float(t_snap)})
        # fluctuating density vs frozen field-free reference
        n_fluc = diagnostics.fluctuation_density(traj, t, z_grid)
        n_free = diagnostics.field_free_fluctuation_density(
            traj, args.t_ref, t, z_grid)
        outputs.write_columns(
            out / f"fluctuation_{tag}_t{t:g}.csv", config,
            ["z_nm", "n_fluc", "n_fluc_field_free"],
            [units.bohr_to_nm(z_grid), n_fluc, n_free],
            {"kind": "fluctuation_density", "time_au": float(t_snap),
             "reference_time_au": args.t_ref})
    print(f"wrote diagnostics bundles for t = {times} "
          f"(config {config_hash(config)})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="attostreak",
        description="Attosecond streaking from a jellium metal surface")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, band=False, e_f=False):
        p.add_argument("--config", help="run configuration file")
        p.add_argument("--screening",
                       choices=["screened", "unscreened", "off"],
                       help="override the configured screening mode")
        p.add_argument("--reduced", action="store_true",
                       help="CI-speed preset (coarser basis and scans)")
        p.add_argument("--workers", type=int, default=1,
                       help="parallel propagations over final energies")
        p.add_argument("--out-dir", help="output directory")
        if band:
            p.add_argument("--band", choices=["valence", "core"],
                           required=True)
        if e_f:
            p.add_argument("--e-f", type=float, required=True,
                           help="final kinetic energy (a.u.)")

    p = sub.add_parser("propagate",
                       help="single backward propagation with diagnostics")
    common(p, e_f=True)
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("spectrogram",
                       help="streaked spectrogram and centroid for one band")
    common(p, band=True)
    p.set_defaults(func=cmd_spectrogram)

    p = sub.add_parser("delay",
                       help="valence/core centroid curves and delays for "
                            "screened and unscreened fields")
    common(p)
    p.set_defaults(func=cmd_delay)

    p = sub.add_parser("diagnose",
                   help="wave-packet diagnostics CSV bundles")
    common(p, e_f=True)
    p.add_argument("--times", default="-500,-150,0,150",
                   help="comma-separated snapshot times (a.u.)")
    p.add_argument("--t-ref", type=float, default=-500.0,
                   help="remote-past reference time for the field-free "
                        "comparison (a.u.)")
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
