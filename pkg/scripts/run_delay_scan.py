#!/usr/bin/env python3
"""Full streaking delay run: valence + core bands, screened and unscreened.

Writes centroid curves, spectrograms and delay JSONs into --out-dir.
With default settings this is the headline number (core 2p emission delayed
~100 as relative to the valence band when the IR field is screened).
"""

import argparse
import time
from pathlib import Path

from attostreak import outputs, pipeline
from attostreak.config import RunConfig, config_hash, parse_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", help="configuration file (defaults: full run)")
    ap.add_argument("--reduced", action="store_true",
                    help="coarse preset (~10 min on one core)")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out-dir", default="out/delay")
    args = ap.parse_args()

    config = parse_config(args.config) if args.config else RunConfig()
    if args.reduced:
        config = config.reduced()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    t0 = time.time()
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
              f"{result.delta_tau_as:+.1f} as "
              f"(alpha_v={result.amplitude_a:.3f}, "
              f"alpha_c={result.amplitude_b:.3f})")
    print(f"config {config_hash(config)}; {time.time() - t0:.0f} s")


if __name__ == "__main__":
    main()
