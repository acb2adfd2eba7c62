"""CSV and metadata writers.

Every artifact carries the configuration hash, code version and the snapped
final energies in a JSON sidecar, so re-running a command with an unchanged
hash is byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, config_hash
from .streaking import DelayResult, Spectrogram, StreakingCurve


def _sidecar(path: Path, config: RunConfig, extra: dict) -> None:
    meta = {
        "config_hash": config_hash(config),
        "code_version": __version__,
        "units": "Hartree atomic units unless suffixed otherwise",
    }
    meta.update(extra)
    path.with_suffix(path.suffix + ".meta.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n")


def write_spectrogram(spec: Spectrogram, path: Path, config: RunConfig,
                      screening: str) -> None:
    """Matrix CSV: tau header row, E_f header column."""
    with open(path, "w") as fh:
        fh.write("e_f_au\\tau_au," +
                 ",".join(f"{t:.10g}" for t in spec.tau_grid) + "\n")
        for e, row in zip(spec.e_grid, spec.p):
            fh.write(f"{e:.10g}," + ",".join(f"{v:.10g}" for v in row) + "\n")
    _sidecar(path, config, {
        "kind": "spectrogram",
        "band": spec.band,
        "screening": screening,
        "snapped_final_energies_au": [float(e) for e in spec.e_grid],
    })


def write_curve(curve: StreakingCurve, path: Path, config: RunConfig,
                extra: dict) -> None:
    with open(path, "w") as fh:
        fh.write("tau_au,centroid_au,valid\n")
        for t, c, v in zip(curve.tau_grid, curve.centroid, curve.valid):
            fh.write(f"{t:.10g},{c:.10g},{int(v)}\n")
    _sidecar(path, config, {"kind": "streaking_curve", **extra})


def write_delay(result: DelayResult, path: Path, config: RunConfig,
                extra: dict) -> None:
    payload = {
        "delta_tau_as": result.delta_tau_as,
        "method": result.method,
        "shift_a_au": result.shift_a,
        "shift_b_au": result.shift_b,
        "amplitude_a_au": result.amplitude_a,
        "amplitude_b_au": result.amplitude_b,
        "config_hash": config_hash(config),
        "code_version": __version__,
    }
    payload.update(extra)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_columns(path: Path, config: RunConfig, header: list,
                  columns: list, extra: dict) -> None:
    """Generic figure CSV: named columns of equal length."""
    data = np.column_stack(columns)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in data:
            fh.write(",".join(f"{v:.10g}" for v in row) + "\n")
    _sidecar(path, config, extra)
