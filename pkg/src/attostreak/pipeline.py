"""End-to-end pipelines: energy scans, spectrograms, centroid curves, delays.

Final energies are the expensive axis (one backward propagation each); the
delay and initial-state loops are inner post-processing.  Propagations for
distinct final energies are independent and run as a parallel map.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import streaking
from .config import RunConfig
from .grid import build_strip
from .initial_states import BandModel, build_band
from .propagator import propagate_backward
from .pulses import IrPulse, Screening, XuvPulse


def band_model(config: RunConfig, band: str,
               cache_dir: Optional[str] = None) -> BandModel:
    b = config.bands
    n_states = b.valence_states if band == "valence" else b.core_states
    return build_band(band, n_states,
                      fermi_momentum=b.fermi_momentum,
                      work_function=config.work_function,
                      core_binding=config.core_binding,
                      n_layers=b.n_layers,
                      a_s=b.interlayer_spacing,
                      yukawa_a=b.yukawa_screening_length,
                      escape_depth=b.escape_depth,
                      cache_dir=cache_dir)


def band_energy_center(config: RunConfig, band: BandModel,
                       screening: Screening) -> float:
    """Center of the band's emission line.

    The energy-shifted Cayley frame references each row's own strip-center
    energy, so the screened resonance coincides with the analytic field-free
    line to O((delta * half_width * p_f / 2)^3); all modes share the
    analytic center.
    """
    scan = config.scan
    override = (scan.e_center_valence if band.band == "valence"
                else scan.e_center_core)
    if override > 0:
        return override
    return streaking.field_free_band_center(band, config.xuv_pulse(),
                                            config.work_function)


def energy_scan(config: RunConfig, band: BandModel,
                screening: Screening) -> np.ndarray:
    center = band_energy_center(config, band, screening)
    scan = config.scan
    return np.linspace(center - scan.e_half_span, center + scan.e_half_span,
                       scan.e_points)


def tau_scan(config: RunConfig) -> np.ndarray:
    scan = config.scan
    return np.linspace(scan.tau_min, scan.tau_max, scan.tau_points)


@dataclass(frozen=True)
class _RowTask:
    e_f: float
    config: RunConfig
    band: BandModel
    screening: str


def _spectrogram_row(task: _RowTask):
    """One final energy: propagate backward, reduce to P(E_f', tau)."""
    config = task.config
    prop = config.propagation
    g = build_strip(task.e_f, config.work_function,
                    half_width=config.grid.half_width, n=config.grid.n_points)
    pulse = config.ir_pulse(task.screening)
    traj = propagate_backward(g, pulse, t_max=prop.t_max, t_min=prop.t_min,
                              delta=config.delta,
                              midpoint=prop.midpoint_hamiltonian,
                              solver=prop.solver)
    row = streaking.band_transition_probabilities(
        traj, task.band, config.xuv_pulse(), tau_scan(config),
        config.work_function)
    return g.snapped_energy(config.work_function), row


def _worker_init():
    # one BLAS thread per worker; the E_f axis carries the parallelism
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = "1"


def run_spectrogram(config: RunConfig, band: BandModel,
                    screening: Optional[str] = None,
                    workers: int = 1,
                    e_grid: Optional[np.ndarray] = None) -> streaking.Spectrogram:
    mode_name = screening or config.pulses.screening
    mode = Screening.parse(mode_name)
    if e_grid is None:
        e_grid = energy_scan(config, band, mode)
    tasks = [_RowTask(float(e), config, band, mode.value) for e in e_grid]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers,
                                 initializer=_worker_init) as pool:
            results = list(pool.map(_spectrogram_row, tasks))
    else:
        results = [_spectrogram_row(t) for t in tasks]
    snapped = np.array([e for e, _ in results])
    p = np.array([row for _, row in results])
    return streaking.Spectrogram(e_grid=snapped, tau_grid=tau_scan(config),
                                 p=p, band=band.band)


@dataclass(frozen=True)
class DelayRun:
    """Bundle of the four centroid curves and the two delay numbers."""

    curves: dict               # (band, screening) -> StreakingCurve
    spectrograms: dict         # (band, screening) -> Spectrogram
    delays: dict               # screening -> DelayResult


def run_delay(config: RunConfig, workers: int = 1,
              cache_dir: Optional[str] = None,
              screenings=("screened", "unscreened")) -> DelayRun:
    """Valence and core spectrograms for each screening mode, plus delays."""
    bands = {name: band_model(config, name, cache_dir)
             for name in ("valence", "core")}
    curves, spectrograms, delays = {}, {}, {}
    for screening in screenings:
        for name, model in bands.items():
            spec = run_spectrogram(config, model, screening, workers=workers)
            spectrograms[(name, screening)] = spec
            curves[(name, screening)] = streaking.centroid_curve(spec)
        delays[screening] = streaking.extract_delay(
            curves[("valence", screening)], curves[("core", screening)],
            config.ir_pulse(screening))
    return DelayRun(curves=curves, spectrograms=spectrograms, delays=delays)


def propagate_single(config: RunConfig, e_f: float,
                     screening: Optional[str] = None):
    """One backward propagation at the configured resolution."""
    prop = config.propagation
    g = build_strip(e_f, config.work_function,
                    half_width=config.grid.half_width, n=config.grid.n_points)
    pulse = config.ir_pulse(screening)
    return propagate_backward(g, pulse, t_max=prop.t_max, t_min=prop.t_min,
                              delta=config.delta,
                              midpoint=prop.midpoint_hamiltonian,
                              solver=prop.solver)
