"""Transition amplitudes, streaked spectrograms and emission-delay extraction.

One backward propagation per final energy serves the whole delay scan: the
XUV-IR delay enters only through the shift of the XUV envelope against the
stored momentum matrix element series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import units
from .initial_states import BandModel, InitialState, initial_wavefunction
from .propagator import CoefficientTrajectory
from .pulses import (IrPulse, Screening, XuvPulse, ir_vector_potential,
                     xuv_envelope)

XUV_SUPPORT_SIGMAS = 3.0


@dataclass(frozen=True, eq=False)
class MatrixElementSeries:
    times: np.ndarray
    values: np.ndarray
    initial_state_id: str
    final_energy: float


@dataclass(frozen=True, eq=False)
class Spectrogram:
    e_grid: np.ndarray         # snapped final kinetic energies (a.u.)
    tau_grid: np.ndarray       # XUV-IR delays (a.u.)
    p: np.ndarray              # P(E_f, tau), shape (len(e_grid), len(tau_grid))
    band: str

    def __post_init__(self):
        if np.any(self.p < 0) or not np.all(np.isfinite(self.p)):
            raise ValueError("spectrogram entries must be finite and non-negative")


@dataclass(frozen=True, eq=False)
class StreakingCurve:
    tau_grid: np.ndarray
    centroid: np.ndarray
    valid: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.valid is None:
            object.__setattr__(self, "valid",
                               np.ones(len(self.tau_grid), dtype=bool))


@dataclass(frozen=True)
class DelayResult:
    delta_tau_as: float
    method: str
    shift_a: float             # fitted emission-time offset of curve a (a.u.)
    shift_b: float
    amplitude_a: float         # fitted streaking amplitude alpha (a.u. energy)
    amplitude_b: float

    def __post_init__(self):
        pass


def momentum_matrix_element(traj: CoefficientTrajectory, state: InitialState,
                            band: Optional[BandModel] = None,
                            work_function: float = 0.0) -> MatrixElementSeries:
    """p_fi(t) = e^{-i eps_i t} sum_n sqrt(w_n) c_n*(t) p_n phi_i(p_n)."""
    grid = traj.grid
    orbital = band.orbital if band is not None else None
    phi = initial_wavefunction(state, grid.nodes, orbital)
    v = np.sqrt(grid.weights) * grid.nodes * phi
    series = (v @ np.conj(traj.coeffs)) * np.exp(-1j * state.binding * traj.times)
    return MatrixElementSeries(times=traj.times, values=series,
                               initial_state_id=state.state_id,
                               final_energy=grid.snapped_energy(work_function))


def _check_support(times: np.ndarray, xuv: XuvPulse, taus: np.ndarray) -> None:
    half = XUV_SUPPORT_SIGMAS * xuv.tau_x
    lo, hi = taus.min() - half, taus.max() + half
    if lo < times[0] or hi > times[-1]:
        raise ValueError(
            f"XUV support [{lo:.1f}, {hi:.1f}] exceeds the trajectory window "
            f"[{times[0]:.1f}, {times[-1]:.1f}]; extend the propagation window"
        )


def transition_amplitude(series: MatrixElementSeries, xuv: XuvPulse,
                         tau: float) -> complex:
    """T = -i integral dt A_X(t - tau) p_fi(t), trapezoidal on the stored grid."""
    taus = np.atleast_1d(np.asarray(tau, dtype=float))
    _check_support(series.times, xuv, taus)
    t = np.trapezoid(xuv_envelope(series.times[None, :], taus[:, None], xuv)
                     * series.values[None, :], series.times, axis=1)
    t = -1j * t
    return complex(t[0]) if np.isscalar(tau) or np.ndim(tau) == 0 else t


def band_transition_probabilities(traj: CoefficientTrajectory, band: BandModel,
                                  xuv: XuvPulse, tau_grid: np.ndarray,
                                  work_function: float) -> np.ndarray:
    """Occupation-weighted sum_i n_i |T_fi(tau)|^2 for one final energy."""
    _check_support(traj.times, xuv, np.asarray(tau_grid))
    grid = traj.grid
    phi = band.wavefunctions(grid.nodes)                       # (ns, n)
    v = phi * (np.sqrt(grid.weights) * grid.nodes)[None, :]
    p_fi = (v @ np.conj(traj.coeffs)) \
        * np.exp(-1j * np.outer(band.bindings, traj.times))    # (ns, nt)
    env = xuv_envelope(traj.times[None, :],
                       np.asarray(tau_grid)[:, None], xuv)     # (ntau, nt)
    t_mat = np.trapezoid(env[None, :, :] * p_fi[:, None, :],
                         traj.times, axis=2)                   # (ns, ntau)
    return band.weights @ (np.abs(t_mat) ** 2)


def centroid_curve(spec: Spectrogram, floor: float = 0.0) -> StreakingCurve:
    """First moment <E_f>(tau) of each spectrogram column.

    Columns whose integrated signal is non-positive (possible in noisy
    reduced runs with a relative ``floor``) are flagged invalid and excluded
    from fits downstream.
    """
    p = spec.p
    if floor > 0.0:
        p = np.where(p >= floor * p.max(), p, 0.0)
    norm = np.trapezoid(p, spec.e_grid, axis=0)
    first = np.trapezoid(spec.e_grid[:, None] * p, spec.e_grid, axis=0)
    valid = norm > 0
    centroid = np.full(len(spec.tau_grid), np.nan)
    centroid[valid] = first[valid] / norm[valid]
    return StreakingCurve(tau_grid=spec.tau_grid, centroid=centroid, valid=valid)


# ---------------------------------------------------------------------------
# Delay extraction
# ---------------------------------------------------------------------------

def _fit_waveform_shift(curve: StreakingCurve, pulse: IrPulse,
                        min_relative_amplitude: float = 1e-6):
    """Least-squares fit centroid(tau) = E0 + alpha A(tau + shift).

    For a trial shift the (E0, alpha) pair is linear; the shift is profiled
    on a grid over one IR period and refined continuously.
    """
    mask = curve.valid & np.isfinite(curve.centroid)
    taus = curve.tau_grid[mask]
    y = curve.centroid[mask]
    if len(taus) < 4:
        raise ValueError("too few valid delay points to fit")
    ref = pulse.with_screening(Screening.SCREENED)  # waveform only, never zeroed

    def residual(shift):
        a = ir_vector_potential(taus + shift, ref)
        basis = np.column_stack([np.ones_like(taus), a])
        coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
        r = y - basis @ coef
        return float(r @ r), coef

    # An alpha < 0 minimum is the same waveform near shift +- T/2; restrict
    # the profile search to alpha > 0 so shifts of different curves share a
    # branch and stay comparable.
    period = ref.period
    shifts = np.linspace(-0.5 * period, 0.5 * period, 241)
    profile = [residual(s) for s in shifts]
    costs = np.array([c for c, _ in profile])
    alphas = np.array([coef[1] for _, coef in profile])
    positive = alphas > 0
    if not np.any(positive):
        raise ValueError("no positive-amplitude waveform fit found")
    costs = np.where(positive, costs, np.inf)
    s0 = shifts[np.argmin(costs)]
    span = shifts[1] - shifts[0]
    opt = minimize_scalar(lambda s: residual(s)[0],
                          bounds=(s0 - 2 * span, s0 + 2 * span),
                          method="bounded",
                          options={"xatol": 1e-6})
    if not opt.success:
        raise RuntimeError("waveform-shift fit did not converge")
    shift = float(opt.x)
    _, coef = residual(shift)
    alpha = float(coef[1])
    osc = np.ptp(y)
    if osc == 0.0 or abs(alpha) * np.max(np.abs(ir_vector_potential(taus + shift, ref))) \
            < min_relative_amplitude * osc:
        raise ValueError("streaking oscillation amplitude below the noise floor")
    return shift, alpha


def _wrap_delay(delta: float, period: float) -> float:
    return (delta + 0.5 * period) % period - 0.5 * period


def extract_delay(a: StreakingCurve, b: StreakingCurve, pulse: IrPulse,
                  method: str = "fit") -> DelayResult:
    """Relative emission delay between two centroid curves, in attoseconds.

    Positive means curve b is delayed relative to curve a.  ``method`` is
    either "fit" (waveform model fit, sub-grid resolution) or "xcorr"
    (cross-correlation cross-check on an upsampled grid).
    """
    if len(a.tau_grid) != len(b.tau_grid) or np.any(a.tau_grid != b.tau_grid):
        raise ValueError("curves must share the same delay grid")
    period = pulse.period
    if method == "fit":
        shift_a, alpha_a = _fit_waveform_shift(a, pulse)
        shift_b, alpha_b = _fit_waveform_shift(b, pulse)
        delta = _wrap_delay(shift_b - shift_a, period)
        return DelayResult(delta_tau_as=units.au_to_attoseconds(delta),
                           method="fit", shift_a=shift_a, shift_b=shift_b,
                           amplitude_a=alpha_a, amplitude_b=alpha_b)
    if method == "xcorr":
        delta = _xcorr_shift(a, b, period)
        return DelayResult(delta_tau_as=units.au_to_attoseconds(delta),
                           method="xcorr", shift_a=math.nan, shift_b=math.nan,
                           amplitude_a=math.nan, amplitude_b=math.nan)
    raise ValueError(f"unknown delay method {method!r}")


def _xcorr_shift(a: StreakingCurve, b: StreakingCurve, period: float) -> float:
    """Shift of b relative to a by maximizing the circularized correlation."""
    mask = a.valid & b.valid & np.isfinite(a.centroid) & np.isfinite(b.centroid)
    taus = a.tau_grid[mask]
    fine = np.linspace(taus[0], taus[-1], 16 * len(taus))
    ya = np.interp(fine, taus, a.centroid[mask])
    yb = np.interp(fine, taus, b.centroid[mask])
    ya -= ya.mean()
    yb -= yb.mean()
    step = fine[1] - fine[0]
    max_lag = int(0.5 * period / step)
    lags = np.arange(-max_lag, max_lag + 1)
    corr = np.array([np.dot(ya[max(0, -l): len(ya) - max(0, l)],
                            yb[max(0, l): len(yb) - max(0, -l)])
                     / (len(ya) - abs(l)) for l in lags])
    k = int(np.argmax(corr))
    # parabolic sub-sample refinement
    if 0 < k < len(lags) - 1:
        denom = corr[k - 1] - 2 * corr[k] + corr[k + 1]
        frac = 0.5 * (corr[k - 1] - corr[k + 1]) / denom if denom != 0 else 0.0
    else:
        frac = 0.0
    # corr[l] pairs ya[i] with yb[i + l], so the peak sits at l = -s/step
    # when b(tau) = a(tau + s); negate to report s in the fit convention.
    return -(lags[k] + frac) * step


# ---------------------------------------------------------------------------
# Field-free line positions (analytic, used to center energy scans)
# ---------------------------------------------------------------------------

def field_free_line_weight(band: BandModel, xuv: XuvPulse, e_f: float,
                           work_function: float) -> float:
    """Analytic field-free emission strength at final energy e_f.

    Without the IR field the matrix element modulus is constant in time and
    the XUV time integral is an exact Gaussian: |T_fi|^2 is proportional to
    |p_f phi_i(p_f)|^2 exp(-(p_f^2/2 - eps_i - w_X)^2 tau_X^2 / (2 ln 4)).
    """
    p_f = math.sqrt(2.0 * (e_f - work_function))
    phi = band.wavefunctions(np.array([p_f]))[:, 0]
    detune = 0.5 * p_f * p_f - band.bindings - xuv.omega_x
    line = np.exp(-detune**2 * xuv.tau_x**2 / (2.0 * math.log(4.0)))
    return float(band.weights @ (np.abs(p_f * phi) ** 2 * line))


def field_free_band_center(band: BandModel, xuv: XuvPulse,
                           work_function: float,
                           n_scan: int = 801) -> float:
    """Centroid of the analytic field-free line of a band."""
    eps_lo = float(band.bindings.min())
    bandwidth = 4.0 * math.sqrt(math.log(4.0)) / xuv.tau_x
    e_lo = work_function + 1e-6 + max(0.0, xuv.omega_x + eps_lo - bandwidth)
    e_hi = work_function + xuv.omega_x + float(band.bindings.max()) + bandwidth
    es = np.linspace(e_lo, e_hi, n_scan)
    w = np.array([field_free_line_weight(band, xuv, e, work_function)
                  for e in es])
    return float(np.trapezoid(es * w, es) / np.trapezoid(w, es))
