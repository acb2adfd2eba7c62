"""XUV probe envelope, IR streaking vector potential and the screening model.

The XUV pulse is a Gaussian envelope with carrier ``exp(-i w_X t)``; the IR
vector potential is a sine carrier under a Gaussian envelope.  Inside the
metal the IR field is cancelled by the conduction electrons: the
``Screening`` enum selects the step-screened field, a spatially uniform
(unscreened) field, or no IR field at all.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import units

LN4 = math.log(4.0)


class Screening(enum.Enum):
    """Spatial model of the IR vector potential seen by the photoelectron."""

    SCREENED = "screened"      # theta(z) A(t): field only in the vacuum half-space
    UNSCREENED = "unscreened"  # uniform A(t) everywhere (pure Volkov phases)
    OFF = "off"                # no IR field

    @classmethod
    def parse(cls, name: str) -> "Screening":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValueError(
                f"unknown screening mode {name!r}; expected one of "
                f"{[m.value for m in cls]}"
            ) from None


@dataclass(frozen=True)
class XuvPulse:
    """Gaussian XUV probe; times and frequencies in atomic units."""

    tau_x: float
    omega_x: float
    peak_amplitude: float = 1.0

    def __post_init__(self):
        if self.tau_x <= 0:
            raise ValueError(f"tau_x must be positive, got {self.tau_x}")
        if self.omega_x <= 0:
            raise ValueError(f"omega_x must be positive, got {self.omega_x}")

    @classmethod
    def from_experimental(cls, duration_as: float = 432.0,
                          energy_ev: float = 118.0) -> "XuvPulse":
        return cls(tau_x=units.attoseconds_to_au(duration_as),
                   omega_x=units.ev_to_au(energy_ev))


@dataclass(frozen=True)
class IrPulse:
    """IR streaking pulse: vector-potential amplitude, carrier, envelope."""

    a0: float
    omega_l: float
    tau_l: float
    screening: Screening = Screening.SCREENED

    def __post_init__(self):
        if isinstance(self.screening, str):
            object.__setattr__(self, "screening",
                               Screening.parse(self.screening))
        if self.a0 < 0:
            raise ValueError(f"a0 must be non-negative, got {self.a0}")
        if self.omega_l <= 0:
            raise ValueError(f"omega_l must be positive, got {self.omega_l}")
        if self.tau_l <= 0:
            raise ValueError(f"tau_l must be positive, got {self.tau_l}")

    @property
    def effective_a0(self) -> float:
        """Amplitude actually applied; screening OFF forces zero field."""
        return 0.0 if self.screening is Screening.OFF else self.a0

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega_l

    @classmethod
    def from_experimental(cls, intensity_wcm2: float = 1e12,
                          photon_ev: float = 1.5,
                          duration_au: float = 200.0,
                          screening: Screening = Screening.SCREENED) -> "IrPulse":
        omega = units.ev_to_au(photon_ev)
        return cls(a0=amplitude_from_intensity(intensity_wcm2, omega),
                   omega_l=omega, tau_l=duration_au, screening=screening)

    def with_screening(self, screening: Screening) -> "IrPulse":
        return IrPulse(self.a0, self.omega_l, self.tau_l, screening)


def xuv_envelope(t, tau, pulse: XuvPulse):
    """Complex XUV amplitude A_X(t - tau); peak modulus at t = tau."""
    dt = np.asarray(t, dtype=float) - tau
    x = dt / pulse.tau_x
    return pulse.peak_amplitude * np.exp(-LN4 * x * x - 1j * pulse.omega_x * dt)


def ir_vector_potential(t, pulse: IrPulse):
    """IR vector potential A(t); identically zero when screening is OFF."""
    a0 = pulse.effective_a0
    if a0 == 0.0:
        return np.zeros_like(np.asarray(t, dtype=float))
    t = np.asarray(t, dtype=float)
    x = t / pulse.tau_l
    return a0 * np.sin(pulse.omega_l * t) * np.exp(-LN4 * x * x)


def amplitude_from_intensity(intensity_wcm2: float, omega_l: float) -> float:
    """Peak vector-potential amplitude from the peak intensity.

    Monochromatic relation E = -dA/dt applied to the carrier:
    E0 = sqrt(I / I_au), a0 = E0 / omega_l.
    """
    if intensity_wcm2 <= 0:
        raise ValueError(f"intensity must be positive, got {intensity_wcm2}")
    e0 = math.sqrt(intensity_wcm2 / units.AU_INTENSITY_WCM2)
    return e0 / omega_l


def peak_vector_potential_time(pulse: IrPulse) -> float:
    """Time t > 0 maximizing |A(t)| (the first carrier crest under the envelope)."""
    ts = np.linspace(0.0, pulse.period, 4001)
    a = np.abs(ir_vector_potential(ts, pulse.with_screening(Screening.SCREENED)))
    return float(ts[np.argmax(a)])
