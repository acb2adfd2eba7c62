"""Hartree atomic-unit conversion constants.

All internal arithmetic is in atomic units; these constants are the single
place where eV, attoseconds, W/cm^2 and nanometers are converted.
"""

HARTREE_EV = 27.2114
AU_TIME_AS = 24.18884
AU_INTENSITY_WCM2 = 3.50945e16
BOHR_PER_NM = 18.897


def ev_to_au(energy_ev):
    return energy_ev / HARTREE_EV


def au_to_ev(energy_au):
    return energy_au * HARTREE_EV


def attoseconds_to_au(t_as):
    return t_as / AU_TIME_AS


def au_to_attoseconds(t_au):
    return t_au * AU_TIME_AS


def nm_to_bohr(z_nm):
    return z_nm * BOHR_PER_NM


def bohr_to_nm(z_au):
    return z_au / BOHR_PER_NM
