"""Momentum-space initial states: jellium valence band and 2p core band.

Valence electrons are jellium surface states below the Fermi level; core
electrons are a tight-binding 2p band built from a planar-averaged layer
structure factor and the momentum profile of an atomic 2p orbital bound in
a tuned Yukawa potential.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy.interpolate import CubicSpline

from . import units

# Standard Al jellium parameters (r_s = 2.07).
FERMI_MOMENTUM_AL = 0.9272
WORK_FUNCTION_AL = units.ev_to_au(4.0)
INTERLAYER_SPACING_AL = 3.8
CORE_BINDING_AL = units.ev_to_au(72.0)
# Thomas-Fermi screening length for the Al electron density.
YUKAWA_SCREENING_AL = 0.64
ESCAPE_DEPTH_AL = 7.5  # inelastic mean free path (~0.4 nm) for 2p emitters

POLE_GUARD = 1e-6


@dataclass(frozen=True)
class ValenceState:
    """Jellium surface state at bulk momentum k (binding relative to Fermi)."""

    k: float
    eps_k: float
    kappa: float
    eta_k: float
    weight: float

    @property
    def binding(self) -> float:
        return self.eps_k

    @property
    def state_id(self) -> str:
        return f"valence_k={self.k:.6f}"


@dataclass(frozen=True)
class CoreState:
    """Tight-binding 2p band state labelled by the Bloch phase theta."""

    theta: float
    eps_2p: float
    n_layers: int
    a_s: float
    weight: float
    escape_depth: float = math.inf

    @property
    def binding(self) -> float:
        return self.eps_2p

    @property
    def state_id(self) -> str:
        return f"core_theta={self.theta:.6f}"


InitialState = Union[ValenceState, CoreState]


def make_valence_state(k: float, fermi_momentum: float, work_function: float,
                       weight: float = 1.0) -> ValenceState:
    if not 0 < k <= fermi_momentum:
        raise ValueError(f"valence momentum {k} outside (0, k_F]")
    eps_k = 0.5 * (k * k - fermi_momentum * fermi_momentum)
    kappa = math.sqrt(2.0 * (work_function - eps_k))
    eta_k = -math.atan2(kappa, k)
    return ValenceState(k=k, eps_k=eps_k, kappa=kappa, eta_k=eta_k, weight=weight)


def jellium_wavefunction(state: ValenceState, p):
    """Time-independent momentum amplitude of a jellium valence state.

    The phase e^{-i eps_k t} is applied downstream when matrix elements are
    assembled.  Momenta within POLE_GUARD of +-k are rejected: the strip
    grids used here lie well above k_F, so the guard never fires in
    production runs.
    """
    p = np.asarray(p, dtype=float)
    if np.any(np.abs(p - state.k) < POLE_GUARD) or np.any(np.abs(p + state.k) < POLE_GUARD):
        raise ValueError(
            f"momentum sample within {POLE_GUARD} of the pole at k={state.k}"
        )
    phase = np.exp(1j * state.eta_k)
    return (1.0 / (p - state.k)
            + phase * phase / (p + state.k)
            - 2.0 * phase * math.cos(state.eta_k) / (p - 1j * state.kappa))


def structure_factor(theta: float, p, n_layers: int, a_s: float,
                     escape_depth: float = math.inf):
    """Planar-averaged layer sum: sum_l sin(l theta) e^{-i p z_l}, z_l = -(l-1/2) a_s.

    The momentum amplitude of a state localized at z_l is e^{-i p z_l} in
    the convention where psi(z) synthesizes as sum_n sqrt(w_n) c_n e^{i p z}
    — the same convention the jellium valence amplitudes follow (their
    surface-tail pole sits at p = +i kappa).  The layers z_l < 0 therefore
    enter with positive phase slope, placing the emitters inside the metal.

    A finite ``escape_depth`` lambda attenuates each layer's amplitude by
    e^{z_l / (2 lambda)} so that its emission intensity carries the usual
    inelastic-transport factor e^{-|z_l| / lambda}; the default (infinite
    depth) leaves the bare coherent layer sum.
    """
    if n_layers < 1:
        raise ValueError(f"need at least one layer, got {n_layers}")
    if not escape_depth > 0:
        raise ValueError(f"escape depth must be positive, got {escape_depth}")
    p = np.asarray(p, dtype=float)
    ell = np.arange(1, n_layers + 1)
    z_l = -(ell - 0.5) * a_s
    amp = np.sin(ell * theta) * np.exp(z_l / (2.0 * escape_depth))
    return amp @ np.exp(-1j * np.outer(z_l, p))


@dataclass(frozen=True, eq=False)
class AtomicOrbitalTable:
    """Planar-averaged 2p orbital sampled in momentum space.

    ``u2p`` is normalized so the quadrature of |u2p|^2 over the table is 1.
    """

    momenta: np.ndarray
    u2p: np.ndarray
    binding: float
    z_charge: float
    screening_length: float

    def interpolate(self, p):
        """Cubic-spline evaluation of u2p at arbitrary momenta within the table."""
        p = np.asarray(p, dtype=float)
        if np.any(p < self.momenta[0]) or np.any(p > self.momenta[-1]):
            raise ValueError("momentum sample outside the tabulated range")
        spline_re = CubicSpline(self.momenta, self.u2p.real)
        spline_im = CubicSpline(self.momenta, self.u2p.imag)
        return spline_re(p) + 1j * spline_im(p)


# ---------------------------------------------------------------------------
# Radial bound-state solver (Numerov on a log-spaced grid)
# ---------------------------------------------------------------------------

def _numerov_outward(g: np.ndarray, h: float):
    """Integrate y'' = g y outward; returns y and the interior node count.

    The solution is renormalized whenever it grows large, so only the shape
    (sign structure) is meaningful.
    """
    n = len(g)
    y = np.empty(n)
    y[0] = 0.0
    y[1] = 1e-12
    t = h * h / 12.0
    nodes = 0
    for i in range(1, n - 1):
        y[i + 1] = ((2.0 + 10.0 * t * g[i]) * y[i]
                    - (1.0 - t * g[i - 1]) * y[i - 1]) / (1.0 - t * g[i + 1])
        if y[i + 1] * y[i] < 0.0:
            nodes += 1
        if abs(y[i + 1]) > 1e100:
            y[: i + 2] /= 1e100
    return y, nodes


def _radial_shoot(z_charge: float, screening_length: float, energy: float,
                  l: int, x: np.ndarray):
    r = np.exp(x)
    v = -z_charge * np.exp(-r / screening_length) / r
    g = (l + 0.5) ** 2 + 2.0 * r * r * (v - energy)
    return _numerov_outward(g, x[1] - x[0])


def _bound_state_energy(z_charge: float, screening_length: float, l: int,
                        x: np.ndarray, target_nodes: int = 0,
                        tol: float = 1e-10):
    """Lowest l-wave eigenvalue with ``target_nodes`` radial nodes, by bisection.

    The node count of the outward solution jumps from ``target_nodes`` to
    ``target_nodes + 1`` exactly at the eigenvalue.  Returns None when the
    potential is too shallow to bind such a state.
    """
    e_lo = -0.5 * z_charge * z_charge - 1.0
    e_hi = -1e-9
    _, nodes_hi = _radial_shoot(z_charge, screening_length, e_hi, l, x)
    if nodes_hi <= target_nodes:
        return None
    while e_hi - e_lo > tol:
        e_mid = 0.5 * (e_lo + e_hi)
        _, nodes = _radial_shoot(z_charge, screening_length, e_mid, l, x)
        if nodes > target_nodes:
            e_hi = e_mid
        else:
            e_lo = e_mid
    return 0.5 * (e_lo + e_hi)


def _radial_wavefunction(z_charge: float, screening_length: float,
                         energy: float, l: int, x: np.ndarray):
    """Normalized u(r) = r R(r) for the converged eigenvalue.

    Outward integration blows up beyond the classical turning point once the
    energy is only bisection-accurate; the tail is replaced by the analytic
    exponential decay from the matching point.
    """
    r = np.exp(x)
    y, _ = _radial_shoot(z_charge, screening_length, energy, l, x)
    u = y * np.sqrt(r)
    # Match to exp(-kappa r) decay at the outer classical turning point.
    kappa = math.sqrt(-2.0 * energy)
    v = -z_charge * np.exp(-r / screening_length) / r
    veff = v + l * (l + 1) / (2.0 * r * r)
    turning = np.nonzero(veff < energy)[0]
    i_match = turning[-1] if len(turning) else len(r) // 2
    u[i_match:] = u[i_match] * np.exp(-kappa * (r[i_match:] - r[i_match]))
    norm = math.sqrt(np.trapezoid(u * u, r))
    return u / norm


def solve_yukawa_2p(target_binding: float,
                    screening_length: float = YUKAWA_SCREENING_AL,
                    p_max: float = 8.0, n_momenta: int = 1601,
                    r_min: float = 1e-6, r_max: float = 30.0,
                    n_radial: int = 4000,
                    binding_tol: float = 1e-6) -> AtomicOrbitalTable:
    """Tune Z of V(r) = -(Z/r) e^{-r/a} so the 2p level sits at -target_binding,
    then planar-average the m=0 orbital and transform it to momentum space.

    The planar average of the p_z-like orbital reduces to
    ubar(z) proportional to z * integral_{|z|}^inf u(r)/r dr (odd in z), whose
    sine transform gives the purely imaginary, odd u2p(p).
    """
    if target_binding <= 0:
        raise ValueError(f"target binding must be positive, got {target_binding}")
    x = np.linspace(math.log(r_min), math.log(r_max), n_radial)
    target_energy = -target_binding

    def eigenvalue(z):
        e = _bound_state_energy(z, screening_length, l=1, x=x)
        return 0.0 if e is None else e  # unbound counts as "too shallow"

    # Bracket the charge: the 2p level deepens monotonically with Z.
    z_lo, z_hi = 1.0, 4.0
    while eigenvalue(z_hi) > target_energy:
        z_lo = z_hi
        z_hi *= 2.0
        if z_hi > 256.0:
            raise RuntimeError("failed to bracket the Yukawa charge")
    while True:
        z_mid = 0.5 * (z_lo + z_hi)
        e_mid = eigenvalue(z_mid)
        if abs(e_mid - target_energy) < binding_tol:
            break
        if e_mid > target_energy:
            z_lo = z_mid
        else:
            z_hi = z_mid
        if z_hi - z_lo < 1e-12:
            raise RuntimeError("Yukawa charge bisection stalled")

    energy = e_mid
    u = _radial_wavefunction(z_mid, screening_length, energy, l=1, x=x)
    r = np.exp(x)

    # I(z) = integral_z^inf u(r)/r dr, then ubar(z) = z * I(z) for z > 0.
    integrand = u / r
    tail = np.concatenate([
        np.cumsum(((integrand[1:] + integrand[:-1]) * 0.5 * np.diff(r))[::-1])[::-1],
        [0.0],
    ])
    ubar = r * tail

    momenta = np.linspace(0.0, p_max, n_momenta)
    # Odd real ubar(z) -> u2p(p) = -2i * integral_0^inf sin(p z) ubar(z) dz.
    kernel = np.sin(np.outer(momenta, r))
    values = -2j * np.trapezoid(kernel * ubar, r, axis=1)
    norm = math.sqrt(np.trapezoid(np.abs(values) ** 2, momenta))
    values = values / norm
    return AtomicOrbitalTable(momenta=momenta, u2p=values, binding=-energy,
                              z_charge=z_mid, screening_length=screening_length)


# ---------------------------------------------------------------------------
# Orbital table cache
# ---------------------------------------------------------------------------

def _orbital_cache_key(target_binding, screening_length, p_max, n_momenta):
    payload = json.dumps({
        "target_binding": target_binding,
        "screening_length": screening_length,
        "p_max": p_max,
        "n_momenta": n_momenta,
    }, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def load_or_solve_yukawa_2p(target_binding: float,
                            screening_length: float = YUKAWA_SCREENING_AL,
                            cache_dir: Optional[Path] = None,
                            p_max: float = 8.0,
                            n_momenta: int = 1601) -> AtomicOrbitalTable:
    """Columnar-file cache around solve_yukawa_2p, invalidated by parameter hash."""
    if cache_dir is None:
        return solve_yukawa_2p(target_binding, screening_length,
                               p_max=p_max, n_momenta=n_momenta)
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    key = _orbital_cache_key(target_binding, screening_length, p_max, n_momenta)
    path = cache_dir / f"orbital_2p_{key}.tsv"
    if path.exists():
        return read_orbital_table(path)
    table = solve_yukawa_2p(target_binding, screening_length,
                            p_max=p_max, n_momenta=n_momenta)
    write_orbital_table(table, path)
    return table


def write_orbital_table(table: AtomicOrbitalTable, path: Path) -> None:
    meta = {
        "z_charge": table.z_charge,
        "screening_length": table.screening_length,
        "binding": table.binding,
    }
    with open(path, "w") as fh:
        fh.write(f"# {json.dumps(meta, sort_keys=True)}\n")
        fh.write("# p\tre_u2p\tim_u2p\n")
        for p, v in zip(table.momenta, table.u2p):
            fh.write(f"{p:.12e}\t{v.real:.12e}\t{v.imag:.12e}\n")


def read_orbital_table(path: Path) -> AtomicOrbitalTable:
    with open(path) as fh:
        meta = json.loads(fh.readline().lstrip("# "))
    data = np.loadtxt(path, comments="#", delimiter="\t")
    return AtomicOrbitalTable(momenta=data[:, 0],
                              u2p=data[:, 1] + 1j * data[:, 2],
                              binding=meta["binding"],
                              z_charge=meta["z_charge"],
                              screening_length=meta["screening_length"])


# ---------------------------------------------------------------------------
# Occupied-state enumeration
# ---------------------------------------------------------------------------

def enumerate_occupied(band: str, n_states: int,
                       fermi_momentum: float = FERMI_MOMENTUM_AL,
                       work_function: float = WORK_FUNCTION_AL,
                       core_binding: float = CORE_BINDING_AL,
                       n_layers: int = 20,
                       a_s: float = INTERLAYER_SPACING_AL,
                       escape_depth: float = ESCAPE_DEPTH_AL) -> list:
    """Uniform occupied-state meshes with equal weights summing to 1.

    Valence: k_j = j k_F / n on (0, k_F].  Core: midpoint theta mesh on
    [0, pi] (the endpoints carry vanishing tight-binding amplitude).
    """
    if n_states < 1:
        raise ValueError(f"need at least one occupied state, got {n_states}")
    weight = 1.0 / n_states
    if band == "valence":
        ks = fermi_momentum * np.arange(1, n_states + 1) / n_states
        return [make_valence_state(float(k), fermi_momentum, work_function, weight)
                for k in ks]
    if band == "core":
        thetas = math.pi * (np.arange(1, n_states + 1) - 0.5) / n_states
        return [CoreState(theta=float(th), eps_2p=-core_binding,
                          n_layers=n_layers, a_s=a_s, weight=weight,
                          escape_depth=escape_depth)
                for th in thetas]
    raise ValueError(f"unknown band {band!r}; expected 'valence' or 'core'")


@dataclass(frozen=True)
class BandModel:
    """Occupied states of one band plus the shared atomic orbital table."""

    band: str
    states: tuple
    orbital: Optional[AtomicOrbitalTable] = None

    def wavefunctions(self, p: np.ndarray) -> np.ndarray:
        """Matrix phi_i(p) of shape (n_states, len(p))."""
        return np.array([initial_wavefunction(s, p, self.orbital)
                         for s in self.states])

    @property
    def weights(self) -> np.ndarray:
        return np.array([s.weight for s in self.states])

    @property
    def bindings(self) -> np.ndarray:
        return np.array([s.binding for s in self.states])


def initial_wavefunction(state: InitialState, p,
                         orbital: Optional[AtomicOrbitalTable] = None):
    """Momentum amplitude phi_i(p) of either band's initial state."""
    if isinstance(state, ValenceState):
        return jellium_wavefunction(state, p)
    if orbital is None:
        raise ValueError("core states need an AtomicOrbitalTable")
    return (structure_factor(state.theta, p, state.n_layers, state.a_s,
                             state.escape_depth)
            * orbital.interpolate(p))


def build_band(band: str, n_states: int,
               fermi_momentum: float = FERMI_MOMENTUM_AL,
               work_function: float = WORK_FUNCTION_AL,
               core_binding: float = CORE_BINDING_AL,
               n_layers: int = 20,
               a_s: float = INTERLAYER_SPACING_AL,
               yukawa_a: float = YUKAWA_SCREENING_AL,
               escape_depth: float = ESCAPE_DEPTH_AL,
               cache_dir: Optional[Path] = None) -> BandModel:
    states = enumerate_occupied(band, n_states, fermi_momentum, work_function,
                                core_binding, n_layers, a_s, escape_depth)
    orbital = None
    if band == "core":
        orbital = load_or_solve_yukawa_2p(core_binding, yukawa_a,
                                          cache_dir=cache_dir)
    return BandModel(band=band, states=tuple(states), orbital=orbital)
