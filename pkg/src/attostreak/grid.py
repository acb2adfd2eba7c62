"""Gauss-Legendre momentum strips around a final photoelectron momentum.

Each final kinetic energy gets its own quadrature strip
``[p_f - half_width, p_f + half_width]``; the node nearest p_f is tagged as
the final-state node and the reported kinetic energy is recomputed from the
snapped node.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_HALF_WIDTH = 0.5
DEFAULT_N_POINTS = 549


def gauss_legendre(n: int, a: float, b: float):
    """Gauss-Legendre nodes/weights mapped affinely onto [a, b]."""
    if n < 1:
        raise ValueError(f"need at least one quadrature point, got {n}")
    if not b > a:
        raise ValueError(f"empty interval [{a}, {b}]")
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    return mid + half * x, half * w


@dataclass(frozen=True, eq=False)
class MomentumGrid:
    nodes: np.ndarray
    weights: np.ndarray
    p_f: float
    f_index: int
    half_width: float
    n_points: int = field(default=0)

    def __post_init__(self):
        if self.n_points == 0:
            object.__setattr__(self, "n_points", len(self.nodes))
        if self.n_points < 3:
            raise ValueError("momentum strip needs at least 3 nodes")
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")

    @property
    def p_f_snapped(self) -> float:
        """The mesh node playing the role of the final momentum."""
        return float(self.nodes[self.f_index])

    def snapped_energy(self, work_function: float) -> float:
        """Kinetic energy recomputed from the snapped final node."""
        return 0.5 * self.p_f_snapped**2 + work_function


def build_strip(e_f: float, work_function: float,
                half_width: float = DEFAULT_HALF_WIDTH,
                n: int = DEFAULT_N_POINTS) -> MomentumGrid:
    """Quadrature strip centered at p_f = sqrt(2 (E_f - W))."""
    if e_f <= work_function:
        raise ValueError(
            f"final energy {e_f} does not exceed the work function "
            f"{work_function}: the electron cannot escape"
        )
    p_f = np.sqrt(2.0 * (e_f - work_function))
    nodes, weights = gauss_legendre(n, p_f - half_width, p_f + half_width)
    f_index = int(np.argmin(np.abs(nodes - p_f)))
    return MomentumGrid(nodes=nodes, weights=weights, p_f=float(p_f),
                        f_index=f_index, half_width=half_width, n_points=n)
