"""Random energy landscapes and trap depths on a graph.

A landscape assigns every vertex an i.i.d. energy E_x >= 0 (exponential) or
E_x real (gaussian) and the trap depth tau(x) = exp(beta * E_x).  With
exponential energies the depths are Pareto: P(tau > a) = a^(-alpha) for
a >= 1 with alpha = 1/beta, which is the heavy tail all the aging behavior
flows from.

Energies are drawn vertex 0, 1, 2, ... in a single stream, so landscapes on
nested graphs with the same seed agree on the shared vertex prefix.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .streams import DOMAIN_LANDSCAPE, stream

DISTRIBUTIONS = ("exponential", "gaussian")


@dataclass(frozen=True, eq=False)
class EnergyLandscape:
    graph: object
    dist: str
    beta: float
    seed: int
    energies: np.ndarray = field(repr=False)
    depths: np.ndarray = field(repr=False)

    @property
    def alpha(self):
        """Tail exponent of the depth law (exponential energies only)."""
        if self.dist != "exponential":
            raise ValueError("alpha is defined for exponential energies only")
        return 1.0 / self.beta


def sample_landscape(graph, dist, beta, seed):
    """Draw a landscape on `graph`; depths are exp(beta * E) exactly."""
    if dist not in DISTRIBUTIONS:
        raise ValueError(f"dist must be one of {DISTRIBUTIONS}, got {dist!r}")
    if beta <= 0:
        raise ValueError("beta must be positive")
    gen = stream(seed, DOMAIN_LANDSCAPE)
    if dist == "exponential":
        energies = gen.standard_exponential(graph.n)
    else:
        energies = gen.standard_normal(graph.n)
    depths = np.exp(beta * energies)
    return EnergyLandscape(graph, dist, beta, seed, energies, depths)


def depth_tail_check(scape, a_grid):
    """Empirical depth tail of a landscape against the exact Pareto tail.

    Returns one row per grid point a: (a, empirical P(tau > a), exact
    a^(-alpha), binomial stderr, z).  Only meaningful for exponential
    energies, where P(tau > a) = a^(-alpha) holds exactly for a >= 1.
    """
    if scape.dist != "exponential":
        raise ValueError("depth tails are Pareto only for exponential energies")
    alpha = scape.alpha
    n = len(scape.depths)
    rows = []
    for a in a_grid:
        exact = a ** (-alpha) if a >= 1.0 else 1.0
        emp = float(np.mean(scape.depths > a))
        se = math.sqrt(exact * (1.0 - exact) / n)
        z = (emp - exact) / se if se > 0 else 0.0
        rows.append((float(a), emp, exact, se, z))
    return rows


def extreme_value_threshold(N, E):
    """Centering sequence for the maximum of 2^N standard gaussians.

    Energies above u_N(E) form the 'top' of the hypercube landscape; the
    expected number of such vertices tends to exp(-E) as N grows.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    s = math.sqrt(2.0 * N * math.log(2.0))
    return s + E / s - (math.log(N * math.log(2.0)) + math.log(4.0 * math.pi)) / (2.0 * s)
