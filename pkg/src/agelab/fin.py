"""Singular diffusion through a heavy-tailed atomic speed measure.

The measure is a Poisson cloud of weighted atoms on a window [-L, L]; the
diffusion time-changed through it, restricted to the atoms, is an exact
Markov jump chain with gambler's-ruin geometry: from an atom with left gap
g_l and right gap g_r the walker holds for an Exponential time of mean
v * 2*g_l*g_r/(g_l+g_r), then steps right with probability g_l/(g_l+g_r).
Extreme atoms reflect, and every visit to them is counted as a
window-truncation diagnostic.  Entry from the origin lands on the right
bracketing atom with the gambler's-ruin probability.

Estimated here: the annealed same-atom probability f(theta) between times 1
and 1+theta, and the annealed law F of the weight occupied at time 1, which
feeds the subaging limit formula.
"""

import math
import warnings
import weakref
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .analytic import WeightCdf
from .streams import (DOMAIN_DIFFUSION_PATH, DOMAIN_SPEED_MEASURE,
                      UniformSource, stream, subseed)
from .trapwalk import DEFAULT_EVENT_CAP, EventBudgetError
from .twopoint import pooled_estimate

__all__ = [
    "RandomSpeedMeasure", "FinPath", "FinEnsemble",
    "sample_speed_measure", "chain_tables", "entry_split",
    "simulate_fin", "atom_at", "occupation_fractions",
    "reversibility_residual", "estimate_f_theta", "estimate_F",
    "raw_weight_cdf", "FThetaCurve", "WeightTable",
]


@dataclass(frozen=True, eq=False)
class RandomSpeedMeasure:
    """Sorted weighted atoms on [-L, L], weights at least v_min."""

    positions: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    L: float
    v_min: float
    alpha: float
    seed: int | None = None

    @property
    def n_atoms(self):
        return len(self.positions)

    def total_weight(self):
        return float(np.sum(self.weights))


@dataclass(frozen=True)
class FinPath:
    """Piecewise-constant atom occupancy; atoms[k] holds from jump_times[k]."""

    entry_atom: int
    jump_times: np.ndarray = field(repr=False)
    atoms: np.ndarray = field(repr=False)
    duration: float
    edge_entries: int = 0

    @property
    def n_jumps(self):
        return len(self.jump_times)


def sample_speed_measure(L, v_min, alpha, seed):
    """Poisson(2L * v_min**-alpha) atoms, uniform positions, Pareto weights.

    The weight tail is P(v > w) = (w/v_min)**-alpha for w >= v_min, the
    restriction of the intensity alpha * v**-(1+alpha) dx dv to weights
    above the cutoff.
    """
    if L <= 0 or v_min <= 0:
        raise ValueError("L and v_min must be positive")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    gen = stream(seed, DOMAIN_SPEED_MEASURE)
    n = int(gen.poisson(2.0 * L * v_min ** -alpha))
    if n == 0:
        raise ValueError(
            "sampled zero atoms; enlarge the window or lower the weight cutoff")
    x = np.sort(gen.uniform(-L, L, size=n))
    if np.any(np.diff(x) <= 0.0):
        raise ValueError("degenerate atom positions (coincident draws)")
    u = gen.random(n)
    v = v_min * (1.0 - u) ** (-1.0 / alpha)
    return RandomSpeedMeasure(positions=x, weights=v, L=float(L),
                              v_min=float(v_min), alpha=float(alpha),
                              seed=seed)


_TABLE_CACHE = weakref.WeakKeyDictionary()


def chain_tables(rho):
    """(hold_mean, p_right) per atom; extreme atoms reflect inward."""
    cached = _TABLE_CACHE.get(rho)
    if cached is not None:
        return cached
    x, v = rho.positions, rho.weights
    if len(x) < 2:
        raise ValueError("need at least two atoms for the atom chain")
    gaps = np.diff(x)
    hold = np.empty(len(x))
    p_right = np.empty(len(x))
    g_l, g_r = gaps[:-1], gaps[1:]
    hold[1:-1] = v[1:-1] * 2.0 * g_l * g_r / (g_l + g_r)
    p_right[1:-1] = g_l / (g_l + g_r)
    hold[0] = 2.0 * v[0] * gaps[0]
    p_right[0] = 1.0
    hold[-1] = 2.0 * v[-1] * gaps[-1]
    p_right[-1] = 0.0
    tables = (np.ascontiguousarray(hold), np.ascontiguousarray(p_right))
    _TABLE_CACHE[rho] = tables
    return tables


def entry_split(rho):
    """(i_left, i_right, p_right_entry) for entry from the origin."""
    x = rho.positions
    i_right = int(np.searchsorted(x, 0.0))
    if i_right == 0 or i_right == len(x):
        raise ValueError("origin is not strictly inside the atom hull")
    i_left = i_right - 1
    p = (0.0 - x[i_left]) / (x[i_right] - x[i_left])
    return i_left, i_right, float(p)


def reversibility_residual(rho):
    """Max relative detailed-balance violation over adjacent atom pairs.

    Both v_i * rate(i -> i+1) and v_{i+1} * rate(i+1 -> i) equal half the
    reciprocal of the gap between the atoms, so the residual is pure
    floating-point noise for a correct table.
    """
    hold, p_right = chain_tables(rho)
    v = rho.weights
    flow_right = v[:-1] * p_right[:-1] / hold[:-1]
    flow_left = v[1:] * (1.0 - p_right[1:]) / hold[1:]
    return float(np.max(np.abs(flow_right - flow_left)
                        / np.maximum(flow_right, flow_left)))


def _as_source(rng):
    if isinstance(rng, UniformSource):
        return rng
    return UniformSource(rng)


def simulate_fin(rho, duration, rng, event_cap=DEFAULT_EVENT_CAP):
    """Exact atom-chain path on [0, duration]; reflects at extreme atoms.

    The entry draw happens here, before the kernel call, so the entry atom
    can be recorded; the kernel receives a pre-entered state and consumes
    the remaining uniforms in the same order as its own entry branch would.
    """
    if duration < 0:
        raise ValueError("duration must be >= 0")
    hold, p_right = chain_tables(rho)
    i_left, i_right, p_entry = entry_split(rho)
    src = _as_source(rng)
    entry = i_right if src.next() < p_entry else i_left
    state = np.array([0.0, float(entry), 0.0, 1.0])
    cap = 1024
    times_parts, atoms_parts = [], []
    total = 0
    while True:
        rec_t = np.empty(cap)
        rec_a = np.empty(cap, dtype=np.int64)
        status, nrec = kernels.chain_record(
            hold, p_right, p_entry, i_left, i_right, float(duration),
            float(event_cap), rec_t, rec_a, state, src)
        if nrec:
            times_parts.append(rec_t[:nrec].copy())
            atoms_parts.append(rec_a[:nrec].copy())
            total += nrec
        if status == kernels.CAP:
            raise EventBudgetError(
                f"atom chain exceeded {event_cap:g} jumps before t={duration:g}")
        if status == kernels.OK:
            break
        cap = min(cap * 2, 1 << 22)
    jt = np.concatenate(times_parts) if total else np.empty(0)
    atoms = (np.concatenate(atoms_parts) if total
             else np.empty(0, dtype=np.int64))
    last = rho.n_atoms - 1
    edge_entries = int(entry in (0, last))
    if total:
        edge_entries += int(np.count_nonzero((atoms == 0) | (atoms == last)))
    return FinPath(entry_atom=int(entry), jump_times=jt, atoms=atoms,
                   duration=float(duration), edge_entries=edge_entries)


def atom_at(path, t):
    """Atom occupied at time t (right-continuous)."""
    if not 0.0 <= t <= path.duration:
        raise ValueError("t outside the simulated window")
    k = int(np.searchsorted(path.jump_times, t, side="right"))
    return path.entry_atom if k == 0 else int(path.atoms[k - 1])


def occupation_fractions(rho, path):
    """Fraction of [0, duration] spent at each atom."""
    occ = np.zeros(rho.n_atoms)
    times = np.concatenate([[0.0], path.jump_times, [path.duration]])
    states = np.concatenate([[path.entry_atom], path.atoms]).astype(np.int64)
    np.add.at(occ, states, np.diff(times))
    return occ / path.duration


@dataclass(frozen=True)
class FinEnsemble:
    """Annealed ensemble: fresh measure per disorder, independent paths."""

    L: float
    v_min: float
    alpha: float
    n_disorders: int
    n_paths: int
    seed: int
    base_time: float = 1.0
    event_cap: float = DEFAULT_EVENT_CAP

    def __post_init__(self):
        if self.n_disorders < 1 or self.n_paths < 1:
            raise ValueError("need at least one disorder and one path")
        if self.base_time <= 0:
            raise ValueError("base_time must be positive")


def disorder_measure(ens, d):
    return sample_speed_measure(ens.L, ens.v_min, ens.alpha,
                                seed=subseed(ens.seed, DOMAIN_SPEED_MEASURE, d))


def _sample_fin_disorder(task):
    """Atom occupancies at the query times for every path of one measure.

    Returns (atoms matrix, paths-with-edge-visits count, measure weights).
    """
    ens, d, qtimes = task
    rho = disorder_measure(ens, d)
    hold, p_right = chain_tables(rho)
    i_left, i_right, p_entry = entry_split(rho)
    out_atom = np.empty((ens.n_paths, len(qtimes)), dtype=np.int64)
    out_cnt = np.empty(len(qtimes), dtype=np.int64)
    edge_paths = 0
    for p in range(ens.n_paths):
        src = UniformSource(stream(ens.seed, DOMAIN_DIFFUSION_PATH, d, p))
        status, _, edges = kernels.chain_query(
            hold, p_right, p_entry, i_left, i_right, float(qtimes[-1]),
            float(ens.event_cap), qtimes, out_atom[p], out_cnt, src)
        if status == kernels.CAP:
            raise EventBudgetError(
                f"atom chain exceeded {ens.event_cap:g} jumps")
        edge_paths += int(edges > 0)
    return out_atom, edge_paths, rho.weights


def _collect_fin(ens, qtimes, mapper=None):
    qtimes = np.ascontiguousarray(qtimes, dtype=np.float64)
    run = mapper or map
    tasks = [(ens, d, qtimes) for d in range(ens.n_disorders)]
    return list(run(_sample_fin_disorder, tasks))


def _warn_edges(blocks, ens):
    touched = sum(b[1] for b in blocks)
    if touched:
        msg = (f"{touched} of {ens.n_disorders * ens.n_paths} paths visited "
               f"an extreme atom; enlarge L={ens.L:g} for unbiased estimates")
        warnings.warn(msg, stacklevel=3)
        return touched, msg
    return 0, ""


@dataclass(frozen=True)
class FThetaCurve:
    theta: np.ndarray = field(repr=False)
    value: np.ndarray = field(repr=False)
    stderr: np.ndarray = field(repr=False)
    n_paths: int
    n_disorders: int
    edge_paths: int = 0
    warning: str = ""


def estimate_f_theta(theta_grid, ens, mapper=None):
    """Annealed same-atom probability between base_time and (1+theta) of it."""
    theta = np.asarray(theta_grid, dtype=np.float64)
    if np.any(theta < 0):
        raise ValueError("theta must be >= 0")
    s = ens.base_time
    qtimes = np.unique(np.concatenate([[s], s * (1.0 + theta)]))
    blocks = _collect_fin(ens, qtimes, mapper)
    i0 = int(np.searchsorted(qtimes, s))
    values = np.empty(len(theta))
    errs = np.empty(len(theta))
    for k, th in enumerate(theta):
        j = int(np.searchsorted(qtimes, s * (1.0 + th)))
        cells = [(a.shape[0], float(np.count_nonzero(a[:, j] == a[:, i0])))
                 for a, _, _ in blocks]
        values[k], errs[k] = pooled_estimate(cells)
    edge_paths, msg = _warn_edges(blocks, ens)
    return FThetaCurve(theta=theta, value=values, stderr=errs,
                       n_paths=ens.n_disorders * ens.n_paths,
                       n_disorders=ens.n_disorders,
                       edge_paths=edge_paths, warning=msg)


@dataclass(frozen=True)
class WeightTable:
    """Annealed CDF of the occupied-atom weight, tabulated on u_grid."""

    u: np.ndarray = field(repr=False)
    F: np.ndarray = field(repr=False)
    stderr: np.ndarray = field(repr=False)
    cdf: WeightCdf = field(repr=False)
    n_paths: int = 0
    n_disorders: int = 0
    edge_paths: int = 0
    warning: str = ""


def estimate_F(u_grid, ens, mapper=None):
    """Annealed law of the atom weight occupied at base_time.

    The full-resolution empirical CDF (``cdf``) is the object to feed into
    the subaging limit formula; the tabulated values carry cluster-robust
    error bars on the requested grid.
    """
    u_grid = np.asarray(u_grid, dtype=np.float64)
    if np.any(np.diff(u_grid) <= 0):
        raise ValueError("u_grid must be strictly increasing")
    qtimes = np.array([ens.base_time])
    blocks = _collect_fin(ens, qtimes, mapper)
    occupied = [w[a[:, 0]] for a, _, w in blocks]
    F = np.empty(len(u_grid))
    errs = np.empty(len(u_grid))
    for k, u in enumerate(u_grid):
        cells = [(len(vo), float(np.count_nonzero(vo <= u)))
                 for vo in occupied]
        F[k], errs[k] = pooled_estimate(cells)
    cdf = WeightCdf.from_samples(np.concatenate(occupied))
    edge_paths, msg = _warn_edges(blocks, ens)
    return WeightTable(u=u_grid, F=F, stderr=errs, cdf=cdf,
                       n_paths=ens.n_disorders * ens.n_paths,
                       n_disorders=ens.n_disorders,
                       edge_paths=edge_paths, warning=msg)


def raw_weight_cdf(ens, mapper=None):
    """Empirical CDF of all sampled atom weights across the same measures.

    Comparison target for the size-bias check: the occupied-atom law should
    stochastically dominate this one.
    """
    run = mapper or map
    weights = list(run(_measure_weights, [(ens, d)
                                          for d in range(ens.n_disorders)]))
    return WeightCdf.from_samples(np.concatenate(weights))


def _measure_weights(task):
    ens, d = task
    return disorder_measure(ens, d).weights
