"""Discrete-time dynamics on the hypercube with Gaussian energies.

One step from state sigma: with probability exp(-beta*sqrt(N)*max(E_sigma,0))
move to a uniformly random single-flip neighbor, otherwise stay.  States with
nonpositive energy leave with probability one, so only the high-energy
outliers trap the walk.

The "top" is the set of states whose energy clears the extreme-value
threshold u_N(E); its mean size is calibrated to approach e^{-E}.  The
two-time observable Pi_N(n, m) is the probability, starting uniformly on the
top, that no flip lands in the top at any step in (n, n+m] -- the discrete
analog of the no-jump function, and after speeding time up by
c = exp(beta*sqrt(N)*u_N(E)) it is compared against the heavy-tailed limit
H(theta) with effective index beta_c/beta, beta_c = sqrt(2 ln 2).

Sojourns are compressed geometrically, so simulation cost scales with the
number of flips, not the number of steps; that is what makes the
exponentially rescaled horizons reachable.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from . import kernels
from .analytic import no_jump_aging
from .graphs import hypercube
from .landscape import extreme_value_threshold, sample_landscape
from .streams import (DOMAIN_FLIP_PATH, DOMAIN_LANDSCAPE, UniformSource,
                      stream, subseed)
from .trapwalk import DEFAULT_EVENT_CAP, EventBudgetError
from .twopoint import TwoPointEstimate, pooled_estimate

__all__ = [
    "BETA_CRIT", "RemChain", "RemPath", "RemEnsemble", "make_chain",
    "rem_transition", "transition_matrix", "simulate_rem", "state_at",
    "expected_top_size", "effective_alpha", "time_speedup",
    "pi_event_paths", "estimate_Pi_N", "rescaled_aging_check",
    "RemAgingReport",
]

BETA_CRIT = math.sqrt(2.0 * math.log(2.0))

MAX_STEP_BUDGET = float(1 << 53)


@dataclass(frozen=True, eq=False)
class RemChain:
    """Quenched dynamics: 2**N Gaussian energies plus derived tables."""

    N: int
    beta: float
    E: float
    energies: np.ndarray = field(repr=False)
    threshold: float = 0.0
    top: np.ndarray = field(repr=False, default=None)
    top_mask: np.ndarray = field(repr=False, default=None)
    flip_prob: np.ndarray = field(repr=False, default=None)

    @property
    def n_states(self):
        return 1 << self.N

    @property
    def top_size(self):
        return len(self.top)


def make_chain(N, beta, E, seed):
    """Sample a landscape on the N-hypercube and precompute chain tables."""
    scape = sample_landscape(hypercube(N), "gaussian", beta, seed=seed)
    return chain_from_energies(N, beta, E, scape.energies)


def chain_from_energies(N, beta, E, energies):
    energies = np.ascontiguousarray(energies, dtype=np.float64)
    if len(energies) != (1 << N):
        raise ValueError("need one energy per hypercube state")
    if beta <= BETA_CRIT:
        warnings.warn(f"beta={beta:g} is not above the freezing point "
                      f"{BETA_CRIT:.6f}; aging behavior is not expected",
                      stacklevel=3)
    thr = extreme_value_threshold(N, E)
    mask = (energies >= thr).astype(np.uint8)
    top = np.flatnonzero(mask).astype(np.int64)
    flip_prob = np.exp(-beta * math.sqrt(N) * np.maximum(energies, 0.0))
    return RemChain(N=N, beta=float(beta), E=float(E), energies=energies,
                    threshold=float(thr), top=top, top_mask=mask,
                    flip_prob=np.ascontiguousarray(flip_prob))


def expected_top_size(N, E):
    """Mean number of states above the threshold: 2**N times the Gaussian
    upper tail at u_N(E); approaches e^{-E} as N grows."""
    u = extreme_value_threshold(N, E)
    return float(2.0 ** N * (1.0 - ndtr(u)))


def effective_alpha(beta):
    """Stability index of the limiting arcsine law for the sped-up chain."""
    if beta <= BETA_CRIT:
        raise ValueError("effective index needs beta above the freezing point")
    return BETA_CRIT / beta


def time_speedup(N, beta, E):
    """Steps per unit rescaled time: exp(beta*sqrt(N)*u_N(E))."""
    return math.exp(beta * math.sqrt(N) * extreme_value_threshold(N, E))


def rem_transition(chain, sigma, rng):
    """One literal step of the kernel; the slow reference dynamics."""
    p = chain.flip_prob[sigma]
    if rng.random() < p:
        j = min(int(rng.random() * chain.N), chain.N - 1)
        return int(sigma) ^ (1 << j)
    return int(sigma)


def transition_matrix(chain):
    """Dense one-step matrix; tiny N only (exhaustive oracles)."""
    n = chain.n_states
    if chain.N > 12:
        raise ValueError("dense transition matrix limited to N <= 12")
    P = np.zeros((n, n))
    for x in range(n):
        p = chain.flip_prob[x]
        P[x, x] = 1.0 - p
        for j in range(chain.N):
            P[x, x ^ (1 << j)] += p / chain.N
    return P


@dataclass(frozen=True)
class RemPath:
    """Flip steps and the state after each flip; x0 holds before the first."""

    x0: int
    flip_steps: np.ndarray = field(repr=False)
    states: np.ndarray = field(repr=False)
    n_steps: int

    @property
    def n_flips(self):
        return len(self.flip_steps)


def _resolve_start(chain, start, src):
    if start == "top":
        if chain.top_size == 0:
            raise ValueError("top set is empty; raise E or resample")
        k = min(int(src.next() * chain.top_size), chain.top_size - 1)
        return int(chain.top[k])
    if start == "uniform":
        return min(int(src.next() * chain.n_states), chain.n_states - 1)
    x0 = int(start)
    if not 0 <= x0 < chain.n_states:
        raise ValueError("start state out of range")
    return x0


def simulate_rem(chain, n_steps, rng, start="top",
                 flip_cap=DEFAULT_EVENT_CAP):
    """Full flip history over n_steps; sojourns drawn geometrically."""
    if n_steps < 0 or n_steps > MAX_STEP_BUDGET:
        raise ValueError("n_steps must lie in [0, 2^53]")
    src = rng if isinstance(rng, UniformSource) else UniformSource(rng)
    x0 = _resolve_start(chain, start, src)
    state = np.array([0.0, float(x0), 0.0])
    cap = 1024
    steps_parts, states_parts = [], []
    total = 0
    while True:
        rec_s = np.empty(cap, dtype=np.int64)
        rec_x = np.empty(cap, dtype=np.int64)
        status, nrec = kernels.flip_record(
            chain.flip_prob, chain.N, x0, int(n_steps), float(flip_cap),
            rec_s, rec_x, state, src)
        if nrec:
            steps_parts.append(rec_s[:nrec].copy())
            states_parts.append(rec_x[:nrec].copy())
            total += nrec
        if status == kernels.CAP:
            raise EventBudgetError(f"exceeded {flip_cap:g} flips")
        if status == kernels.OK:
            break
        cap = min(cap * 2, 1 << 22)
    fs = (np.concatenate(steps_parts) if total
          else np.empty(0, dtype=np.int64))
    xs = (np.concatenate(states_parts) if total
          else np.empty(0, dtype=np.int64))
    return RemPath(x0=x0, flip_steps=fs, states=xs, n_steps=int(n_steps))


def state_at(path, step):
    """State at a step count (flips at exactly this step already applied)."""
    if not 0 <= step <= path.n_steps:
        raise ValueError("step outside the simulated range")
    k = int(np.searchsorted(path.flip_steps, step, side="right"))
    return path.x0 if k == 0 else int(path.states[k - 1])


def pi_event_paths(chain, n, m_grid, n_paths, seed, disorder_index=0,
                   flip_cap=DEFAULT_EVENT_CAP):
    """MC cell for Pi_N on one chain, all window lengths in one pass.

    The first top entry after step n decides every window at once:
    the no-entry indicator for length m is (no entry at all, or entry
    beyond n+m).  Returns (paths, per-m no-entry counts, total flips).
    """
    ms = np.asarray(m_grid, dtype=np.float64)
    if n < 0 or np.any(ms < 0) or n + ms[-1] > MAX_STEP_BUDGET:
        raise ValueError("step window must lie within [0, 2^53]")
    if np.any(np.diff(ms) < 0):
        raise ValueError("m_grid must be ascending")
    horizon = int(n + ms[-1])
    hits = np.zeros(len(ms))
    flips_total = 0
    for p in range(n_paths):
        src = UniformSource(stream(seed, DOMAIN_FLIP_PATH, disorder_index, p))
        x0 = _resolve_start(chain, "top", src)
        status, entry, flips = kernels.flip_first_entry(
            chain.flip_prob, chain.top_mask, chain.N, x0, int(n),
            horizon, int(flip_cap), src)
        if status == kernels.CAP:
            raise EventBudgetError(f"exceeded {flip_cap:g} flips "
                                   f"in a window of {horizon:g} steps")
        if entry < 0:
            hits += 1.0
        else:
            hits += entry > n + ms
        flips_total += flips
    return n_paths, hits, flips_total


@dataclass(frozen=True)
class RemEnsemble:
    N: int
    beta: float
    E: float
    n_disorders: int
    n_paths: int
    seed: int
    flip_cap: float = DEFAULT_EVENT_CAP

    def __post_init__(self):
        if self.n_disorders < 1 or self.n_paths < 1:
            raise ValueError("need at least one disorder and one path")

    @property
    def averaging(self):
        return "quenched" if self.n_disorders == 1 else "annealed"


def disorder_chain(ens, d):
    return make_chain(ens.N, ens.beta, ens.E,
                      seed=subseed(ens.seed, DOMAIN_LANDSCAPE, d))


def _pi_cell(task):
    ens, d, n, m_grid = task
    chain = disorder_chain(ens, d)
    if chain.top_size == 0:
        return None
    paths, hits, flips = pi_event_paths(chain, n, m_grid, ens.n_paths,
                                        ens.seed, disorder_index=d,
                                        flip_cap=ens.flip_cap)
    return paths, hits, flips, chain.top_size


def _pi_many(ens, n, m_grid, mapper=None):
    """Per-m (value, stderr) plus top-size list, annealed over disorders.

    The observable is normalized by the top size, so it is undefined on a
    landscape whose top is empty; such disorders are skipped with a warning
    (the average is conditional on a non-empty top).
    """
    run = mapper or map
    cells = list(run(_pi_cell, [(ens, d, n, m_grid)
                                for d in range(ens.n_disorders)]))
    skipped = sum(c is None for c in cells)
    cells = [c for c in cells if c is not None]
    if not cells:
        raise ValueError("every sampled landscape had an empty top; raise E")
    if skipped:
        warnings.warn(f"skipped {skipped} of {ens.n_disorders} landscapes "
                      "with an empty top", stacklevel=3)
    values = np.empty(len(m_grid))
    errs = np.empty(len(m_grid))
    for k in range(len(m_grid)):
        values[k], errs[k] = pooled_estimate([(c[0], float(c[1][k]))
                                              for c in cells])
    return values, errs, [c[3] for c in cells]


def estimate_Pi_N(ens, n, m, mapper=None):
    """Annealed Pi_N(n, m): no flip lands in the top at steps in (n, n+m]."""
    values, errs, _ = _pi_many(ens, n, np.array([float(m)]), mapper)
    return TwoPointEstimate(kind="Pi", averaging=ens.averaging,
                            t_w=float(n), t=float(m), value=float(values[0]),
                            stderr=float(errs[0]),
                            n_paths=ens.n_disorders * ens.n_paths,
                            n_disorders=ens.n_disorders)


@dataclass(frozen=True)
class RemAgingReport:
    """Per-theta comparison of the sped-up chain against the limit curve."""

    N: int
    beta: float
    E: float
    t_w: float
    speedup: float
    theta: np.ndarray = field(repr=False)
    pi: np.ndarray = field(repr=False)
    stderr: np.ndarray = field(repr=False)
    limit: np.ndarray = field(repr=False)
    feasible: np.ndarray = field(repr=False)

    @property
    def ratio(self):
        with np.errstate(invalid="ignore"):
            return np.where(self.feasible, self.pi / self.limit, np.nan)

    @property
    def max_abs_ratio_error(self):
        r = self.ratio[self.feasible]
        if len(r) == 0:
            return math.nan
        return float(np.max(np.abs(r - 1.0)))

    def rows(self):
        out = []
        for k in range(len(self.theta)):
            out.append((self.N, self.beta, self.E, self.t_w,
                        float(self.theta[k]), float(self.pi[k]),
                        float(self.limit[k]),
                        float(self.ratio[k]) if self.feasible[k] else math.nan,
                        float(self.stderr[k])))
        return out


def rescaled_aging_check(ens, theta_grid, t_w, mapper=None):
    """Pi_N over the window (c*t_w, c*t_w*(1+theta)] against H(theta).

    Cells whose rescaled horizon exceeds the exact-integer step budget are
    reported infeasible rather than run.
    """
    theta = np.asarray(theta_grid, dtype=np.float64)
    if np.any(theta <= 0) or np.any(np.diff(theta) <= 0):
        raise ValueError("theta must be positive and strictly increasing")
    c = time_speedup(ens.N, ens.beta, ens.E)
    alpha = effective_alpha(ens.beta)
    pi = np.full(len(theta), np.nan)
    se = np.full(len(theta), np.nan)
    limit = np.array([no_jump_aging(th, alpha) for th in theta])
    n = round(c * t_w)
    ms = np.array([float(round(c * t_w * th)) for th in theta])
    feasible = n + ms <= MAX_STEP_BUDGET
    if np.any(feasible):
        values, errs, _ = _pi_many(ens, n, ms[feasible], mapper)
        pi[feasible] = values
        se[feasible] = errs
    return RemAgingReport(N=ens.N, beta=ens.beta, E=ens.E, t_w=float(t_w),
                          speedup=c, theta=theta, pi=pi, stderr=se,
                          limit=limit, feasible=feasible)
