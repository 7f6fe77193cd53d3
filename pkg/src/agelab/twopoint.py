"""Monte Carlo two-time functions for walk ensembles.

R(t_w, t_w+t) is the probability the walk occupies the same vertex at both
times; Pi(t_w, t_w+t) the probability it has not jumped in between (jumps
exactly at t_w belong to the past, jumps exactly at t_w+t count).  Both are
estimated quenched (one landscape) or annealed (fresh landscape per
disorder index), with aging curves under the declared time scalings and a
collapse diagnostic across waiting times.

Sampling is organized so that every (disorder, path) pair owns a keyed
random stream: results are reproducible and independent of how disorders
are distributed over workers.  All theta points share trajectories within a
(disorder, t_w) block, which strongly correlates neighboring points and
sharpens collapse tests.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .graphs import parse_graph
from .landscape import sample_landscape
from .streams import DOMAIN_LANDSCAPE, DOMAIN_WALK_PATH, UniformSource, stream, subseed
from .trapwalk import WalkParams, jump_rates, query_positions

SCALINGS = ("linear", "power", "log")

KIND_SAME_STATE = "R"
KIND_NO_JUMP = "Pi"


@dataclass(frozen=True)
class WalkEnsemble:
    """Declares a quenched or annealed simulation ensemble.

    n_disorders landscapes (annealed) or one (quenched), n_paths walks per
    landscape.  disorder_offset shifts the disorder index range so that
    curves built for different waiting times can use disjoint, independent
    landscapes.
    """

    graph: str
    beta: float
    params: WalkParams
    n_disorders: int
    n_paths: int
    seed: int
    dist: str = "exponential"
    disorder_offset: int = 0

    def __post_init__(self):
        if self.n_disorders < 1 or self.n_paths < 1:
            raise ValueError("need at least one disorder and one path")

    @property
    def averaging(self):
        return "quenched" if self.n_disorders == 1 else "annealed"

    def disorder_ids(self):
        return range(self.disorder_offset, self.disorder_offset + self.n_disorders)


@dataclass(frozen=True)
class TwoPointEstimate:
    kind: str
    averaging: str
    t_w: float
    t: float
    value: float
    stderr: float
    n_paths: int
    n_disorders: int


@dataclass(frozen=True)
class AgingCurve:
    kind: str
    averaging: str
    scaling: str
    gamma: float | None
    t_w: float
    theta: np.ndarray = field(repr=False)
    t: np.ndarray = field(repr=False)
    value: np.ndarray = field(repr=False)
    stderr: np.ndarray = field(repr=False)
    n_paths: int = 0
    n_disorders: int = 0

    def scaling_tag(self):
        if self.scaling == "power":
            return f"power:{self.gamma!r}"
        return self.scaling


def scale_lags(scaling, t_w, theta_grid, gamma=None):
    """Time lags t for each theta under the declared scaling of t_w."""
    theta = np.asarray(theta_grid, dtype=np.float64)
    if np.any(theta < 0) or np.any(np.diff(theta) <= 0):
        raise ValueError("theta_grid must be nonnegative and strictly increasing")
    if scaling == "linear":
        return theta * t_w
    if scaling == "power":
        if gamma is None:
            raise ValueError("power scaling needs gamma")
        return theta * t_w ** gamma
    if scaling == "log":
        if t_w <= 1.0:
            raise ValueError("log scaling needs t_w > 1")
        return theta * t_w / math.log(t_w)
    raise ValueError(f"unknown scaling {scaling!r}, expected one of {SCALINGS}")


def disorder_landscape(ens, d):
    graph = parse_graph(ens.graph)
    return sample_landscape(graph, ens.dist, ens.beta,
                            seed=subseed(ens.seed, DOMAIN_LANDSCAPE, d))


def sample_disorder(ens, d, times):
    """Positions and jump counts for all paths of one disorder.

    Returns two (n_paths, len(times)) int64 arrays.  This is the unit of
    parallel work; the stream key (seed, d, p) makes the result independent
    of scheduling.
    """
    scape = disorder_landscape(ens, d)
    times = np.ascontiguousarray(times, dtype=np.float64)
    pos = np.empty((ens.n_paths, len(times)), dtype=np.int64)
    cnt = np.empty((ens.n_paths, len(times)), dtype=np.int64)
    for p in range(ens.n_paths):
        src = UniformSource(stream(ens.seed, DOMAIN_WALK_PATH, d, p))
        pos[p], cnt[p], _ = query_positions(scape, ens.params, times, src)
    return pos, cnt


def _collect(ens, times, mapper=None):
    """(disorder_id, positions, counts) for every disorder, in index order."""
    ids = list(ens.disorder_ids())
    run = mapper or map
    blocks = list(run(_collect_one, [(ens, d, times) for d in ids]))
    return list(zip(ids, blocks))


def _collect_one(task):
    ens, d, times = task
    return sample_disorder(ens, d, times)


def pooled_estimate(cells):
    """Pool per-disorder (n, sum) indicator cells.

    Value is the grand mean.  With one disorder the stderr is binomial; with
    several it is cluster-robust over disorder means, which is what makes
    annealed error bars honest when landscapes, not paths, dominate the
    variance.
    """
    n = sum(c[0] for c in cells)
    s = sum(c[1] for c in cells)
    v = s / n
    if len(cells) == 1:
        se = math.sqrt(max(v * (1.0 - v), 0.0) / n)
    else:
        D = len(cells)
        w = np.array([c[0] / n for c in cells])
        m = np.array([c[1] / c[0] for c in cells])
        se = math.sqrt(D / (D - 1) * float(np.sum(w ** 2 * (m - v) ** 2)))
    return v, se


def merge_cells(*cell_maps):
    """Merge {disorder_id: (n, sum)} maps; pooling after a merge reproduces
    the pooled estimate of the union exactly."""
    out = {}
    for cm in cell_maps:
        for d, (n, s) in cm.items():
            n0, s0 = out.get(d, (0, 0.0))
            out[d] = (n0 + n, s0 + s)
    return out


def _indicator_cells(blocks, i, j, kind):
    cells = {}
    for d, (pos, cnt) in blocks:
        if kind == KIND_SAME_STATE:
            ind = pos[:, i] == pos[:, j]
        elif kind == KIND_NO_JUMP:
            ind = cnt[:, j] == cnt[:, i]
        else:
            raise ValueError(f"unknown kind {kind!r}")
        cells[d] = (ind.shape[0], float(np.count_nonzero(ind)))
    return cells


def _query_times(t_w, lags):
    times = np.unique(np.concatenate([[t_w], t_w + np.atleast_1d(lags)]))
    return times


def estimate_R(ens, t_w, t, mapper=None):
    """Same-state probability at (t_w, t_w+t)."""
    return _estimate(ens, t_w, t, KIND_SAME_STATE, mapper)


def estimate_Pi(ens, t_w, t, mapper=None):
    """No-jump probability over (t_w, t_w+t]."""
    return _estimate(ens, t_w, t, KIND_NO_JUMP, mapper)


def _estimate(ens, t_w, t, kind, mapper):
    if t_w < 0 or t < 0:
        raise ValueError("t_w and t must be >= 0")
    times = _query_times(t_w, np.array([t]))
    blocks = _collect(ens, times, mapper)
    i = int(np.searchsorted(times, t_w))
    j = int(np.searchsorted(times, t_w + t))
    cells = _indicator_cells(blocks, i, j, kind)
    v, se = pooled_estimate(list(cells.values()))
    return TwoPointEstimate(kind=kind, averaging=ens.averaging, t_w=t_w, t=t,
                            value=v, stderr=se,
                            n_paths=ens.n_disorders * ens.n_paths,
                            n_disorders=ens.n_disorders)


def build_aging_curve(ens, kind, scaling, t_w, theta_grid, gamma=None,
                      mapper=None):
    """Two-point curve over theta at fixed t_w, all theta sharing paths."""
    theta = np.asarray(theta_grid, dtype=np.float64)
    lags = scale_lags(scaling, t_w, theta, gamma)
    times = _query_times(t_w, lags)
    blocks = _collect(ens, times, mapper)
    i0 = int(np.searchsorted(times, t_w))
    values = np.empty(len(theta))
    errs = np.empty(len(theta))
    for k, lag in enumerate(lags):
        j = int(np.searchsorted(times, t_w + lag))
        cells = _indicator_cells(blocks, i0, j, kind)
        values[k], errs[k] = pooled_estimate(list(cells.values()))
    return AgingCurve(kind=kind, averaging=ens.averaging, scaling=scaling,
                      gamma=gamma, t_w=t_w, theta=theta, t=lags,
                      value=values, stderr=errs,
                      n_paths=ens.n_disorders * ens.n_paths,
                      n_disorders=ens.n_disorders)


def curves_from_blocks(ens, t_w, theta, blocks, times, kind, scaling, gamma):
    """Build a curve from pre-collected blocks (shared across scalings)."""
    lags = scale_lags(scaling, t_w, theta, gamma)
    i0 = int(np.searchsorted(times, t_w))
    values = np.empty(len(theta))
    errs = np.empty(len(theta))
    for k, lag in enumerate(lags):
        j = int(np.searchsorted(times, t_w + lag))
        if j >= len(times) or times[j] != t_w + lag:
            raise ValueError("blocks were not collected on this time grid")
        cells = _indicator_cells(blocks, i0, j, kind)
        values[k], errs[k] = pooled_estimate(list(cells.values()))
    return AgingCurve(kind=kind, averaging=ens.averaging, scaling=scaling,
                      gamma=gamma, t_w=t_w, theta=np.asarray(theta, float),
                      t=lags, value=values, stderr=errs,
                      n_paths=ens.n_disorders * ens.n_paths,
                      n_disorders=ens.n_disorders)


@dataclass(frozen=True)
class CollapseReport:
    kind: str
    scaling: str
    t_ws: tuple
    theta: np.ndarray = field(repr=False)
    max_abs_dev: np.ndarray = field(repr=False)
    max_z: np.ndarray = field(repr=False)
    z_threshold: float = 3.0

    @property
    def worst_z(self):
        return float(np.max(self.max_z))

    @property
    def passed(self):
        return bool(self.worst_z <= self.z_threshold)

    def rows(self):
        out = []
        for k in range(len(self.theta)):
            out.append((self.kind, self.scaling, float(self.theta[k]),
                        float(self.max_abs_dev[k]), float(self.max_z[k])))
        return out

    def to_text(self):
        lines = [f"collapse {self.kind} scaling={self.scaling} "
                 f"t_w={list(self.t_ws)}",
                 f"{'theta':>12} {'max|dv|':>12} {'max z':>10}"]
        for _, _, th, dev, z in self.rows():
            lines.append(f"{th:12.5g} {dev:12.5g} {z:10.3f}")
        lines.append(f"worst z = {self.worst_z:.3f} "
                     f"({'PASS' if self.passed else 'FAIL'} at {self.z_threshold:g})")
        return "\n".join(lines)


def collapse_report(curves, z_threshold=3.0):
    """Pairwise curve agreement per theta, stderr-normalized."""
    if len(curves) < 2:
        raise ValueError("collapse needs at least two curves")
    ref = curves[0]
    for c in curves[1:]:
        if c.kind != ref.kind or c.scaling != ref.scaling or c.gamma != ref.gamma:
            raise ValueError("curves mix kinds or scalings")
        if len(c.theta) != len(ref.theta) or np.any(c.theta != ref.theta):
            raise ValueError("curves have mismatched theta grids")
    nth = len(ref.theta)
    max_dev = np.zeros(nth)
    max_z = np.zeros(nth)
    for x in range(len(curves)):
        for y in range(x + 1, len(curves)):
            dv = np.abs(curves[x].value - curves[y].value)
            se = np.sqrt(curves[x].stderr ** 2 + curves[y].stderr ** 2)
            with np.errstate(divide="ignore", invalid="ignore"):
                z = np.where(dv == 0.0, 0.0, dv / se)
            max_dev = np.maximum(max_dev, dv)
            max_z = np.maximum(max_z, z)
    return CollapseReport(kind=ref.kind, scaling=ref.scaling_tag(),
                          t_ws=tuple(c.t_w for c in curves), theta=ref.theta,
                          max_abs_dev=max_dev, max_z=max_z,
                          z_threshold=z_threshold)


@dataclass(frozen=True)
class LocalizationEstimate:
    t: float
    value: float
    stderr: float
    argmax_vertex: int
    n_paths: int
    n_disorders: int
    warning: str = ""


def localization_profile(ens, t, mapper=None):
    """Supremum over vertices of the disorder-averaged occupation at time t.

    The histogram is averaged over disorders first, then maximized; the
    stderr is the cluster spread of the per-disorder frequency at the
    maximizing vertex.
    """
    n_vertices = parse_graph(ens.graph).n
    times = np.array([float(t)])
    blocks = _collect(ens, times, mapper)
    hist = np.zeros(n_vertices)
    per_disorder = []
    for _, (pos, _) in blocks:
        h = np.bincount(pos[:, 0], minlength=n_vertices)
        per_disorder.append(h)
        hist += h
    hist /= ens.n_disorders * ens.n_paths
    x_star = int(np.argmax(hist))
    freqs = np.array([h[x_star] / ens.n_paths for h in per_disorder])
    value = float(np.mean(freqs))
    if ens.n_disorders > 1:
        se = float(np.std(freqs, ddof=1) / math.sqrt(ens.n_disorders))
    else:
        se = math.sqrt(max(value * (1 - value), 0.0) / ens.n_paths)
    warning = ""
    peak_count = hist[x_star] * ens.n_disorders * ens.n_paths
    if peak_count < 25:
        warning = (f"only {peak_count:.0f} paths at the maximizing vertex; "
                   "histogram resolution is marginal")
    return LocalizationEstimate(t=float(t), value=value, stderr=se,
                                argmax_vertex=x_star,
                                n_paths=ens.n_disorders * ens.n_paths,
                                n_disorders=ens.n_disorders, warning=warning)


def rate_matrix(scape, params):
    """Dense generator of the walk; small graphs only."""
    n = scape.graph.n
    if n > 4096:
        raise ValueError("dense generator limited to small graphs")
    Q = np.zeros((n, n))
    for x in range(n):
        for y, r in jump_rates(scape, params, x):
            Q[x, y] = r
        Q[x, x] = -Q[x].sum()
    return Q


def start_distribution(scape, params):
    n = scape.graph.n
    if params.start == "uniform":
        return np.full(n, 1.0 / n)
    mu = np.zeros(n)
    x0 = scape.graph.origin if params.start == "origin" else int(params.start)
    mu[x0] = 1.0
    return mu


def exact_two_point(scape, params, t_w, t):
    """(R, Pi) by matrix semigroup; the small-graph oracle.

    R sums the return-diagonal of exp(Q t) against the time-t_w law; Pi
    kills the chain at its first jump after t_w, i.e. integrates
    exp(-W(x) t) instead.
    """
    Q = rate_matrix(scape, params)
    mu = start_distribution(scape, params) @ expm(Q * t_w)
    R = float(mu @ np.diag(expm(Q * t)))
    W = -np.diag(Q)
    Pi = float(mu @ np.exp(-W * t))
    return R, Pi
