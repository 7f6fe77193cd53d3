"""Continuous-time trap walk on a landscape.

The walk at vertex x jumps to a neighbor y at rate

    w(x, y) = nu * tau(x)^(a - 1) * tau(y)^a

so detailed balance w(x,y) tau(x) = w(y,x) tau(y) holds for every a.  At
a = 0 the jump chain is the simple random walk and tau only sets the clock;
a > 0 biases jumps toward deep neighbors and shortens deep sojourns.

Supported graphs: segment, torus, complete.  The hypercube dynamics is a
discrete-step chain with its own module (`rem`).  On the segment the walk
by default raises when it tries to enter an endpoint, since the experiments
choose L large enough that this never happens; pass boundary="allow" to let
small-graph walks use the natural degree-1 dynamics instead.
"""

import weakref
from dataclasses import dataclass, field

import math

import numpy as np

from . import kernels
from .streams import DOMAIN_WALK_PATH, UniformSource, stream

DEFAULT_EVENT_CAP = 10 ** 9


class BoundaryHitError(RuntimeError):
    """The walk entered a forbidden boundary vertex."""


class EventBudgetError(RuntimeError):
    """A single path exceeded its jump budget."""


@dataclass(frozen=True)
class WalkParams:
    """Dynamics parameters.

    a          depth-attraction exponent in [0, 1]
    nu         overall rate scale (> 0)
    boundary   "error" (default) or "allow"
    start      "origin", "uniform", or an explicit vertex index
    event_cap  per-path jump budget
    """

    a: float = 0.0
    nu: float = 1.0
    boundary: str = "error"
    start: object = "origin"
    event_cap: int = DEFAULT_EVENT_CAP

    def __post_init__(self):
        if not 0.0 <= self.a <= 1.0:
            raise ValueError("a must lie in [0, 1]")
        if self.nu <= 0.0:
            raise ValueError("nu must be positive")
        if self.boundary not in ("error", "allow"):
            raise ValueError("boundary must be 'error' or 'allow'")


@dataclass(frozen=True)
class Trajectory:
    """Piecewise-constant path: state is states[k] on [jump_times[k], next)."""

    x0: int
    jump_times: np.ndarray = field(repr=False)
    states: np.ndarray = field(repr=False)
    horizon: float = 0.0

    @property
    def n_jumps(self):
        return len(self.jump_times)


_rate_cache = weakref.WeakKeyDictionary()


def rate_tables(scape, a):
    """(tau^a, tau^(a-1), cumsum(tau^a), total) for a landscape, cached.

    Both kernel backends read these exact arrays, which keeps the floating
    arithmetic identical between them.
    """
    per = _rate_cache.setdefault(scape, {})
    if a not in per:
        ta = scape.depths ** a
        tam1 = scape.depths ** (a - 1.0)
        cumta = np.cumsum(ta)
        per[a] = (ta, tam1, cumta, float(cumta[-1]))
    return per[a]


def _check_graph(graph):
    if graph.kind == "hypercube":
        raise ValueError("hypercube dynamics lives in agelab.rem, not trapwalk")


def _kernel_args(scape, params):
    graph = scape.graph
    _check_graph(graph)
    ta, tam1, cumta, total = rate_tables(scape, params.a)
    kind = 1 if graph.kind == "complete" else 0
    if kind == 1:
        indptr = np.zeros(1, dtype=np.int64)
        indices = np.zeros(0, dtype=np.int64)
    else:
        indptr, indices = graph.indptr, graph.indices
    if params.boundary == "error":
        mask = graph.boundary
    else:
        mask = np.zeros(0, dtype=np.uint8)
    return kind, indptr, indices, ta, tam1, cumta, total, mask


def resolve_start(graph, params, src):
    """Start vertex for one path; a uniform start consumes one uniform."""
    if params.start == "origin":
        return graph.origin
    if params.start == "uniform":
        return min(int(src.next() * graph.n), graph.n - 1)
    x0 = int(params.start)
    if not 0 <= x0 < graph.n:
        raise ValueError(f"start vertex {x0} outside graph")
    return x0


def jump_rates(scape, params, x):
    """All (neighbor, rate) pairs out of x, ascending by neighbor."""
    from . import graphs as _g

    _check_graph(scape.graph)
    ta, tam1, _, _ = rate_tables(scape, params.a)
    base = params.nu * tam1[x]
    return [(int(y), float(base * ta[y])) for y in _g.neighbors(scape.graph, x)]


def total_rate(scape, params, x):
    rates = jump_rates(scape, params, x)
    return math.fsum(r for _, r in rates)


def step(scape, params, x, gen):
    """One Gillespie step from x: returns (holding_time, next_vertex).

    Uses the generator directly; meant for inspection and small-graph tests,
    not ensemble runs (those go through the kernels).
    """
    rates = jump_rates(scape, params, x)
    w = math.fsum(r for _, r in rates)
    if w <= 0.0:
        raise ValueError(f"vertex {x} has no outgoing rate")
    hold = -math.log1p(-gen.random()) / w
    r = gen.random() * w
    acc = 0.0
    y = rates[-1][0]
    for v, rate in rates:
        acc += rate
        if r < acc:
            y = v
            break
    if params.boundary == "error" and scape.graph.boundary[y]:
        raise BoundaryHitError(f"walk attempted to enter boundary vertex {y}")
    return hold, y


def query_positions(scape, params, qtimes, src):
    """Vertex occupied and jumps completed at each query time, one path.

    qtimes must be sorted ascending.  The path is right-continuous: a query
    falling exactly on a jump time sees the post-jump state.
    """
    args = _kernel_args(scape, params)
    kind, indptr, indices, ta, tam1, cumta, total, mask = args
    x0 = resolve_start(scape.graph, params, src)
    if params.boundary == "error" and scape.graph.boundary[x0]:
        raise BoundaryHitError(f"start vertex {x0} is a boundary vertex")
    qtimes = np.ascontiguousarray(qtimes, dtype=np.float64)
    out_pos = np.empty(len(qtimes), dtype=np.int64)
    out_cnt = np.empty(len(qtimes), dtype=np.int64)
    horizon = float(qtimes[-1]) if len(qtimes) else 0.0
    status, jumps = kernels.walk_query(
        kind, indptr, indices, ta, tam1, cumta, total, params.nu, mask,
        x0, horizon, params.event_cap, qtimes, out_pos, out_cnt, src)
    if status == kernels.BOUNDARY:
        raise BoundaryHitError(
            f"walk reached the boundary before t={horizon:g}; enlarge the graph")
    if status == kernels.CAP:
        raise EventBudgetError(f"path exceeded {params.event_cap} jumps")
    return out_pos, out_cnt, jumps


def simulate(scape, params, horizon, seed):
    """Full trajectory on [0, horizon] for one path keyed by `seed`."""
    src = UniformSource(stream(seed, DOMAIN_WALK_PATH))
    return simulate_from(scape, params, horizon, src)


def simulate_from(scape, params, horizon, src):
    args = _kernel_args(scape, params)
    kind, indptr, indices, ta, tam1, cumta, total, mask = args
    x0 = resolve_start(scape.graph, params, src)
    if params.boundary == "error" and scape.graph.boundary[x0]:
        raise BoundaryHitError(f"start vertex {x0} is a boundary vertex")
    state = np.array([0.0, float(x0), 0.0])
    chunks_t, chunks_x = [], []
    size = 1024
    while True:
        rec_t = np.empty(size, dtype=np.float64)
        rec_x = np.empty(size, dtype=np.int64)
        status, nrec = kernels.walk_record(
            kind, indptr, indices, ta, tam1, cumta, total, params.nu, mask,
            float(horizon), params.event_cap, rec_t, rec_x, state, src)
        if nrec:
            chunks_t.append(rec_t[:nrec].copy())
            chunks_x.append(rec_x[:nrec].copy())
        if status == kernels.FULL:
            size = min(2 * size, 1 << 22)
            continue
        if status == kernels.BOUNDARY:
            raise BoundaryHitError(
                f"walk reached the boundary before t={horizon:g}; enlarge the graph")
        if status == kernels.CAP:
            raise EventBudgetError(f"path exceeded {params.event_cap} jumps")
        break
    if chunks_t:
        times = np.concatenate(chunks_t)
        states = np.concatenate(chunks_x)
    else:
        times = np.zeros(0, dtype=np.float64)
        states = np.zeros(0, dtype=np.int64)
    return Trajectory(x0=int(x0), jump_times=times, states=states,
                      horizon=float(horizon))


def position_at(traj, t):
    """State of the trajectory at time t (right-continuous)."""
    if t < 0 or t > traj.horizon:
        raise ValueError(f"t={t} outside [0, {traj.horizon}]")
    k = int(np.searchsorted(traj.jump_times, t, side="right"))
    return traj.x0 if k == 0 else int(traj.states[k - 1])


def jumps_by(traj, t):
    """Number of jumps completed by time t."""
    if t < 0 or t > traj.horizon:
        raise ValueError(f"t={t} outside [0, {traj.horizon}]")
    return int(np.searchsorted(traj.jump_times, t, side="right"))
