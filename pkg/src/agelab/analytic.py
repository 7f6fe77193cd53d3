"""Limit formulas the simulations are checked against.

Everything here is deterministic numerics: the two-time aging functions for
heavy-tailed trap dynamics, the limiting sojourn law and its renewal
equation at finite waiting times, and the Laplace-transform machinery for
the subaging regime at depth-attraction a > 0.

All one-dimensional integrals go through adaptive quadrature after a change
of variables that removes the integrable endpoint singularities, so the
default tolerances are actually attained rather than hoped for.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

__all__ = [
    "QuadSpec", "DEFAULT_QUAD", "same_site_aging", "no_jump_aging",
    "no_jump_aging_complement", "limit_wait_cdf", "limit_wait_density",
    "RenewalSolution", "solve_renewal", "depth_power_laplace",
    "subaging_constant", "subaging_exponent", "subaging_limit",
    "subaging_limit_direct", "WeightCdf",
]


@dataclass(frozen=True)
class QuadSpec:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    limit: int = 200


DEFAULT_QUAD = QuadSpec()


def _quad(f, a, b, spec, points=None):
    if points is not None:
        points = [p for p in points if a < p < b]
        if not points:
            points = None
    val, _ = integrate.quad(f, a, b, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                            limit=spec.limit, points=points)
    return val


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")


def _beta_tail(c, alpha, spec):
    """integral of u^(alpha-1) (1-u)^(-alpha) du over (0, c), c in [0, 1].

    Substituting u = s^(1/alpha) on the left and 1-u = w^(1/(1-alpha)) on
    the right turns both endpoint singularities into bounded integrands.
    """
    if c <= 0.0:
        return 0.0
    c = min(c, 1.0)
    lo = min(c, 0.5)
    left = (1.0 / alpha) * _quad(
        lambda s: (1.0 - s ** (1.0 / alpha)) ** (-alpha), 0.0, lo ** alpha, spec)
    if c <= 0.5:
        return left
    b = 1.0 - alpha
    right = (1.0 / b) * _quad(
        lambda w: (1.0 - w ** (1.0 / b)) ** (alpha - 1.0),
        (1.0 - c) ** b, 0.5 ** b, spec)
    return left + right


def same_site_aging(theta, alpha, quad=None):
    """Limit of P(X(t_w (1+theta)) = X(t_w)) for the line walk.

    Decreases from 1 at theta = 0; equals 1/2 at theta = 1 when alpha = 1/2.
    """
    _check_alpha(alpha)
    spec = quad or DEFAULT_QUAD
    if theta < 0:
        raise ValueError("theta must be >= 0")
    return math.sin(alpha * math.pi) / math.pi * _beta_tail(
        1.0 / (1.0 + theta), alpha, spec)


def _front_piece(theta, alpha, spec):
    ### integral of x^(-alpha)/(1+x) dx over (0, theta), theta <= 1,
    ### with x = s^(1/(1-alpha)) flattening the x = 0 singularity
    b = 1.0 - alpha
    return (1.0 / b) * _quad(
        lambda s: 1.0 / (1.0 + s ** (1.0 / b)), 0.0, theta ** b, spec)


def _tail_piece(m, alpha, spec):
    ### integral of x^(-alpha)/(1+x) dx over (m, inf), m >= 1,
    ### with x = s^(-1/alpha) mapping the tail to (0, m^(-alpha))
    return (1.0 / alpha) * _quad(
        lambda s: 1.0 / (1.0 + s ** (1.0 / alpha)), 0.0, m ** (-alpha), spec)


def no_jump_aging(theta, alpha, quad=None):
    """Limit of P(no jump in (t_w, t_w(1+theta)]) for the line walk.

    Behaves as 1 - O(theta^(1-alpha)) near 0 and O(theta^(-alpha)) at
    infinity.
    """
    _check_alpha(alpha)
    spec = quad or DEFAULT_QUAD
    if theta < 0:
        raise ValueError("theta must be >= 0")
    s = math.sin(alpha * math.pi) / math.pi
    if theta >= 1.0:
        return s * _tail_piece(theta, alpha, spec)
    return s * (_front_piece(1.0, alpha, spec) - _front_piece(theta, alpha, spec)
                + _tail_piece(1.0, alpha, spec))


def no_jump_aging_complement(theta, alpha, quad=None):
    """1 - no_jump_aging(theta), computed without cancellation near 0."""
    _check_alpha(alpha)
    spec = quad or DEFAULT_QUAD
    s = math.sin(alpha * math.pi) / math.pi
    if theta <= 1.0:
        return s * _front_piece(theta, alpha, spec)
    return 1.0 - no_jump_aging(theta, alpha, quad)


def limit_wait_cdf(t, alpha, quad=None):
    """CDF of the limiting sojourn law: integral of e^(-t/x) against the
    Pareto(alpha) depth law gives the survival side.

    After y = x^(-alpha) the survival probability is the integral of
    exp(-t y^(1/alpha)) over y in (0, 1), a bounded smooth integrand.
    """
    _check_alpha(alpha)
    spec = quad or DEFAULT_QUAD
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0.0:
        return 0.0
    scale = t ** (-alpha)
    surv = _quad(lambda y: math.exp(-t * y ** (1.0 / alpha)), 0.0, 1.0, spec,
                 points=[scale, 10.0 * scale])
    return 1.0 - surv


def _survival_dense(x, alpha):
    """Vectorized 1 - limit_wait_cdf via the regularized incomplete gamma."""
    x = np.asarray(x, dtype=np.float64)
    x = np.maximum(x, 0.0)
    out = np.ones_like(x)
    pos = x > 0.0
    xp = x[pos]
    out[pos] = alpha * special.gamma(alpha) * xp ** (-alpha) \
        * special.gammainc(alpha, xp)
    return out


def limit_wait_density(t, alpha):
    """Density of the limiting sojourn law; bounded, f(0) = alpha/(1+alpha)."""
    _check_alpha(alpha)
    t = np.asarray(t, dtype=np.float64)
    out = np.full_like(t, alpha / (1.0 + alpha))
    pos = t > 0.0
    tp = t[pos]
    out[pos] = alpha * special.gamma(1.0 + alpha) * tp ** (-1.0 - alpha) \
        * special.gammainc(1.0 + alpha, tp)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class RenewalSolution:
    """Renewal density for the limiting sojourn law on a uniform grid.

    no_jump(t_w, t) evaluates P(no renewal in (t_w, t_w + t]) for any
    grid-aligned t_w <= t_max and arbitrary t >= 0 by one quadrature pass
    over the stored density.
    """

    alpha: float
    step: float
    t_max: float
    density: np.ndarray = field(repr=False)

    def _index_of(self, t_w):
        j = int(round(t_w / self.step))
        if abs(j * self.step - t_w) > 1e-9 * max(1.0, abs(t_w)):
            raise ValueError(f"t_w={t_w} is not on the solver grid (step {self.step})")
        if not 0 <= j < len(self.density):
            raise ValueError(f"t_w={t_w} outside the solved range [0, {self.t_max}]")
        return j

    def no_jump(self, t_w, t):
        return float(self.no_jump_many(t_w, [t])[0])

    def no_jump_many(self, t_w, ts):
        j = self._index_of(t_w)
        ts = np.asarray(ts, dtype=np.float64)
        if np.any(ts < 0):
            raise ValueError("t must be >= 0")
        s = np.arange(j + 1) * self.step
        out = np.empty(len(ts))
        for i, t in enumerate(ts):
            surv = _survival_dense(t_w + t - s, self.alpha)
            total = _survival_dense(np.array([t_w + t]), self.alpha)[0]
            if j > 0:
                g = surv * self.density[:j + 1]
                total += self.step * (0.5 * g[0] + g[1:j].sum() + 0.5 * g[j])
            out[i] = total
        return out

    def diagnostic(self, t_ws):
        """max |no_jump(t_w, 0) - 1|; the identity is exact in continuum,
        so this isolates pure discretization error."""
        return max(abs(self.no_jump(t_w, 0.0) - 1.0) for t_w in t_ws)


def solve_renewal(alpha, t_max, step):
    """March the renewal equation u = f + f * u on [0, t_max].

    Implicit trapezoid rule; refuses steps so coarse that the density mass
    per cell is not small.
    """
    from . import kernels

    _check_alpha(alpha)
    if step <= 0 or t_max <= 0:
        raise ValueError("step and t_max must be positive")
    n = int(round(t_max / step)) + 1
    if abs((n - 1) * step - t_max) > 1e-9 * t_max:
        raise ValueError("t_max must be an integer number of steps")
    grid = np.arange(n) * step
    f = np.asarray(limit_wait_density(grid, alpha))
    if f[0] * step > 0.1:
        raise ValueError(
            f"step {step} too coarse: density mass {f[0] * step:.3f} per cell")
    u = np.empty(n)
    kernels.renewal_density(f, step, u)
    return RenewalSolution(alpha=alpha, step=step, t_max=float((n - 1) * step),
                           density=u)


def depth_power_laplace(lam, a, alpha, quad=None):
    """E[exp(-lam * tau^a)] for Pareto(alpha) depths tau.

    With tau = y^(-1/alpha), y uniform on (0,1), this is the integral of
    exp(-lam * y^(-a/alpha)) over y; at a = 0 it reduces to exp(-lam).
    """
    _check_alpha(alpha)
    if not 0.0 <= a <= 1.0:
        raise ValueError("a must lie in [0, 1]")
    if lam < 0:
        raise ValueError("lam must be >= 0")
    spec = quad or DEFAULT_QUAD
    if a == 0.0:
        return _quad(lambda y: math.exp(-lam), 0.0, 1.0, spec)
    return _quad(lambda y: math.exp(-lam * y ** (-a / alpha)), 0.0, 1.0, spec)


def subaging_constant(a, alpha, quad=None):
    """Clock constant 2^(a-1) * E[tau^(-2a)]^(1-a) for the line walk."""
    _check_alpha(alpha)
    if not 0.0 <= a <= 1.0:
        raise ValueError("a must lie in [0, 1]")
    spec = quad or DEFAULT_QUAD
    moment = _quad(lambda y: y ** (2.0 * a / alpha), 0.0, 1.0, spec)
    return 2.0 ** (a - 1.0) * moment ** (1.0 - a)


def subaging_exponent(a, alpha):
    """Time-rescaling power gamma = (1 - a)/(1 + alpha)."""
    _check_alpha(alpha)
    if not 0.0 <= a <= 1.0:
        raise ValueError("a must lie in [0, 1]")
    return (1.0 - a) / (1.0 + alpha)


@dataclass(frozen=True)
class WeightCdf:
    """Distribution table for the weight occupied at the observation time.

    u is ascending, F nondecreasing within [0, 1]; mass between grid points
    is lumped at the right point, matching an empirical CDF.
    """

    u: np.ndarray = field(repr=False)
    F: np.ndarray = field(repr=False)

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.float64)
        F = np.asarray(self.F, dtype=np.float64)
        if u.ndim != 1 or u.shape != F.shape or len(u) == 0:
            raise ValueError("u and F must be matching 1-d arrays")
        if np.any(np.diff(u) <= 0):
            raise ValueError("u must be strictly increasing")
        if np.any(np.diff(F) < 0) or F[0] < 0 or F[-1] > 1 + 1e-12:
            raise ValueError("F must be a nondecreasing CDF")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "F", F)

    @classmethod
    def from_samples(cls, samples):
        u, counts = np.unique(np.asarray(samples, dtype=np.float64),
                              return_counts=True)
        return cls(u=u, F=np.cumsum(counts) / counts.sum())

    def at(self, u_grid):
        """F evaluated at arbitrary points (right-continuous step function)."""
        idx = np.searchsorted(self.u, np.asarray(u_grid, dtype=np.float64),
                              side="right")
        padded = np.concatenate([[0.0], self.F])
        return padded[idx]

    def masses(self):
        return np.diff(np.concatenate([[0.0], self.F]))


def subaging_limit(theta, a, alpha, table, quad=None):
    """Two-time limit at rescaling t = theta * t_w^gamma: the squared
    Laplace transform of the depth power, mixed over the occupied-weight law.

    Any mass the table leaves above its last point is ignored; tables should
    extend far enough that this truncation is below the tolerance in use.
    """
    _check_alpha(alpha)
    spec = quad or DEFAULT_QUAD
    if theta < 0:
        raise ValueError("theta must be >= 0")
    C = subaging_constant(a, alpha, quad=spec)
    lam = C * theta * table.u ** (a - 1.0)
    vals = np.array([depth_power_laplace(l, a, alpha, quad=spec) ** 2
                     for l in lam])
    return float(np.dot(table.masses(), vals))


def subaging_limit_direct(theta, table):
    """Same quantity at a = 0, where the transform collapses to exp(-theta/u)."""
    if theta < 0:
        raise ValueError("theta must be >= 0")
    vals = np.exp(-theta / table.u)
    return float(np.dot(table.masses(), vals))
