"""Langevin dynamics for the soft spherical SK model.

The coupling is the symmetrized Gaussian matrix A = (J + J^T)/sqrt(2N),
whose spectrum converges to the semicircle law on [-2, 2].  The dynamics

    du_i = [beta * (A u)_i - f'(|u|^2 / N) * u_i] dt + dW_i

start from a deep quench (i.i.d. standard normal coordinates).  Everything
measured here -- the radius r(t) = |u(t)|^2/N and the empirical covariance
C(s, t) = <u(s), u(t)>/N -- is invariant under orthogonal changes of basis,
and both the initial condition and the noise are rotation-invariant, so the
system is integrated in the eigenbasis of A where the drift is diagonal.
That reduces the cost per step from a matrix-vector product to O(N) while
leaving the law of every recorded observable unchanged.

The soft spherical constraint defaults to f(x) = x^2/2, so f'(x) = x.
Observed regimes: exponential decorrelation at small beta, a polynomial
t^{-1/2} decay at the empirically located critical coupling, and an aging
plateau of C(t_w, (1+theta) t_w) above it.
"""

import math
import weakref
from dataclasses import dataclass, field

import numpy as np

from .streams import DOMAIN_COUPLING, DOMAIN_NOISE, stream, subseed

__all__ = [
    "CouplingMatrix", "SskRun", "SskEnsemble", "StepSizeError",
    "sample_coupling", "spectrum", "semicircle_mass", "integrate",
    "integrate_modes", "run_ensemble", "empirical_covariance",
    "covariance_samples", "radius_samples", "ou_covariance",
    "covariance_curve", "exponential_decay_fit", "loglog_slope",
    "locate_beta_c", "aging_band", "RegimeReport", "regime_report",
]

STABILITY_LIMIT = 0.1


class StepSizeError(RuntimeError):
    """The explicit integrator left its stability region; reduce dt."""


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    N: int
    matrix: np.ndarray = field(repr=False)
    seed: int | None = None


def sample_coupling(N, seed):
    """Symmetrized i.i.d.-Gaussian coupling, spectral edge at ~2."""
    if N < 2:
        raise ValueError("need N >= 2")
    gen = stream(seed, DOMAIN_COUPLING)
    J = gen.standard_normal((N, N))
    A = (J + J.T) / math.sqrt(2.0 * N)
    return CouplingMatrix(N=N, matrix=A, seed=seed)


_SPECTRUM_CACHE = weakref.WeakKeyDictionary()


def spectrum(coupling):
    """Ascending eigenvalues of the coupling (cached)."""
    eigs = _SPECTRUM_CACHE.get(coupling)
    if eigs is None:
        eigs = np.linalg.eigvalsh(coupling.matrix)
        _SPECTRUM_CACHE[coupling] = eigs
    return eigs


def semicircle_mass(a, b):
    """Semicircle-law mass of [a, b] within the support [-2, 2]."""
    def prim(x):
        x = min(2.0, max(-2.0, x))
        return (x * math.sqrt(4.0 - x * x) / 2.0
                + 2.0 * math.asin(x / 2.0)) / (2.0 * math.pi)
    return prim(b) - prim(a)


@dataclass(frozen=True, eq=False)
class SskRun:
    N: int
    beta: float
    f_tag: str
    dt: float
    T: float
    snap_times: np.ndarray = field(repr=False)
    snaps: np.ndarray = field(repr=False)
    radius: np.ndarray = field(repr=False)
    r_time_avg: float = 0.0
    matrix_seed: int | None = None
    noise_seed: int | None = None

    def snap_index(self, t):
        tol = 1e-9 * max(1.0, abs(t))
        k = int(np.searchsorted(self.snap_times, t))
        for cand in (k, k - 1):
            if 0 <= cand < len(self.snap_times) and abs(self.snap_times[cand] - t) <= tol:
                return cand
        raise ValueError(f"time {t:g} is not a recorded snapshot")


def _quadratic_fprime(coeff):
    def fp(x):
        return coeff * x
    return fp


def integrate_modes(eigs, beta, dt, T, snap_times, rng, f_prime=None,
                    f_tag="quadratic", radius_cap=100.0,
                    matrix_seed=None, noise_seed=None):
    """Euler-Maruyama in diagonal coordinates with the given mode rates.

    ``eigs`` holds the drift eigenvalues (zeros reproduce uncoupled
    coordinates).  The stability product dt*(2*beta + f'(r)) is checked at
    every step; leaving it triggers an error rather than silent blow-up.
    """
    eigs = np.ascontiguousarray(eigs, dtype=np.float64)
    N = len(eigs)
    if f_prime is None:
        f_prime = _quadratic_fprime(1.0)
    if dt <= 0 or T < 0:
        raise ValueError("need dt > 0 and T >= 0")
    snap_times = np.asarray(snap_times, dtype=np.float64)
    if np.any(np.diff(snap_times) <= 0):
        raise ValueError("snapshot times must be strictly increasing")
    if len(snap_times) == 0 or snap_times[0] < 0 or snap_times[-1] > T + 1e-9:
        raise ValueError("snapshots must lie within [0, T]")
    snap_steps = np.round(snap_times / dt).astype(np.int64)
    if np.any(np.abs(snap_steps * dt - snap_times) > 1e-9 * np.maximum(1.0, snap_times)):
        raise ValueError("snapshot times must sit on the step grid")
    if np.any(np.diff(snap_steps) <= 0):
        raise ValueError("snapshot times collide on the step grid")
    n_steps = int(round(T / dt))
    v = rng.standard_normal(N)
    snaps = np.empty((len(snap_times), N))
    radius = np.empty(len(snap_times))
    si = 0
    r = float(v @ v) / N
    r_accum = 0.0
    sqdt = math.sqrt(dt)
    drift = beta * eigs
    for step in range(n_steps + 1):
        if si < len(snap_steps) and step == snap_steps[si]:
            snaps[si] = v
            radius[si] = r
            si += 1
        if step == n_steps:
            break
        fp = f_prime(r)
        if dt * (2.0 * abs(beta) + abs(fp)) >= STABILITY_LIMIT:
            raise StepSizeError(
                f"dt={dt:g} is too coarse for rates ~{2 * abs(beta) + abs(fp):g};"
                " reduce dt")
        v = v + (drift - fp) * v * dt + sqdt * rng.standard_normal(N)
        r = float(v @ v) / N
        r_accum += r
        if not math.isfinite(r):
            raise StepSizeError("radius became non-finite; reduce dt")
        if r > radius_cap:
            raise StepSizeError(
                f"radius {r:g} exceeded the cap {radius_cap:g}; reduce dt")
    return SskRun(N=N, beta=float(beta), f_tag=f_tag, dt=float(dt),
                  T=float(T), snap_times=snap_times, snaps=snaps,
                  radius=radius,
                  r_time_avg=r_accum / max(n_steps, 1),
                  matrix_seed=matrix_seed, noise_seed=noise_seed)


def integrate(coupling, beta, dt, T, snap_times, rng, f_prime=None,
              f_tag="quadratic", radius_cap=100.0, noise_seed=None):
    """Integrate the full coupled system (via its eigenbasis; see module)."""
    return integrate_modes(spectrum(coupling), beta, dt, T, snap_times, rng,
                           f_prime=f_prime, f_tag=f_tag,
                           radius_cap=radius_cap,
                           matrix_seed=coupling.seed, noise_seed=noise_seed)


@dataclass(frozen=True)
class SskEnsemble:
    """Realization grid: n_matrices couplings times n_noises driving paths."""

    N: int
    beta: float
    dt: float
    T: float
    snap_times: tuple
    n_matrices: int
    n_noises: int
    seed: int
    f_coeff: float = 1.0
    radius_cap: float = 100.0

    def __post_init__(self):
        if self.n_matrices < 1 or self.n_noises < 1:
            raise ValueError("need at least one matrix and one noise path")


def _matrix_task(task):
    ens, m = task
    coupling = sample_coupling(ens.N, seed=subseed(ens.seed, DOMAIN_COUPLING, m))
    eigs = spectrum(coupling)
    runs = []
    for k in range(ens.n_noises):
        rng = stream(ens.seed, DOMAIN_NOISE, m, k)
        runs.append(integrate_modes(
            eigs, ens.beta, ens.dt, ens.T, np.asarray(ens.snap_times), rng,
            f_prime=_quadratic_fprime(ens.f_coeff),
            radius_cap=ens.radius_cap, matrix_seed=coupling.seed,
            noise_seed=subseed(ens.seed, DOMAIN_NOISE, m, k)))
    return runs


def run_ensemble(ens, mapper=None):
    run = mapper or map
    nested = list(run(_matrix_task, [(ens, m) for m in range(ens.n_matrices)]))
    return [r for batch in nested for r in batch]


def covariance_samples(runs, t_w, t):
    """Per-run overlap <u(t_w), u(t_w+t)>/N."""
    out = np.empty(len(runs))
    for k, run in enumerate(runs):
        i = run.snap_index(t_w)
        j = run.snap_index(t_w + t)
        out[k] = float(run.snaps[i] @ run.snaps[j]) / run.N
    return out


def empirical_covariance(runs, t_w, t):
    """(mean, stderr, n) of C(t_w, t_w+t) over realizations."""
    c = covariance_samples(runs, t_w, t)
    se = float(np.std(c, ddof=1) / math.sqrt(len(c))) if len(c) > 1 else 0.0
    return float(np.mean(c)), se, len(c)


def radius_samples(runs, t):
    return np.array([run.radius[run.snap_index(t)] for run in runs])


def covariance_curve(runs, t_w, t_grid):
    """C(t_w, t_w+t) with stderr over a grid of lags."""
    vals = np.empty(len(t_grid))
    errs = np.empty(len(t_grid))
    for k, t in enumerate(t_grid):
        vals[k], errs[k], _ = empirical_covariance(runs, t_w, t)
    return vals, errs


def align_times(times, dt):
    """Round times to the nearest step multiples (deduplicated, sorted)."""
    steps = np.unique(np.round(np.asarray(times, dtype=np.float64) / dt))
    return steps * dt


def ou_covariance(s, t, c):
    """Frozen-rate linear oracle: uncoupled coordinates with drift rate c.

    From a unit deep quench, Var(s) = 1/(2c) + (1 - 1/(2c)) e^{-2cs} and
    Cov(s, s+t) = Var(s) e^{-ct}.
    """
    var = 1.0 / (2.0 * c) + (1.0 - 1.0 / (2.0 * c)) * math.exp(-2.0 * c * s)
    return var * math.exp(-c * t)


def exponential_decay_fit(t_grid, values):
    """Least-squares fit of log values against t: (rate, r_squared).

    The decay rate is the negated slope; values must be positive.
    """
    t = np.asarray(t_grid, dtype=np.float64)
    y = np.asarray(values, dtype=np.float64)
    if np.any(y <= 0):
        raise ValueError("exponential fit needs positive values")
    return _negslope_r2(t, np.log(y))


def loglog_slope(t_grid, values):
    """Least-squares slope of log values against log t: (slope, r_squared)."""
    t = np.asarray(t_grid, dtype=np.float64)
    y = np.asarray(values, dtype=np.float64)
    if np.any(y <= 0) or np.any(t <= 0):
        raise ValueError("log-log fit needs positive grid and values")
    rate, r2 = _negslope_r2(np.log(t), np.log(y))
    return -rate, r2


def _negslope_r2(x, y):
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return -float(slope), r2


def decay_slope(N, beta, t_w, dt, n_matrices, n_noises, seed, lag_span=8.0,
                n_lags=7, mapper=None):
    """Log-log slope of C(t_w, t_w+t) over t in [t_w, lag_span*t_w].

    Deeply subcritical couplings push the curve below the noise floor;
    those return -inf (effectively exponential decay).
    """
    lags = align_times(np.geomspace(t_w, lag_span * t_w, n_lags), dt)
    snaps = tuple(np.concatenate([[t_w], t_w + lags]))
    ens = SskEnsemble(N=N, beta=beta, dt=dt, T=snaps[-1], snap_times=snaps,
                      n_matrices=n_matrices, n_noises=n_noises, seed=seed)
    runs = run_ensemble(ens, mapper)
    vals, errs = covariance_curve(runs, t_w, lags)
    keep = vals > 2.0 * errs
    if np.count_nonzero(keep) < 3:
        return -math.inf
    slope, _ = loglog_slope(lags[keep], vals[keep])
    return slope


def locate_beta_c(N=1000, lo=0.2, hi=1.0, iters=8, t_w=8.0, dt=0.02,
                  n_matrices=8, n_noises=4, seed=1, lag_span=8.0,
                  mapper=None):
    """Bisect on the decay shape of C(t_w, t_w+t) crossing the t^{-1/2} law.

    Below the transition the covariance decays exponentially, making the
    measured log-log slope steeper than -1/2 (or dropping the curve below
    the noise floor); above it the aging plateau flattens the slope toward
    zero.  The returned coupling is where the slope crosses -1/2, the
    polynomial decay the theory puts exactly at the transition.
    """
    slope_lo = decay_slope(N, lo, t_w, dt, n_matrices, n_noises, seed,
                           lag_span, mapper=mapper)
    slope_hi = decay_slope(N, hi, t_w, dt, n_matrices, n_noises, seed,
                           lag_span, mapper=mapper)
    if (slope_lo > -0.5) or (slope_hi <= -0.5):
        raise ValueError(
            f"bracket does not straddle the transition: slope({lo:g})="
            f"{slope_lo:.3f}, slope({hi:g})={slope_hi:.3f}")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        slope = decay_slope(N, mid, t_w, dt, n_matrices, n_noises, seed,
                            lag_span, mapper=mapper)
        if slope > -0.5:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def aging_band(runs, t_w, lags):
    """Range of C(t_w, t_w+t) * (t/t_w)^{3/4} over the given lags t."""
    lags = np.asarray(lags, dtype=np.float64)
    vals = np.empty(len(lags))
    errs = np.empty(len(lags))
    for k, t in enumerate(lags):
        c, se, _ = empirical_covariance(runs, t_w, t)
        q = t / t_w
        vals[k] = c * q ** 0.75
        errs[k] = se * q ** 0.75
    return vals, errs


@dataclass(frozen=True)
class RegimeReport:
    """Consolidated classification across the three coupling regimes."""

    beta_sub: float
    sub_rate: float
    sub_r2: float
    beta_c: float
    critical_slope: float
    critical_r2: float
    beta_aging: float
    plateau_t_ws: tuple
    plateau_values: np.ndarray = field(repr=False)
    plateau_stderr: np.ndarray = field(repr=False)
    band_ratios: np.ndarray = field(repr=False)
    band_values: np.ndarray = field(repr=False)
    band_stderr: np.ndarray = field(repr=False)

    @property
    def plateau_max_z(self):
        v, se = self.plateau_values, self.plateau_stderr
        worst = 0.0
        for i in range(len(v)):
            for j in range(i + 1, len(v)):
                dv = abs(v[i] - v[j])
                s = math.hypot(se[i], se[j])
                worst = max(worst, dv / s if s > 0 else math.inf)
        return worst

    @property
    def band(self):
        return float(np.min(self.band_values)), float(np.max(self.band_values))

    def to_text(self):
        b_lo, b_hi = self.band
        lines = [
            f"subcritical beta={self.beta_sub:g}: rate {self.sub_rate:.4f}, "
            f"R^2={self.sub_r2:.4f}",
            f"critical beta={self.beta_c:.4f}: log-log slope "
            f"{self.critical_slope:.3f} (R^2={self.critical_r2:.4f})",
            f"aging beta={self.beta_aging:g}: C(t_w,2t_w) = "
            + ", ".join(f"{v:.4f}+-{s:.4f}" for v, s in
                        zip(self.plateau_values, self.plateau_stderr))
            + f" at t_w={list(self.plateau_t_ws)} (max z="
            f"{self.plateau_max_z:.2f})",
            f"aging band of C*(t/t_w)^0.75 over t/t_w in "
            f"[{self.band_ratios[0]:g}, {self.band_ratios[-1]:g}]: "
            f"[{b_lo:.4f}, {b_hi:.4f}]",
        ]
        return "\n".join(lines)


def regime_report(N, seed, beta_sub=0.0, beta_aging=1.0, beta_c=None,
                  dt=0.02, n_matrices=6, n_noises=4, plateau_t_ws=(25.0, 50.0, 100.0),
                  band_t_w=4.0, band_ratios=(10.0, 20.0, 50.0, 100.0),
                  sub_t_w=5.0, sub_lags=None, crit_t_w=8.0, crit_lags=None,
                  mapper=None):
    """Measure all three regimes and assemble the classification report."""
    if beta_c is None:
        beta_c = locate_beta_c(N=N, seed=seed, mapper=mapper)
    if sub_lags is None:
        sub_lags = np.linspace(0.0, 3.0, 13)
    if crit_lags is None:
        crit_lags = np.geomspace(crit_t_w, 40.0 * crit_t_w, 10)
    sub_lags = align_times(sub_lags, dt)
    crit_lags = align_times(crit_lags, dt)

    snaps = tuple(sub_t_w + np.asarray(sub_lags))
    ens = SskEnsemble(N=N, beta=beta_sub, dt=dt, T=snaps[-1],
                      snap_times=snaps, n_matrices=n_matrices,
                      n_noises=n_noises, seed=seed)
    runs = run_ensemble(ens, mapper)
    vals, _ = covariance_curve(runs, sub_t_w, np.asarray(sub_lags))
    sub_rate, sub_r2 = exponential_decay_fit(
        np.asarray(sub_lags)[vals > 0], vals[vals > 0])

    snaps = tuple(np.concatenate([[crit_t_w], crit_t_w + crit_lags]))
    ens = SskEnsemble(N=N, beta=beta_c, dt=dt, T=snaps[-1],
                      snap_times=snaps, n_matrices=n_matrices,
                      n_noises=n_noises, seed=seed + 1)
    runs = run_ensemble(ens, mapper)
    vals, _ = covariance_curve(runs, crit_t_w, crit_lags)
    crit_slope, crit_r2 = loglog_slope(crit_lags[vals > 0], vals[vals > 0])

    plateau_vals = np.empty(len(plateau_t_ws))
    plateau_errs = np.empty(len(plateau_t_ws))
    for k, t_w in enumerate(plateau_t_ws):
        ens = SskEnsemble(N=N, beta=beta_aging, dt=dt, T=2.0 * t_w,
                          snap_times=(t_w, 2.0 * t_w),
                          n_matrices=n_matrices, n_noises=n_noises,
                          seed=seed + 2)
        runs = run_ensemble(ens, mapper)
        plateau_vals[k], plateau_errs[k], _ = empirical_covariance(
            runs, t_w, t_w)

    band_lags = align_times(band_t_w * np.asarray(band_ratios, dtype=np.float64), dt)
    snaps = tuple(np.concatenate([[band_t_w], band_t_w + band_lags]))
    ens = SskEnsemble(N=N, beta=beta_aging, dt=dt, T=snaps[-1],
                      snap_times=snaps, n_matrices=n_matrices,
                      n_noises=n_noises, seed=seed + 3)
    runs = run_ensemble(ens, mapper)
    band_vals, band_errs = aging_band(runs, band_t_w, band_lags)
    band_ratios = band_lags / band_t_w

    return RegimeReport(beta_sub=beta_sub, sub_rate=sub_rate, sub_r2=sub_r2,
                        beta_c=beta_c, critical_slope=crit_slope,
                        critical_r2=crit_r2, beta_aging=beta_aging,
                        plateau_t_ws=tuple(plateau_t_ws),
                        plateau_values=plateau_vals,
                        plateau_stderr=plateau_errs,
                        band_ratios=band_ratios, band_values=band_vals,
                        band_stderr=band_errs)
