"""Two-time estimators: exact semigroup oracle on small graphs, pooling
algebra, scaling grids, collapse diagnostics, localization profile."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st_

from agelab import twopoint
from agelab.trapwalk import WalkParams

BETA = 2.0


def _quenched(graph, a, seed=5, n_paths=1500, boundary="allow"):
    return twopoint.WalkEnsemble(
        graph=graph, beta=BETA, params=WalkParams(a=a, boundary=boundary),
        n_disorders=1, n_paths=n_paths, seed=seed)


# ------------------------------------------------- semigroup exact oracle

@pytest.mark.parametrize("graph", ["complete:4", "segment:2"])
@pytest.mark.parametrize("a", [0.0, 0.5, 1.0])
def test_monte_carlo_matches_semigroup(graph, a):
    ens = _quenched(graph, a, seed=11, n_paths=2500)
    scape = twopoint.disorder_landscape(ens, 0)
    t_w, t = 3.0, 2.0
    R_exact, Pi_exact = twopoint.exact_two_point(scape, ens.params, t_w, t)
    r = twopoint.estimate_R(ens, t_w, t)
    p = twopoint.estimate_Pi(ens, t_w, t)
    assert abs(r.value - R_exact) < 4.0 * max(r.stderr, 1e-3)
    assert abs(p.value - Pi_exact) < 4.0 * max(p.stderr, 1e-3)
    assert r.averaging == "quenched"
    assert 0.0 <= p.value <= r.value + 1e-12  # no jump implies same state


def test_two_point_at_zero_lag_is_one():
    ens = _quenched("complete:3", 0.0, n_paths=40)
    assert twopoint.estimate_R(ens, 2.0, 0.0).value == 1.0
    assert twopoint.estimate_Pi(ens, 2.0, 0.0).value == 1.0


def test_exact_two_point_small_t_behavior():
    """Pi from the semigroup equals the direct survival mix e^(-W t)."""
    ens = _quenched("complete:2", 0.0, seed=3)
    scape = twopoint.disorder_landscape(ens, 0)
    Q = twopoint.rate_matrix(scape, ens.params)
    mu = np.zeros(2)
    mu[0] = 1.0
    from scipy.linalg import expm
    mu_tw = mu @ expm(Q * 4.0)
    W = -np.diag(Q)
    want = float(mu_tw @ np.exp(-W * 1.5))
    _, got = twopoint.exact_two_point(scape, ens.params, 4.0, 1.5)
    assert got == pytest.approx(want, rel=1e-12)
    R0, P0 = twopoint.exact_two_point(scape, ens.params, 4.0, 0.0)
    assert R0 == pytest.approx(1.0, abs=1e-12)
    assert P0 == pytest.approx(1.0, abs=1e-12)


def test_pi_never_exceeds_r_pathwise():
    ens = _quenched("segment:3", 0.5, seed=8, n_paths=300)
    times = np.array([2.0, 5.0, 9.0])
    pos, cnt = twopoint.sample_disorder(ens, 0, times)
    for i in range(len(times)):
        for j in range(i, len(times)):
            no_jump = cnt[:, j] == cnt[:, i]
            same = pos[:, j] == pos[:, i]
            assert np.all(same[no_jump])


# -------------------------------------------------------- pooling algebra

def test_pooled_estimate_binomial_and_cluster():
    v, se = twopoint.pooled_estimate([(400, 100.0)])
    assert v == 0.25
    assert se == pytest.approx(math.sqrt(0.25 * 0.75 / 400))
    cells = [(10, 5.0), (10, 1.0)]
    v, se = twopoint.pooled_estimate(cells)
    assert v == pytest.approx(0.3)
    # cluster-robust: D/(D-1) * sum w_d^2 (m_d - v)^2
    want = math.sqrt(2.0 * (0.25 * 0.04 + 0.25 * 0.04))
    assert se == pytest.approx(want)


@st_.composite
def cell_maps(draw):
    ids = draw(st_.lists(st_.integers(0, 6), min_size=1, max_size=5,
                         unique=True))
    out = {}
    for d in ids:
        n = draw(st_.integers(1, 50))
        s = draw(st_.integers(0, n))
        out[d] = (n, float(s))
    return out


@given(cell_maps(), cell_maps())
@settings(max_examples=60, deadline=None)
def test_merge_then_pool_equals_pool_of_union(a, b):
    merged = twopoint.merge_cells(a, b)
    union = {}
    for cm in (a, b):
        for d, (n, s) in cm.items():
            n0, s0 = union.get(d, (0, 0.0))
            union[d] = (n0 + n, s0 + s)
    assert merged == union
    va, sa = twopoint.pooled_estimate(sorted(merged.values()))
    vb, sb = twopoint.pooled_estimate(sorted(union.values()))
    assert va == vb and sa == sb


# ----------------------------------------------------------- lag scalings

def test_scale_lags_formulas():
    theta = np.array([0.5, 1.0, 2.0])
    np.testing.assert_allclose(
        twopoint.scale_lags("linear", 100.0, theta), theta * 100.0)
    np.testing.assert_allclose(
        twopoint.scale_lags("power", 100.0, theta, gamma=0.5), theta * 10.0)
    np.testing.assert_allclose(
        twopoint.scale_lags("log", math.e ** 2, theta),
        theta * math.e ** 2 / 2.0)


def test_scale_lags_validation():
    theta = np.array([1.0, 2.0])
    with pytest.raises(ValueError, match="gamma"):
        twopoint.scale_lags("power", 10.0, theta)
    with pytest.raises(ValueError, match="t_w"):
        twopoint.scale_lags("log", 1.0, theta)
    with pytest.raises(ValueError, match="scaling"):
        twopoint.scale_lags("sqrt", 10.0, theta)
    with pytest.raises(ValueError, match="increasing"):
        twopoint.scale_lags("linear", 10.0, np.array([2.0, 1.0]))
    with pytest.raises(ValueError, match="increasing"):
        twopoint.scale_lags("linear", 10.0, np.array([-1.0, 1.0]))


# ------------------------------------------------------ collapse diagnostic

def _curve(t_w, values, errs, theta=(0.5, 1.0), **kw):
    args = dict(kind="R", averaging="annealed", scaling="linear", gamma=None,
                t_w=t_w, theta=np.asarray(theta, float),
                t=np.asarray(theta, float) * t_w,
                value=np.asarray(values, float),
                stderr=np.asarray(errs, float), n_paths=100, n_disorders=10)
    args.update(kw)
    return twopoint.AgingCurve(**args)


def test_collapse_report_arithmetic():
    c1 = _curve(10.0, [0.5, 0.4], [0.01, 0.01])
    c2 = _curve(100.0, [0.53, 0.4], [0.01, 0.01])
    rep = twopoint.collapse_report([c1, c2])
    assert rep.max_abs_dev[0] == pytest.approx(0.03)
    assert rep.max_z[0] == pytest.approx(0.03 / math.sqrt(2e-4))
    assert rep.max_z[1] == 0.0
    assert rep.worst_z == pytest.approx(rep.max_z[0])
    assert rep.passed == (rep.worst_z <= 3.0)
    assert "worst z" in rep.to_text()
    assert len(rep.rows()) == 2


def test_collapse_report_takes_pairwise_max():
    c1 = _curve(10.0, [0.50, 0.4], [0.01, 0.01])
    c2 = _curve(100.0, [0.52, 0.4], [0.01, 0.01])
    c3 = _curve(1000.0, [0.44, 0.4], [0.01, 0.01])
    rep = twopoint.collapse_report([c1, c2, c3])
    assert rep.max_abs_dev[0] == pytest.approx(0.08)  # c2 vs c3


def test_collapse_report_validation():
    c1 = _curve(10.0, [0.5, 0.4], [0.01, 0.01])
    with pytest.raises(ValueError):
        twopoint.collapse_report([c1])
    c2 = _curve(100.0, [0.5, 0.4], [0.01, 0.01], kind="Pi")
    with pytest.raises(ValueError, match="mix"):
        twopoint.collapse_report([c1, c2])
    c3 = _curve(100.0, [0.5, 0.4], [0.01, 0.01], theta=(0.5, 2.0))
    with pytest.raises(ValueError, match="theta"):
        twopoint.collapse_report([c1, c3])


# ------------------------------------------------------------ localization

def test_localization_at_time_zero_fixed_start():
    ens = twopoint.WalkEnsemble(
        graph="segment:5", beta=BETA, params=WalkParams(a=0.0),
        n_disorders=4, n_paths=8, seed=2)
    est = twopoint.localization_profile(ens, 0.0)
    assert est.value == 1.0
    assert est.stderr == 0.0
    assert est.argmax_vertex == twopoint.parse_graph("segment:5").origin


def test_localization_flags_thin_histogram():
    ens = twopoint.WalkEnsemble(
        graph="complete:200", beta=BETA,
        params=WalkParams(a=0.0, start="uniform"),
        n_disorders=2, n_paths=4, seed=2)
    est = twopoint.localization_profile(ens, 1e4)
    assert est.warning != ""


def test_localization_deep_trap_dominates():
    """Quenched complete graph: at long times the sup-occupation approaches
    max(tau)/sum(tau)."""
    ens = _quenched("complete:3", 0.0, seed=21, n_paths=3000)
    scape = twopoint.disorder_landscape(ens, 0)
    est = twopoint.localization_profile(ens, 5e3)
    want = scape.depths.max() / scape.depths.sum()
    assert est.argmax_vertex == int(np.argmax(scape.depths))
    assert abs(est.value - want) < 4.0 * est.stderr


# ------------------------------------------------- determinism / identity

def test_curves_are_deterministic():
    kw = dict(graph="complete:6", beta=BETA, params=WalkParams(a=0.5),
              n_disorders=3, n_paths=5, seed=77)
    theta = np.array([0.5, 1.0, 2.0])
    a = twopoint.build_aging_curve(
        twopoint.WalkEnsemble(**kw), "R", "linear", 10.0, theta)
    b = twopoint.build_aging_curve(
        twopoint.WalkEnsemble(**kw), "R", "linear", 10.0, theta)
    np.testing.assert_array_equal(a.value, b.value)
    np.testing.assert_array_equal(a.stderr, b.stderr)


def test_disorder_offset_keys_landscapes_by_id():
    base = twopoint.WalkEnsemble(
        graph="complete:5", beta=BETA, params=WalkParams(), n_disorders=4,
        n_paths=2, seed=9)
    shifted = twopoint.WalkEnsemble(
        graph="complete:5", beta=BETA, params=WalkParams(), n_disorders=4,
        n_paths=2, seed=9, disorder_offset=2)
    assert list(shifted.disorder_ids()) == [2, 3, 4, 5]
    np.testing.assert_array_equal(
        twopoint.disorder_landscape(base, 2).depths,
        twopoint.disorder_landscape(shifted, 2).depths)
    assert not np.array_equal(
        twopoint.disorder_landscape(base, 0).depths,
        twopoint.disorder_landscape(shifted, 4).depths)


def test_estimate_rejects_negative_times():
    ens = _quenched("complete:3", 0.0, n_paths=2)
    with pytest.raises(ValueError):
        twopoint.estimate_R(ens, -1.0, 1.0)
    with pytest.raises(ValueError):
        twopoint.estimate_Pi(ens, 1.0, -1.0)


def test_ensemble_validation():
    with pytest.raises(ValueError):
        twopoint.WalkEnsemble(graph="complete:3", beta=BETA,
                              params=WalkParams(), n_disorders=0, n_paths=1,
                              seed=1)


def test_curves_from_blocks_requires_matching_grid():
    ens = _quenched("complete:3", 0.0, n_paths=4)
    theta = np.array([1.0, 2.0])
    times = twopoint._query_times(5.0, theta * 5.0)
    blocks = twopoint._collect(ens, times)
    c = twopoint.curves_from_blocks(ens, 5.0, theta, blocks, times,
                                    "R", "linear", None)
    assert len(c.value) == 2
    with pytest.raises(ValueError, match="grid"):
        twopoint.curves_from_blocks(ens, 5.0, np.array([1.0, 3.0]), blocks,
                                    times, "R", "linear", None)
