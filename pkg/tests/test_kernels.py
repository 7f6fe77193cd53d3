"""Compiled vs pure-Python kernel backends: bitwise parity and status codes.

Both backends consume uniforms from the same buffered source in the same
order, so trajectories must agree bit for bit, not just statistically.
"""

import numpy as np
import pytest

from agelab import analytic, fin, graphs, kernels, landscape, rem, trapwalk
from agelab.streams import UniformSource, stream

pytestmark = pytest.mark.skipif(
    len(kernels.available_backends()) < 2,
    reason="compiled backend unavailable; parity needs both")


def _with_backend(name, fn):
    prev = kernels.backend()
    kernels.set_backend(name)
    try:
        return fn()
    finally:
        kernels.set_backend(prev)


def _walk_case(graph_text, a, seed, horizon):
    g = graphs.parse_graph(graph_text)
    scape = landscape.sample_landscape(g, "exponential", 2.0, seed)
    params = trapwalk.WalkParams(a=a, boundary="allow"
                                 if graph_text.startswith("segment")
                                 else "error")
    return scape, params, horizon


@pytest.mark.parametrize("graph_text,a", [
    ("complete:50", 0.0), ("complete:50", 1.0),
    ("segment:40", 0.0), ("segment:40", 0.5),
    ("torus:8", 0.5),
])
def test_walk_record_bitwise_parity(graph_text, a):
    scape, params, horizon = _walk_case(graph_text, a, seed=21, horizon=200.0)

    def run():
        src = UniformSource(stream(77))
        traj = trapwalk.simulate_from(scape, params, horizon, src)
        return traj, src.next()

    results = {name: _with_backend(name, run)
               for name in kernels.available_backends()}
    (t1, u1), (t2, u2) = results.values()
    assert np.array_equal(t1.jump_times, t2.jump_times)
    assert np.array_equal(t1.states, t2.states)
    assert t1.x0 == t2.x0
    assert u1 == u2, "backends consumed different numbers of uniforms"


@pytest.mark.parametrize("graph_text,a", [
    ("complete:30", 0.0), ("segment:30", 0.5), ("torus:6", 1.0),
])
def test_walk_query_matches_record(graph_text, a, each_backend):
    """Same stream -> same path; queries must read off the recorded one."""
    scape, params, horizon = _walk_case(graph_text, a, seed=4, horizon=150.0)
    traj = trapwalk.simulate_from(scape, params, horizon,
                                  UniformSource(stream(31)))
    qtimes = np.array([0.0, 0.5, 3.0, 20.0, 149.0, 150.0])
    pos, cnt, jumps = trapwalk.query_positions(scape, params, qtimes,
                                               UniformSource(stream(31)))
    for k, t in enumerate(qtimes):
        assert pos[k] == trapwalk.position_at(traj, t)
        assert cnt[k] == trapwalk.jumps_by(traj, t)
    assert jumps == len(traj.jump_times)


def test_walk_record_resume_equals_one_shot(each_backend):
    """Tiny record buffers exercise the FULL status + resumable state."""
    scape, params, horizon = _walk_case("complete:20", 0.0, seed=3,
                                        horizon=300.0)
    kind, indptr, indices, ta, tam1, cumta, total, mask = (
        trapwalk._kernel_args(scape, params))

    def run(chunk):
        src = UniformSource(stream(55))
        x0 = scape.graph.origin
        state = np.array([0.0, float(x0), 0.0])
        times, sts = [], []
        while True:
            rec_t = np.empty(chunk, dtype=np.float64)
            rec_x = np.empty(chunk, dtype=np.int64)
            status, nrec = kernels.walk_record(
                kind, indptr, indices, ta, tam1, cumta, total, params.nu,
                mask, horizon, params.event_cap, rec_t, rec_x, state, src)
            times.extend(rec_t[:nrec])
            sts.extend(rec_x[:nrec])
            if status != kernels.FULL:
                assert status == kernels.OK
                return times, sts

    small = run(2)
    big = run(4096)
    assert len(small[0]) > 2, "case too short to exercise FULL"
    assert small == big


def test_chain_record_bitwise_parity():
    rho = fin.sample_speed_measure(L=15.0, v_min=0.05, alpha=0.5, seed=6)

    def run():
        src = UniformSource(stream(91))
        path = fin.simulate_fin(rho, duration=400.0, rng=src)
        return path, src.next()

    results = {name: _with_backend(name, run)
               for name in kernels.available_backends()}
    (p1, u1), (p2, u2) = results.values()
    assert p1.entry_atom == p2.entry_atom
    assert np.array_equal(p1.jump_times, p2.jump_times)
    assert np.array_equal(p1.atoms, p2.atoms)
    assert p1.edge_entries == p2.edge_entries
    assert u1 == u2


def test_chain_query_matches_record(each_backend):
    rho = fin.sample_speed_measure(L=15.0, v_min=0.05, alpha=0.5, seed=8)
    path = fin.simulate_fin(rho, duration=250.0,
                            rng=UniformSource(stream(14)))
    hold, p_right = fin.chain_tables(rho)
    i_left, i_right, p_entry = fin.entry_split(rho)
    qtimes = np.array([0.0, 1.0, 12.0, 100.0, 250.0])
    out_atom = np.empty(len(qtimes), dtype=np.int64)
    out_cnt = np.empty(len(qtimes), dtype=np.int64)
    status, _, _ = kernels.chain_query(
        hold, p_right, p_entry, i_left, i_right, 250.0, 10**9,
        qtimes, out_atom, out_cnt, UniformSource(stream(14)))
    assert status == kernels.OK
    for k, t in enumerate(qtimes):
        assert out_atom[k] == fin.atom_at(path, t)


def test_flip_record_bitwise_parity():
    chain = rem.make_chain(N=8, beta=2.0, E=-1.0, seed=5)

    def run():
        src = UniformSource(stream(44))
        path = rem.simulate_rem(chain, n_steps=2_000_000, rng=src)
        return path, src.next()

    results = {name: _with_backend(name, run)
               for name in kernels.available_backends()}
    (p1, u1), (p2, u2) = results.values()
    assert p1.x0 == p2.x0
    assert np.array_equal(p1.flip_steps, p2.flip_steps)
    assert np.array_equal(p1.states, p2.states)
    assert u1 == u2


def test_flip_first_entry_parity():
    chain = rem.make_chain(N=8, beta=2.0, E=-1.0, seed=5)
    assert len(chain.top) > 0

    def run():
        src = UniformSource(stream(101))
        x0 = int(chain.top[0])
        return kernels.flip_first_entry(chain.flip_prob, chain.top_mask,
                                        chain.N, x0, 1000, 50_000_000,
                                        10**12, src)

    vals = {name: _with_backend(name, run)
            for name in kernels.available_backends()}
    a, b = vals.values()
    assert a == b


def test_flip_query_matches_record(each_backend):
    chain = rem.make_chain(N=6, beta=1.5, E=-1.0, seed=9)
    path = rem.simulate_rem(chain, n_steps=500_000,
                            rng=UniformSource(stream(27)))
    qsteps = np.array([0, 1, 1000, 250_000, 500_000], dtype=np.int64)
    out_state = np.empty(len(qsteps), dtype=np.int64)
    # the query source replays the same stream except for the start draw,
    # which simulate_rem performed outside the kernel; skip it explicitly
    src = UniformSource(stream(27))
    rem._resolve_start(chain, "top", src)
    status, _ = kernels.flip_query(
        chain.flip_prob, chain.N, path.x0, qsteps, 10**12, out_state, src)
    assert status == kernels.OK
    for k, s in enumerate(qsteps):
        assert out_state[k] == rem.state_at(path, int(s))


def test_renewal_density_parity():
    def run():
        return analytic.solve_renewal(0.5, 50.0, 0.01).density

    results = {name: _with_backend(name, run)
               for name in kernels.available_backends()}
    a, b = results.values()
    assert np.max(np.abs(a - b)) < 1e-10


def test_boundary_status_raises():
    g = graphs.segment(1)
    scape = landscape.sample_landscape(g, "exponential", 2.0, seed=2)
    params = trapwalk.WalkParams(a=0.0, boundary="error")
    with pytest.raises(trapwalk.BoundaryHitError):
        trapwalk.simulate(scape, params, horizon=50.0, seed=1)


def test_trapwalk_rejects_hypercube():
    g = graphs.hypercube(4)
    scape = landscape.sample_landscape(g, "gaussian", 2.0, seed=2)
    with pytest.raises(ValueError, match="rem"):
        trapwalk.simulate(scape, trapwalk.WalkParams(), horizon=1.0, seed=1)


def test_event_cap_raises(each_backend):
    scape, params, _ = _walk_case("complete:20", 0.0, seed=3, horizon=1.0)
    capped = trapwalk.WalkParams(a=0.0, event_cap=3)
    with pytest.raises(trapwalk.EventBudgetError):
        trapwalk.simulate(scape, capped, horizon=10_000.0, seed=12)
