"""Pure python reference implementations of the hot simulation loops.

Each function here has a compiled twin in `_core.pyx`.  The two are kept
operation-for-operation identical: same draw order, same floating
arithmetic, uniforms consumed one at a time through the shared buffered
source.  That makes paths bit-identical across backends, which the test
suite checks.  The draw order per event is part of the contract:

  walk   u1 -> holding time, u2 -> destination (complete graph redraws u2
         until the destination differs from the current vertex)
  chain  one uniform for the entry atom on the first call, then per event
         u1 -> holding time, u2 -> direction
  flips  u1 -> geometric sojourn, u2 -> which bit to flip

Status codes: OK = 0 (ran to the horizon), FULL = 1 (record buffers
exhausted, call again to resume), BOUNDARY = 2 (walk tried to enter a
forbidden vertex), CAP = 3 (event budget exhausted).
"""

import math

import numpy as np

OK, FULL, BOUNDARY, CAP = 0, 1, 2, 3

_MIN_U = 2.0 ** -53  # smallest uniform we allow inside log()


def _holding(u):
    ### inverse-cdf exponential; -log1p(-u) is exact near u=0
    return -math.log1p(-u)


def walk_query(kind, indptr, indices, ta, tam1, cumta, ta_total, nu,
               boundary_mask, x0, horizon, event_cap,
               qtimes, out_pos, out_cnt, src):
    """Run one trap-walk path to `horizon`, answering position queries.

    qtimes must be sorted ascending; out_pos[i]/out_cnt[i] receive the
    vertex occupied at qtimes[i] (right-continuous) and the number of jumps
    completed by then.  kind 0 = CSR adjacency, 1 = complete graph.
    Returns (status, total_jumps).
    """
    x = int(x0)
    t = 0.0
    jumps = 0
    qi = 0
    nq = len(qtimes)
    nmask = len(boundary_mask)
    n = len(ta)
    while True:
        if kind == 1:
            s = ta_total - ta[x]
        else:
            s = 0.0
            for k in range(indptr[x], indptr[x + 1]):
                s += ta[indices[k]]
        w = nu * tam1[x] * s
        if w <= 0.0:
            break
        tnext = t + _holding(src.next()) / w
        while qi < nq and qtimes[qi] < tnext:
            out_pos[qi] = x
            out_cnt[qi] = jumps
            qi += 1
        if tnext > horizon:
            break
        if kind == 1:
            while True:
                r = src.next() * ta_total
                lo, hi = 0, n
                while lo < hi:
                    mid = (lo + hi) >> 1
                    if cumta[mid] > r:
                        hi = mid
                    else:
                        lo = mid + 1
                y = lo if lo < n else n - 1
                if y != x:
                    break
        else:
            r = src.next() * s
            acc = 0.0
            y = indices[indptr[x + 1] - 1]
            for k in range(indptr[x], indptr[x + 1]):
                acc += ta[indices[k]]
                if r < acc:
                    y = indices[k]
                    break
        if nmask and boundary_mask[y]:
            return BOUNDARY, jumps
        x = y
        t = tnext
        jumps += 1
        if jumps >= event_cap:
            return CAP, jumps
    while qi < nq:
        out_pos[qi] = x
        out_cnt[qi] = jumps
        qi += 1
    return OK, jumps


def walk_record(kind, indptr, indices, ta, tam1, cumta, ta_total, nu,
                boundary_mask, horizon, event_cap,
                rec_times, rec_states, state, src):
    """Record every jump (time, new vertex) up to `horizon`.

    state is a float64[3] scratch [t, x, jumps] that lets the caller resume
    after a FULL return with fresh buffers.  Returns (status, n_recorded).
    """
    t = state[0]
    x = int(state[1])
    jumps = int(state[2])
    cap = len(rec_times)
    nmask = len(boundary_mask)
    n = len(ta)
    nrec = 0
    status = OK
    while True:
        ### capacity first: a FULL return must not consume any uniforms, so
        ### that a resumed run replays the same stream as a one-shot run
        if nrec >= cap:
            status = FULL
            break
        if kind == 1:
            s = ta_total - ta[x]
        else:
            s = 0.0
            for k in range(indptr[x], indptr[x + 1]):
                s += ta[indices[k]]
        w = nu * tam1[x] * s
        if w <= 0.0:
            t = horizon
            break
        tnext = t + _holding(src.next()) / w
        if tnext > horizon:
            t = horizon
            break
        if kind == 1:
            while True:
                r = src.next() * ta_total
                lo, hi = 0, n
                while lo < hi:
                    mid = (lo + hi) >> 1
                    if cumta[mid] > r:
                        hi = mid
                    else:
                        lo = mid + 1
                y = lo if lo < n else n - 1
                if y != x:
                    break
        else:
            r = src.next() * s
            acc = 0.0
            y = indices[indptr[x + 1] - 1]
            for k in range(indptr[x], indptr[x + 1]):
                acc += ta[indices[k]]
                if r < acc:
                    y = indices[k]
                    break
        if nmask and boundary_mask[y]:
            status = BOUNDARY
            break
        x = y
        t = tnext
        jumps += 1
        rec_times[nrec] = t
        rec_states[nrec] = x
        nrec += 1
        if jumps >= event_cap:
            status = CAP
            break
    state[0] = t
    state[1] = float(x)
    state[2] = float(jumps)
    return status, nrec


def chain_query(hold_mean, p_right, entry_right, i_left, i_right,
                duration, event_cap, qtimes, out_atom, out_cnt, src):
    """Atom-chain path on [0, duration], answering occupancy queries.

    The first uniform picks the entry atom (i_right with prob entry_right).
    Returns (status, jumps, edge_entries) where edge_entries counts visits
    to the first or last atom, a window-truncation diagnostic.
    """
    last = len(hold_mean) - 1
    i = i_right if src.next() < entry_right else i_left
    edge = 1 if (i == 0 or i == last) else 0
    t = 0.0
    jumps = 0
    qi = 0
    nq = len(qtimes)
    while True:
        tnext = t + _holding(src.next()) * hold_mean[i]
        while qi < nq and qtimes[qi] < tnext:
            out_atom[qi] = i
            out_cnt[qi] = jumps
            qi += 1
        if tnext > duration:
            break
        i = i + 1 if src.next() < p_right[i] else i - 1
        if i == 0 or i == last:
            edge += 1
        t = tnext
        jumps += 1
        if jumps >= event_cap:
            return CAP, jumps, edge
    while qi < nq:
        out_atom[qi] = i
        out_cnt[qi] = jumps
        qi += 1
    return OK, jumps, edge


def chain_record(hold_mean, p_right, entry_right, i_left, i_right,
                 duration, event_cap, rec_times, rec_atoms, state, src):
    """Record every atom-chain jump; state = [t, i, jumps, entered]."""
    last = len(hold_mean) - 1
    if state[3] == 0.0:
        i = i_right if src.next() < entry_right else i_left
        state[1] = float(i)
        state[3] = 1.0
    t = state[0]
    i = int(state[1])
    jumps = int(state[2])
    cap = len(rec_times)
    nrec = 0
    status = OK
    while True:
        if nrec >= cap:  # before any draw, so FULL never consumes uniforms
            status = FULL
            break
        tnext = t + _holding(src.next()) * hold_mean[i]
        if tnext > duration:
            t = duration
            break
        i = i + 1 if src.next() < p_right[i] else i - 1
        t = tnext
        jumps += 1
        rec_times[nrec] = t
        rec_atoms[nrec] = i
        nrec += 1
        if jumps >= event_cap:
            status = CAP
            break
    state[0] = t
    state[1] = float(i)
    state[2] = float(jumps)
    return status, nrec


def _sojourn(u, q, steps_left):
    """Geometric number of steps until the next flip, clamped to the horizon."""
    if q >= 1.0:
        return 1
    if q <= 0.0:
        return steps_left + 1
    if u < _MIN_U:
        u = _MIN_U
    g = math.ceil(math.log(u) / math.log1p(-q))
    if g < 1:
        g = 1
    if g > steps_left:
        return steps_left + 1
    return int(g)


def flip_first_entry(flip_prob, top_mask, n_bits, x0, after_step,
                     horizon_step, flip_cap, src):
    """First step in (after_step, horizon_step] whose flip lands in the top.

    Returns (status, entry_step or -1, flips).  Sojourns in a state are
    compressed geometrically, so the cost scales with the number of flips
    rather than the number of steps.
    """
    x = int(x0)
    step = 0
    flips = 0
    while True:
        g = _sojourn(src.next(), flip_prob[x], horizon_step - step)
        step += g
        if step > horizon_step:
            return OK, -1, flips
        j = int(src.next() * n_bits)
        if j >= n_bits:
            j = n_bits - 1
        x ^= 1 << j
        flips += 1
        if top_mask[x] and step > after_step:
            return OK, step, flips
        if flips >= flip_cap:
            return CAP, -1, flips


def flip_query(flip_prob, n_bits, x0, qsteps, flip_cap, out_state, src):
    """State of the flip chain at the queried step counts (ascending)."""
    x = int(x0)
    step = 0
    flips = 0
    qi = 0
    nq = len(qsteps)
    horizon = int(qsteps[nq - 1]) if nq else 0
    while True:
        g = _sojourn(src.next(), flip_prob[x], horizon - step)
        nxt = step + g
        while qi < nq and qsteps[qi] < nxt:
            out_state[qi] = x
            qi += 1
        if nxt > horizon:
            return OK, flips
        j = int(src.next() * n_bits)
        if j >= n_bits:
            j = n_bits - 1
        x ^= 1 << j
        step = nxt
        flips += 1
        if flips >= flip_cap:
            return CAP, flips


def flip_record(flip_prob, n_bits, x0, horizon_step, flip_cap,
                rec_steps, rec_states, state, src):
    """Record every flip (step, new state); state = [step, x, flips]."""
    step = int(state[0])
    x = int(state[1])
    flips = int(state[2])
    cap = len(rec_steps)
    nrec = 0
    status = OK
    while True:
        if nrec >= cap:  # before any draw, so FULL never consumes uniforms
            status = FULL
            break
        g = _sojourn(src.next(), flip_prob[x], horizon_step - step)
        nxt = step + g
        if nxt > horizon_step:
            step = horizon_step
            break
        j = int(src.next() * n_bits)
        if j >= n_bits:
            j = n_bits - 1
        x ^= 1 << j
        step = nxt
        flips += 1
        rec_steps[nrec] = step
        rec_states[nrec] = x
        nrec += 1
        if flips >= flip_cap:
            status = CAP
            break
    state[0] = float(step)
    state[1] = float(x)
    state[2] = float(flips)
    return status, nrec


def renewal_density(f, dt, out):
    """Solve u = f + f * u (Volterra convolution) by implicit trapezoid.

    f and out are float64 grids on 0, dt, 2*dt, ...; out receives the
    renewal density u.
    """
    n = len(f)
    out[0] = f[0]
    denom = 1.0 - 0.5 * dt * f[0]
    fr = np.ascontiguousarray(f[::-1])
    for j in range(1, n):
        acc = float(np.dot(fr[n - j:n - 1], out[1:j]))
        out[j] = (f[j] * (1.0 + 0.5 * dt * out[0]) + dt * acc) / denom
    return None
