# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the event loops in `_pyref`.

Kept operation-for-operation identical to the reference backend: same draw
order, same floating arithmetic, uniforms consumed one at a time from the
shared buffered source.  See _pyref for the draw-order contract and status
codes.
"""

from libc.math cimport ceil, log, log1p

OK, FULL, BOUNDARY, CAP = 0, 1, 2, 3

cdef double _MIN_U = 2.0 ** -53


cdef class _U:
    """Local view over a streams.UniformSource buffer."""
    cdef object src
    cdef double[::1] buf
    cdef Py_ssize_t pos, n

    def __init__(self, src):
        self.src = src
        self.buf = src.buf
        self.pos = src.pos
        self.n = self.buf.shape[0]

    cdef inline double next(self):
        cdef double v
        if self.pos >= self.n:
            self.src.pos = self.pos
            self.src.refill()
            self.buf = self.src.buf
            self.n = self.buf.shape[0]
            self.pos = 0
        v = self.buf[self.pos]
        self.pos += 1
        return v

    cdef inline void flush(self):
        self.src.pos = self.pos


cdef inline long long _cg_pick(double r, double[::1] cumta, long long n):
    ### first index with cumta[idx] > r
    cdef long long lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if cumta[mid] > r:
            hi = mid
        else:
            lo = mid + 1
    return lo if lo < n else n - 1


def walk_query(int kind, long long[::1] indptr, long long[::1] indices,
               double[::1] ta, double[::1] tam1, double[::1] cumta,
               double ta_total, double nu,
               unsigned char[::1] boundary_mask, long long x0,
               double horizon, long long event_cap,
               double[::1] qtimes, long long[::1] out_pos,
               long long[::1] out_cnt, object src):
    cdef _U u = _U(src)
    cdef long long x = x0, jumps = 0, y, k
    cdef long long n = ta.shape[0]
    cdef Py_ssize_t qi = 0, nq = qtimes.shape[0]
    cdef Py_ssize_t nmask = boundary_mask.shape[0]
    cdef double t = 0.0, s, w, tnext, r, acc
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
        tnext = t + (-log1p(-u.next())) / w
        while qi < nq and qtimes[qi] < tnext:
            out_pos[qi] = x
            out_cnt[qi] = jumps
            qi += 1
        if tnext > horizon:
            break
        if kind == 1:
            while True:
                r = u.next() * ta_total
                y = _cg_pick(r, cumta, n)
                if y != x:
                    break
        else:
            r = u.next() * s
            acc = 0.0
            y = indices[indptr[x + 1] - 1]
            for k in range(indptr[x], indptr[x + 1]):
                acc += ta[indices[k]]
                if r < acc:
                    y = indices[k]
                    break
        if nmask > 0 and boundary_mask[y]:
            u.flush()
            return BOUNDARY, jumps
        x = y
        t = tnext
        jumps += 1
        if jumps >= event_cap:
            u.flush()
            return CAP, jumps
    while qi < nq:
        out_pos[qi] = x
        out_cnt[qi] = jumps
        qi += 1
    u.flush()
    return OK, jumps


def walk_record(int kind, long long[::1] indptr, long long[::1] indices,
                double[::1] ta, double[::1] tam1, double[::1] cumta,
                double ta_total, double nu,
                unsigned char[::1] boundary_mask,
                double horizon, long long event_cap,
                double[::1] rec_times, long long[::1] rec_states,
                double[::1] state, object src):
    cdef _U u = _U(src)
    cdef double t = state[0]
    cdef long long x = <long long>state[1]
    cdef long long jumps = <long long>state[2]
    cdef long long n = ta.shape[0], y, k
    cdef Py_ssize_t cap = rec_times.shape[0], nrec = 0
    cdef Py_ssize_t nmask = boundary_mask.shape[0]
    cdef double s, w, tnext, r, acc
    cdef int status = OK
    while True:
        # capacity first: a FULL return must not consume any uniforms, so
        # that a resumed run replays the same stream as a one-shot run
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
        tnext = t + (-log1p(-u.next())) / w
        if tnext > horizon:
            t = horizon
            break
        if kind == 1:
            while True:
                r = u.next() * ta_total
                y = _cg_pick(r, cumta, n)
                if y != x:
                    break
        else:
            r = u.next() * s
            acc = 0.0
            y = indices[indptr[x + 1] - 1]
            for k in range(indptr[x], indptr[x + 1]):
                acc += ta[indices[k]]
                if r < acc:
                    y = indices[k]
                    break
        if nmask > 0 and boundary_mask[y]:
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
    state[1] = <double>x
    state[2] = <double>jumps
    u.flush()
    return status, nrec


def chain_query(double[::1] hold_mean, double[::1] p_right,
                double entry_right, long long i_left, long long i_right,
                double duration, long long event_cap,
                double[::1] qtimes, long long[::1] out_atom,
                long long[::1] out_cnt, object src):
    cdef _U u = _U(src)
    cdef long long last = hold_mean.shape[0] - 1
    cdef long long i, jumps = 0, edge
    cdef Py_ssize_t qi = 0, nq = qtimes.shape[0]
    cdef double t = 0.0, tnext
    i = i_right if u.next() < entry_right else i_left
    edge = 1 if (i == 0 or i == last) else 0
    while True:
        tnext = t + (-log1p(-u.next())) * hold_mean[i]
        while qi < nq and qtimes[qi] < tnext:
            out_atom[qi] = i
            out_cnt[qi] = jumps
            qi += 1
        if tnext > duration:
            break
        i = i + 1 if u.next() < p_right[i] else i - 1
        if i == 0 or i == last:
            edge += 1
        t = tnext
        jumps += 1
        if jumps >= event_cap:
            u.flush()
            return CAP, jumps, edge
    while qi < nq:
        out_atom[qi] = i
        out_cnt[qi] = jumps
        qi += 1
    u.flush()
    return OK, jumps, edge


def chain_record(double[::1] hold_mean, double[::1] p_right,
                 double entry_right, long long i_left, long long i_right,
                 double duration, long long event_cap,
                 double[::1] rec_times, long long[::1] rec_atoms,
                 double[::1] state, object src):
    cdef _U u = _U(src)
    cdef long long last = hold_mean.shape[0] - 1
    cdef long long i, jumps
    cdef Py_ssize_t cap = rec_times.shape[0], nrec = 0
    cdef double t, tnext
    cdef int status = OK
    if state[3] == 0.0:
        i = i_right if u.next() < entry_right else i_left
        state[1] = <double>i
        state[3] = 1.0
    t = state[0]
    i = <long long>state[1]
    jumps = <long long>state[2]
    while True:
        if nrec >= cap:  # before any draw, so FULL never consumes uniforms
            status = FULL
            break
        tnext = t + (-log1p(-u.next())) * hold_mean[i]
        if tnext > duration:
            t = duration
            break
        i = i + 1 if u.next() < p_right[i] else i - 1
        t = tnext
        jumps += 1
        rec_times[nrec] = t
        rec_atoms[nrec] = i
        nrec += 1
        if jumps >= event_cap:
            status = CAP
            break
    state[0] = t
    state[1] = <double>i
    state[2] = <double>jumps
    u.flush()
    return status, nrec


cdef inline long long _sojourn(double uval, double q, long long steps_left):
    cdef double g
    if q >= 1.0:
        return 1
    if q <= 0.0:
        return steps_left + 1
    if uval < _MIN_U:
        uval = _MIN_U
    g = ceil(log(uval) / log1p(-q))
    if g < 1.0:
        return 1
    if g > <double>steps_left:
        return steps_left + 1
    return <long long>g


def flip_first_entry(double[::1] flip_prob, unsigned char[::1] top_mask,
                     int n_bits, long long x0, long long after_step,
                     long long horizon_step, long long flip_cap, object src):
    cdef _U u = _U(src)
    cdef long long x = x0, step = 0, flips = 0, g
    cdef int j
    while True:
        g = _sojourn(u.next(), flip_prob[x], horizon_step - step)
        step += g
        if step > horizon_step:
            u.flush()
            return OK, -1, flips
        j = <int>(u.next() * n_bits)
        if j >= n_bits:
            j = n_bits - 1
        x ^= (<long long>1) << j
        flips += 1
        if top_mask[x] and step > after_step:
            u.flush()
            return OK, step, flips
        if flips >= flip_cap:
            u.flush()
            return CAP, -1, flips


def flip_query(double[::1] flip_prob, int n_bits, long long x0,
               long long[::1] qsteps, long long flip_cap,
               long long[::1] out_state, object src):
    cdef _U u = _U(src)
    cdef long long x = x0, step = 0, flips = 0, g, nxt, horizon
    cdef Py_ssize_t qi = 0, nq = qsteps.shape[0]
    cdef int j
    horizon = qsteps[nq - 1] if nq > 0 else 0
    while True:
        g = _sojourn(u.next(), flip_prob[x], horizon - step)
        nxt = step + g
        while qi < nq and qsteps[qi] < nxt:
            out_state[qi] = x
            qi += 1
        if nxt > horizon:
            u.flush()
            return OK, flips
        j = <int>(u.next() * n_bits)
        if j >= n_bits:
            j = n_bits - 1
        x ^= (<long long>1) << j
        step = nxt
        flips += 1
        if flips >= flip_cap:
            u.flush()
            return CAP, flips


def flip_record(double[::1] flip_prob, int n_bits, long long x0,
                long long horizon_step, long long flip_cap,
                long long[::1] rec_steps, long long[::1] rec_states,
                double[::1] state, object src):
    cdef _U u = _U(src)
    cdef long long step = <long long>state[0]
    cdef long long x = <long long>state[1]
    cdef long long flips = <long long>state[2]
    cdef long long g, nxt
    cdef Py_ssize_t cap = rec_steps.shape[0], nrec = 0
    cdef int j, status = OK
    while True:
        if nrec >= cap:  # before any draw, so FULL never consumes uniforms
            status = FULL
            break
        g = _sojourn(u.next(), flip_prob[x], horizon_step - step)
        nxt = step + g
        if nxt > horizon_step:
            step = horizon_step
            break
        j = <int>(u.next() * n_bits)
        if j >= n_bits:
            j = n_bits - 1
        x ^= (<long long>1) << j
        step = nxt
        flips += 1
        rec_steps[nrec] = step
        rec_states[nrec] = x
        nrec += 1
        if flips >= flip_cap:
            status = CAP
            break
    state[0] = <double>step
    state[1] = <double>x
    state[2] = <double>flips
    u.flush()
    return status, nrec


def renewal_density(double[::1] f, double dt, double[::1] out):
    cdef Py_ssize_t n = f.shape[0], j, k
    cdef double acc, denom
    out[0] = f[0]
    denom = 1.0 - 0.5 * dt * f[0]
    for j in range(1, n):
        acc = 0.0
        for k in range(1, j):
            acc += f[j - k] * out[k]
        out[j] = (f[j] * (1.0 + 0.5 * dt * out[0]) + dt * acc) / denom
    return None
