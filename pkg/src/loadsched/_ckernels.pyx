# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled scoring kernels (see ``_pykernels`` for the reference contract).

Candidates are visited depth-first over loads, load 0 outermost, so the
visiting order is the lexicographic candidate order.  After fixing a prefix
of loads, each future error sample is confined to an interval set by the
smallest and largest demand the remaining loads can still add.  That gives
two prunes: a subtree whose best case already violates the hard barrier,
and a subtree whose cost lower bound exceeds the incumbent.  Pruning is
strict (with slack), so the lexicographically first minimizer always
survives and the answer does not depend on the thread count or on the
incumbent used to seed the search.
"""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange, parallel, threadid
from libc.math cimport log, sqrt, INFINITY
from libc.stdlib cimport malloc, free

cnp.import_array()

ctypedef struct Problem:
    const double* forecast
    const double* traces        # stacked rows of every load, ns columns each
    const long* offsets
    const long* counts
    const unsigned char* first_bits
    const double* rem_lo        # (n + 1) x ns: least demand of loads k.. at each sample
    const double* rem_hi        # (n + 1) x ns: largest demand of loads k..
    int n
    int ns
    int n_cost                  # columns from n_cost on are feasibility-only
    double mu
    double floor_
    double log_floor
    double e_star
    bint hard
    bint fallback

ctypedef struct Search:
    double* ep                  # (n + 1) x ns prefix errors
    double* suffix              # ns + 1 suffix sums of leaf lower bounds
    double best
    long best_n_on
    long best_flat


cdef inline double _g(double e, const Problem* p) noexcept nogil:
    if p.fallback:
        return e * e if e < 0 else 0.0
    if e > p.floor_:
        return e * e - p.mu * log(e)
    return e * e - p.mu * p.log_floor


cdef inline double _term(double e, const Problem* p) noexcept nogil:
    if e > p.floor_:
        return e * e - p.mu * log(e)
    return e * e - p.mu * p.log_floor


cdef inline double _lower(int l, double lo, double hi, const Problem* p) noexcept nogil:
    """Least per-sample term for an error anywhere in [lo, hi]."""
    cdef double best, v
    if l >= p.n_cost:
        return 0.0
    if p.fallback:
        return hi * hi if hi < 0 else 0.0
    if p.hard and lo < 0:
        lo = 0.0
    best = _g(lo, p)
    v = _g(hi, p)
    if v < best:
        best = v
    if lo < 0 and hi > 0:
        v = _g(0.0, p)
        if v < best:
            best = v
    if lo < p.e_star and p.e_star < hi:
        v = _g(p.e_star, p)
        if v < best:
            best = v
    return best


cdef inline bint _dead(int l, double hi, const Problem* p) noexcept nogil:
    """True when even the least remaining demand breaks the hard barrier."""
    return p.hard and not p.fallback and hi <= 0.0


cdef inline double _slack(double best) noexcept nogil:
    return 1e-9 * (best if best > 0 else -best) + 1e-12


cdef inline bint _better(double cost, long n_on, long flat, Search* s, const Problem* p) noexcept nogil:
    if cost != s.best:
        return cost < s.best
    if p.fallback and n_on != s.best_n_on:
        return n_on < s.best_n_on
    return flat < s.best_flat


cdef inline bint _beaten(double bound, Search* s) noexcept nogil:
    return s.best < INFINITY and bound > s.best + _slack(s.best)


cdef void _leaf(int m, long flat_prefix, long n_on_prefix, long r_first, long r_last,
                const Problem* p, Search* s) noexcept nogil:
    """Score rows r_first..r_last-1 of the last load under prefix errors ep[m]."""
    cdef int ns = p.ns
    cdef const double* src = s.ep + m * ns
    cdef const double* lo_rem = p.rem_lo + m * ns
    cdef const double* hi_rem = p.rem_hi + m * ns
    cdef const double* row
    cdef long r, flat, n_on
    cdef int l
    cdef double e, cost
    cdef bint dead

    s.suffix[ns] = 0.0
    for l in range(ns - 1, -1, -1):
        s.suffix[l] = s.suffix[l + 1] + _lower(l, src[l] - hi_rem[l], src[l] - lo_rem[l], p)
    if _beaten(s.suffix[0], s):
        return

    for r in range(r_first, r_last):
        row = p.traces + (p.offsets[m] + r) * ns
        flat = flat_prefix * p.counts[m] + r
        n_on = n_on_prefix + p.first_bits[p.offsets[m] + r]
        dead = False
        cost = 0.0
        for l in range(ns):
            e = src[l] - row[l]
            if l >= p.n_cost:
                if _dead(l, e, p):
                    dead = True
                    break
                continue
            if p.fallback:
                if e < 0:
                    cost = cost + e * e
            else:
                if p.hard and e <= 0.0:
                    dead = True
                    break
                cost = cost + _term(e, p)
            if _beaten(cost + s.suffix[l + 1], s):
                dead = True
                break
        if not dead and _better(cost, n_on, flat, s, p):
            s.best = cost
            s.best_n_on = n_on
            s.best_flat = flat


cdef void _branch(int m, long flat_prefix, long n_on_prefix, long r_first, long r_last,
                  const Problem* p, Search* s) noexcept nogil:
    """Expand rows r_first..r_last-1 of load m (not the last load)."""
    cdef int ns = p.ns
    cdef const double* src = s.ep + m * ns
    cdef double* dst = s.ep + (m + 1) * ns
    cdef const double* lo_rem = p.rem_lo + (m + 1) * ns
    cdef const double* hi_rem = p.rem_hi + (m + 1) * ns
    cdef const double* row
    cdef long r, flat, n_on
    cdef int l
    cdef double e, bound
    cdef bint dead

    for r in range(r_first, r_last):
        row = p.traces + (p.offsets[m] + r) * ns
        flat = flat_prefix * p.counts[m] + r
        n_on = n_on_prefix + p.first_bits[p.offsets[m] + r]
        dead = False
        bound = 0.0
        for l in range(ns):
            e = src[l] - row[l]
            dst[l] = e
            if _dead(l, e - lo_rem[l], p):
                dead = True
                break
            bound = bound + _lower(l, e - hi_rem[l], e - lo_rem[l], p)
        if dead or _beaten(bound, s):
            continue
        if m + 1 == p.n - 1:
            _leaf(m + 1, flat, n_on, 0, p.counts[m + 1], p, s)
        else:
            _branch(m + 1, flat, n_on, 0, p.counts[m + 1], p, s)


cdef void _visit(long r0, const Problem* p, Search* s) noexcept nogil:
    """Search the subtree below row r0 of load 0."""
    if p.n == 1:
        _leaf(0, 0, 0, r0, r0 + 1, p, s)
    else:
        _branch(0, 0, 0, r0, r0 + 1, p, s)


cdef void _seed(long flat, const Problem* p, Search* s) noexcept nogil:
    """Score one candidate in full and make it the incumbent if finite."""
    cdef int ns = p.ns
    cdef long r, divisor
    cdef long n_on = 0
    cdef int i, k, l
    cdef double e, cost = 0.0
    cdef double* work = s.ep + p.n * ns
    for l in range(ns):
        work[l] = p.forecast[l]
    # subtract in load order, exactly as the search does
    for i in range(p.n):
        divisor = 1
        for k in range(i + 1, p.n):
            divisor = divisor * p.counts[k]
        r = (flat // divisor) % p.counts[i]
        n_on = n_on + p.first_bits[p.offsets[i] + r]
        for l in range(ns):
            work[l] = work[l] - p.traces[(p.offsets[i] + r) * ns + l]
    for l in range(ns):
        e = work[l]
        if l >= p.n_cost:
            if _dead(l, e, p):
                return
            continue
        if p.fallback:
            if e < 0:
                cost = cost + e * e
        else:
            if p.hard and e <= 0.0:
                return
            cost = cost + _term(e, p)
    s.best = cost
    s.best_n_on = n_on
    s.best_flat = flat


cdef void _run(const Problem* p, int threads, long seed, double* out_cost, long* out_n_on,
               long* out_flat) noexcept nogil:
    cdef long r0, k
    cdef int t
    cdef Search* s
    for t in range(threads):
        out_cost[t] = INFINITY
        out_n_on[t] = 0
        out_flat[t] = -1
    with parallel(num_threads=threads):
        t = threadid()
        s = <Search*> malloc(sizeof(Search))
        s.ep = <double*> malloc((p.n + 1) * p.ns * sizeof(double))
        s.suffix = <double*> malloc((p.ns + 1) * sizeof(double))
        s.best = INFINITY
        s.best_n_on = 0
        s.best_flat = -1
        if seed >= 0:
            _seed(seed, p, s)
        for k in range(p.ns):
            s.ep[k] = p.forecast[k]
        for r0 in prange(p.counts[0], schedule="dynamic"):
            _visit(r0, p, s)
        out_cost[t] = s.best
        out_n_on[t] = s.best_n_on
        out_flat[t] = s.best_flat
        free(s.suffix)
        free(s.ep)
        free(s)


def row_traces(const unsigned char[:, ::1] rows, long hold, double p0,
               double a_on, double b_on, double a_off, double p_off):
    cdef Py_ssize_t count = rows.shape[0], horizon = rows.shape[1]
    out_arr = np.empty((count, horizon * hold), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t r, col, sub, k
    cdef double p
    with nogil:
        for r in range(count):
            p = p0
            k = 0
            for col in range(horizon):
                for sub in range(hold):
                    if rows[r, col]:
                        p = b_on + a_on * p
                    else:
                        p = p_off + a_off * (p - p_off)
                    out[r, k] = p
                    k = k + 1
    return out_arr


def best_candidate(forecast, traces, first_bits, double mu, double floor, double pref, bint hard,
                   int threads=1, n_cost=None, seed=None):
    """Compiled twin of ``_pykernels.best_candidate``.

    ``seed`` is an optional flat index scored first to prime the pruning.
    """
    cdef int n = len(traces)
    mats = [np.ascontiguousarray(t, dtype=np.float64) / pref for t in traces]
    fc = np.ascontiguousarray(forecast, dtype=np.float64) / pref
    stacked = np.ascontiguousarray(np.concatenate(mats, axis=0))
    bits = np.ascontiguousarray(np.concatenate([np.asarray(b, dtype=np.uint8) for b in first_bits]))
    counts_arr = np.array([m.shape[0] for m in mats], dtype=np.int64)
    offsets_arr = np.concatenate([[0], np.cumsum(counts_arr)[:-1]]).astype(np.int64)
    ns = fc.shape[0]
    rem_lo_arr = np.zeros((n + 1, ns))
    rem_hi_arr = np.zeros((n + 1, ns))
    for k in range(n - 1, -1, -1):
        rem_lo_arr[k] = rem_lo_arr[k + 1] + mats[k].min(axis=0)
        rem_hi_arr[k] = rem_hi_arr[k + 1] + mats[k].max(axis=0)

    cdef long[::1] counts = counts_arr
    cdef long[::1] offsets = offsets_arr
    cdef double[::1] fcv = fc
    cdef double[:, ::1] tv = stacked
    cdef unsigned char[::1] bv = bits
    cdef double[:, ::1] rlo = rem_lo_arr
    cdef double[:, ::1] rhi = rem_hi_arr
    if threads < 1:
        threads = 1
    cost_arr = np.empty(threads)
    n_on_arr = np.empty(threads, dtype=np.int64)
    flat_arr = np.empty(threads, dtype=np.int64)
    cdef double[::1] oc = cost_arr
    cdef long[::1] on = n_on_arr
    cdef long[::1] of = flat_arr
    cdef long seed_flat = -1 if seed is None else seed

    cdef Problem p
    p.forecast = &fcv[0]
    p.traces = &tv[0, 0]
    p.offsets = &offsets[0]
    p.counts = &counts[0]
    p.first_bits = &bv[0]
    p.rem_lo = &rlo[0, 0]
    p.rem_hi = &rhi[0, 0]
    p.n = n
    p.ns = ns
    p.n_cost = ns if n_cost is None else n_cost
    p.mu = mu
    p.floor_ = floor / pref
    p.log_floor = log(floor / pref)
    p.e_star = sqrt(0.5 * mu)
    p.hard = hard
    p.fallback = False

    with nogil:
        _run(&p, threads, seed_flat, &oc[0], &on[0], &of[0])
    winner = _reduce(cost_arr, n_on_arr, flat_arr, False)
    if winner is not None:
        return winner[0], winner[1], True

    p.fallback = True
    with nogil:
        _run(&p, threads, -1, &oc[0], &on[0], &of[0])
    winner = _reduce(cost_arr, n_on_arr, flat_arr, True)
    return winner[0], float("inf"), False


def _reduce(costs, n_on, flat, fallback):
    keys = [
        (float(c), int(k) if fallback else 0, int(f))
        for c, k, f in zip(costs, n_on, flat)
        if f >= 0 and c < float("inf")
    ]
    if not keys:
        return None
    best = min(keys)
    return best[2], best[0]
