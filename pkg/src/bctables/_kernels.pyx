# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled replication kernel.

Mirrors ``sis_engine.run_replication`` and ``cp_sampler.draft`` update for
update, including the Philox stream and the operation counter, so both
backends produce the same numbers for the same ``(seed, index)``.
"""

from libc.math cimport log, exp, log1p, isfinite, INFINITY
from libc.stdlib cimport malloc, free
from libc.stdint cimport uint64_t, int64_t

cdef extern from *:
    """
    #include <stdint.h>
    typedef struct {
        uint64_t k0, k1, block;
        uint64_t buf[4];
        int pos;
    } bct_stream;

    static inline void bct_philox4x64_10(uint64_t c0, uint64_t c1, uint64_t c2, uint64_t c3,
                                         uint64_t k0, uint64_t k1, uint64_t *out) {
        int r;
        for (r = 0; r < 10; r++) {
            unsigned __int128 p0, p1;
            uint64_t y0, y1, y2, y3;
            if (r) { k0 += 0x9E3779B97F4A7C15ULL; k1 += 0xBB67AE8584CAA73BULL; }
            p0 = (unsigned __int128)0xD2E7470EE14C6C93ULL * c0;
            p1 = (unsigned __int128)0xCA5A826395121157ULL * c2;
            y0 = (uint64_t)(p1 >> 64) ^ c1 ^ k0;
            y1 = (uint64_t)p1;
            y2 = (uint64_t)(p0 >> 64) ^ c3 ^ k1;
            y3 = (uint64_t)p0;
            c0 = y0; c1 = y1; c2 = y2; c3 = y3;
        }
        out[0] = c0; out[1] = c1; out[2] = c2; out[3] = c3;
    }

    static inline void bct_stream_init(bct_stream *s, uint64_t seed, uint64_t index) {
        s->k0 = seed; s->k1 = index; s->block = 0; s->pos = 4;
    }

    static inline uint64_t bct_stream_next(bct_stream *s) {
        if (s->pos == 4) {
            s->block += 1;
            bct_philox4x64_10(s->block, 0, 0, 0, s->k0, s->k1, s->buf);
            s->pos = 0;
        }
        return s->buf[s->pos++];
    }

    static inline double bct_stream_random(bct_stream *s) {
        return (double)(bct_stream_next(s) >> 11) * (1.0 / 9007199254740992.0);
    }
    """
    ctypedef struct bct_stream:
        pass
    void bct_stream_init(bct_stream *s, uint64_t seed, uint64_t index) nogil
    uint64_t bct_stream_next(bct_stream *s) nogil
    double bct_stream_random(bct_stream *s) nogil


cdef inline double _lae(double a, double b) noexcept nogil:
    if a == -INFINITY:
        return b
    if b == -INFINITY:
        return a
    if a > b:
        return a + log1p(exp(b - a))
    return b + log1p(exp(a - b))


cdef double _log_esp(const double *lw, const int *units, int count, int order,
                     int skip, double *buf, int64_t *ops) noexcept nogil:
    cdef int i, p, u, seen = 0, top
    cdef double w
    buf[0] = 0.0
    for i in range(1, order + 1):
        buf[i] = -INFINITY
    for p in range(count):
        u = units[p]
        if u == skip:
            continue
        seen += 1
        w = lw[u]
        top = order if order < seen else seen
        i = top
        while i >= 1:
            buf[i] = _lae(buf[i], buf[i - 1] + w)
            ops[0] += 1
            i -= 1
    return buf[order]


cdef double _esp_scaled(const double *xs, const int *units, int count, int order,
                        int skip, double *buf, int64_t *ops) noexcept nogil:
    cdef int i, p, u, seen = 0, top
    cdef double x
    buf[0] = 1.0
    for i in range(1, order + 1):
        buf[i] = 0.0
    for p in range(count):
        u = units[p]
        if u == skip:
            continue
        seen += 1
        x = xs[u]
        top = order if order < seen else seen
        i = top
        while i >= 1:
            buf[i] = buf[i] + buf[i - 1] * x
            ops[0] += 1
            i -= 1
    return buf[order]


cdef struct Work:
    int64_t *s
    int *active
    int *remaining
    int *chosen
    double *lw
    double *xs
    double *lp
    double *buf


cdef double _draft_probs(Work *w, int nrem, int t, int log_domain, int64_t *ops) noexcept nogil:
    """Fill ``w.lp[:nrem]`` with selection probabilities; return log e(t, R)."""
    cdef int pos, j
    cdef double shift, z, tz, rest, log_z, log_t
    cdef bint ok
    if not log_domain:
        shift = w.lw[w.remaining[0]]
        for pos in range(1, nrem):
            if w.lw[w.remaining[pos]] > shift:
                shift = w.lw[w.remaining[pos]]
        for pos in range(nrem):
            j = w.remaining[pos]
            w.xs[j] = exp(w.lw[j] - shift)
        z = _esp_scaled(w.xs, w.remaining, nrem, t, -1, w.buf, ops)
        if z > 0.0 and isfinite(z):
            tz = t * z
            ok = True
            for pos in range(nrem):
                j = w.remaining[pos]
                if t > 1:
                    rest = _esp_scaled(w.xs, w.remaining, nrem, t - 1, j, w.buf, ops)
                else:
                    rest = 1.0
                w.lp[pos] = w.xs[j] * rest / tz
                if not isfinite(w.lp[pos]):
                    ok = False
            ops[0] += nrem
            if ok:
                return log(z) + t * shift
    log_z = _log_esp(w.lw, w.remaining, nrem, t, -1, w.buf, ops)
    log_t = log(<double>t)
    for pos in range(nrem):
        j = w.remaining[pos]
        if t > 1:
            rest = _log_esp(w.lw, w.remaining, nrem, t - 1, j, w.buf, ops)
        else:
            rest = 0.0
        w.lp[pos] = exp(w.lw[j] + rest - log_t - log_z)
    ops[0] += nrem
    return log_z


cdef int _replicate(const int64_t *rows, int m, const int64_t *cols, int n,
                    const int64_t *t1, const int64_t *t2, uint64_t seed, uint64_t index,
                    Work *w, int log_domain, double *log_out, int64_t *ops_out) noexcept nogil:
    """Returns the number of columns placed (n on success)."""
    cdef bct_stream st
    cdef int k, i, c, na, nrem, draw, t, pos, q, last
    cdef double gamma, log_l = 0.0, log_norm = 0.0, log_z, u, acc, sub
    cdef int64_t ops = 0
    bct_stream_init(&st, seed, index)
    for i in range(m):
        w.s[i] = rows[i]
    for k in range(n):
        c = <int>cols[k]
        na = 0
        for i in range(m):
            if w.s[i] > 0:
                w.active[na] = i
                na += 1
        if na < c:
            log_out[0] = -INFINITY
            ops_out[0] = ops
            return k
        if t1[k + 1] == 0:
            gamma = 0.0
        else:
            gamma = <double>t2[k + 1] / <double>(2 * t1[k + 1] * t1[k + 1])
        for i in range(m):
            if w.s[i] > 0:
                w.lw[i] = log(<double>w.s[i]) + 2.0 * gamma * <double>w.s[i]
            else:
                w.lw[i] = -INFINITY
        ops += na
        nrem = na
        for i in range(na):
            w.remaining[i] = w.active[i]
        for draw in range(1, c + 1):
            t = c - draw + 1
            log_z = _draft_probs(w, nrem, t, log_domain, &ops)
            if draw == 1:
                log_norm = log_z
            u = bct_stream_random(&st)
            acc = 0.0
            last = -1
            q = -1
            for pos in range(nrem):
                if w.lp[pos] <= 0.0:
                    continue
                acc += w.lp[pos]
                last = pos
                if u < acc:
                    q = pos
                    break
            if q < 0:
                q = last
            w.chosen[draw - 1] = w.remaining[q]
            for pos in range(q, nrem - 1):
                w.remaining[pos] = w.remaining[pos + 1]
            nrem -= 1
        sub = 0.0
        for i in range(c):
            sub += w.lw[w.chosen[i]]
            w.s[w.chosen[i]] -= 1
        log_l += log_norm - sub
    log_out[0] = log_l
    ops_out[0] = ops
    return n


def run_chunk(const int64_t[::1] rows, const int64_t[::1] cols, uint64_t seed,
              int64_t start, int64_t count, double[::1] out_log,
              int64_t[::1] out_steps, int64_t[::1] out_ops, bint log_domain=False):
    """Run replications ``start .. start+count-1`` into the output views.

    ``cols`` must already be sorted nonincreasing with zeros removed.  With
    ``log_domain`` every drafting draw uses log-add-exp sums only.
    """
    cdef int m = rows.shape[0]
    cdef int n = cols.shape[0]
    cdef int k, cmax = 0
    cdef int64_t r
    cdef Work w
    cdef int64_t *t1
    cdef int64_t *t2
    if out_log.shape[0] < count or out_steps.shape[0] < count or out_ops.shape[0] < count:
        raise ValueError("output views shorter than count")
    for k in range(n):
        if cols[k] > cmax:
            cmax = <int>cols[k]
    t1 = <int64_t *>malloc((n + 1) * sizeof(int64_t))
    t2 = <int64_t *>malloc((n + 1) * sizeof(int64_t))
    w.s = <int64_t *>malloc((m + 1) * sizeof(int64_t))
    w.active = <int *>malloc((m + 1) * sizeof(int))
    w.remaining = <int *>malloc((m + 1) * sizeof(int))
    w.chosen = <int *>malloc((cmax + 1) * sizeof(int))
    w.lw = <double *>malloc((m + 1) * sizeof(double))
    w.lp = <double *>malloc((m + 1) * sizeof(double))
    w.xs = <double *>malloc((m + 1) * sizeof(double))
    w.buf = <double *>malloc((cmax + 2) * sizeof(double))
    try:
        if (t1 == NULL or t2 == NULL or w.s == NULL or w.active == NULL or w.remaining == NULL
                or w.chosen == NULL or w.lw == NULL or w.lp == NULL or w.xs == NULL
                or w.buf == NULL):
            raise MemoryError()
        t1[n] = 0
        t2[n] = 0
        for k in range(n - 1, -1, -1):
            t1[k] = t1[k + 1] + cols[k]
            t2[k] = t2[k + 1] + cols[k] * (cols[k] - 1)
        with nogil:
            for r in range(count):
                out_steps[r] = _replicate(&rows[0] if m > 0 else NULL, m,
                                          &cols[0] if n > 0 else NULL, n, t1, t2, seed,
                                          <uint64_t>(start + r), &w, log_domain,
                                          &out_log[r], &out_ops[r])
    finally:
        free(t1); free(t2); free(w.s); free(w.active); free(w.remaining)
        free(w.chosen); free(w.lw); free(w.lp); free(w.xs); free(w.buf)


def philox_uniforms(uint64_t seed, uint64_t index, int count):
    """First ``count`` doubles of the stream keyed by ``(seed, index)``."""
    cdef bct_stream st
    cdef int i
    bct_stream_init(&st, seed, index)
    return [bct_stream_random(&st) for i in range(count)]
