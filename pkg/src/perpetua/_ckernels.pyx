# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; same contract as ``_pykernels``.

Loops release the GIL so replications can run on worker threads.
"""

import math

import numpy as np

from libc.math cimport sqrt, log, exp, frexp, ldexp, fabs, isfinite, INFINITY, NAN
from libc.stdint cimport uint32_t, int64_t
from libc.stdlib cimport malloc, free

BACKEND = "cython"

cdef double LN2 = math.log(2.0)
cdef int MAX_ITER = 10000
cdef double TOL = 1e-12
cdef double RTOL = 1e-10
cdef double MIX = 0.0625
cdef int POLISH_MAX = 64
cdef int STALL_ITER = 500
cdef int SQUARINGS = 48


cdef void _start(int k, int d, double* v) noexcept nogil:
    cdef uint32_t s = (<uint32_t>k) * 2654435761u + 12345u
    cdef int i
    for i in range(d):
        s = 1664525u * s + 1013904223u
        v[i] = s / 4294967296.0 - 0.5


cdef inline double _norm(const double* v, int d) noexcept nogil:
    cdef double acc = 0.0
    cdef int i
    for i in range(d):
        acc += v[i] * v[i]
    return sqrt(acc)


cdef inline void _split(double s, double* m, int* e) noexcept nogil:
    m[0] = frexp(s, e) * 2.0
    e[0] -= 1


cdef void _accelerate(const double* A, double sc, int d, double* v) noexcept nogil:
    # top eigenvector of A^T A by repeated squaring, for tiny spectral gaps
    cdef double* B = <double*> malloc(d * d * sizeof(double))
    cdef double* C = <double*> malloc(d * d * sizeof(double))
    cdef double* T
    cdef int i, j, k, q, e, best = 0
    cdef double acc, m, nb, nbest = -1.0
    if B == NULL or C == NULL:
        free(B)
        free(C)
        return
    for i in range(d):
        for j in range(d):
            acc = 0.0
            for k in range(d):
                acc += (A[k * d + i] * sc) * (A[k * d + j] * sc)
            B[i * d + j] = acc
    for q in range(SQUARINGS):
        m = 0.0
        for i in range(d):
            for j in range(d):
                acc = 0.0
                for k in range(d):
                    acc += B[i * d + k] * B[k * d + j]
                C[i * d + j] = acc
                if fabs(acc) > m:
                    m = fabs(acc)
        if m == 0.0:
            break
        frexp(m, &e)
        for i in range(d * d):
            C[i] = ldexp(C[i], -e)
        T = B
        B = C
        C = T
    for j in range(d):
        nb = 0.0
        for i in range(d):
            nb += B[i * d + j] * B[i * d + j]
        nb = sqrt(nb)
        if nb > nbest:
            nbest = nb
            best = j
    for i in range(d):
        v[i] = B[i * d + best] / nbest
    free(B)
    free(C)


cdef double _snorm(const double* A, int d, double* v, double* y, double* w) noexcept nogil:
    # power iteration on A^T A; v is the warm start in and singular vector out
    cdef int i, j, it, e
    cdef int restarts = 0, polish = 0, conv = 0
    cdef double lam = 0.0, lam_old = -1.0, nv, nw, acc, res, amax = 0.0, sc
    for i in range(d * d):
        if fabs(A[i]) > amax:
            amax = fabs(A[i])
    if amax == 0.0:
        return 0.0
    # exact power-of-two rescaling keeps |A^T A v|^2 clear of under/overflow
    frexp(amax, &e)
    if e < -1000:
        e = -1000  # 2^-e must stay finite for subnormal input
    sc = ldexp(1.0, -e)
    nv = _norm(v, d)
    if not (nv > 0.0) or not isfinite(nv):
        _start(0, d, v)
        nv = _norm(v, d)
    else:
        # a warm start can be exactly orthogonal to the new top direction
        _start(0, d, w)
        nw = _norm(w, d)
        for i in range(d):
            v[i] = v[i] / nv + MIX * (w[i] / nw)
        nv = _norm(v, d)
    for i in range(d):
        v[i] /= nv
    for it in range(MAX_ITER):
        if it == STALL_ITER and not conv:
            _accelerate(A, sc, d, v)
            lam_old = -1.0
        for i in range(d):
            acc = 0.0
            for j in range(d):
                acc += (A[i * d + j] * sc) * v[j]
            y[i] = acc
        lam = 0.0
        for i in range(d):
            lam += y[i] * y[i]
        for j in range(d):
            acc = 0.0
            for i in range(d):
                acc += (A[i * d + j] * sc) * y[i]
            w[j] = acc
        nw = _norm(w, d)
        if nw == 0.0:
            restarts += 1
            _start(restarts, d, v)
            nv = _norm(v, d)
            for i in range(d):
                v[i] /= nv
            lam_old = -1.0
            conv = 0
            polish = 0
            continue
        res = 0.0
        for i in range(d):
            acc = w[i] - lam * v[i]
            res += acc * acc
            v[i] = w[i] / nw
        if conv:
            polish += 1
            if lam == lam_old or polish >= POLISH_MAX:
                break
        elif fabs(lam - lam_old) <= TOL * lam and sqrt(res) <= RTOL * lam:
            if lam == lam_old:
                break
            conv = 1
        lam_old = lam
    return ldexp(sqrt(lam), e)


cdef inline void _matmul(const double* A, const double* B, double* C, int d) noexcept nogil:
    cdef int i, j, k
    cdef double acc
    for i in range(d):
        for j in range(d):
            acc = 0.0
            for k in range(d):
                acc += A[i * d + k] * B[k * d + j]
            C[i * d + j] = acc


cdef inline void _vecmat(const double* v, const double* M, double* out, int d) noexcept nogil:
    # out = M^T v
    cdef int i, k
    cdef double acc
    for i in range(d):
        acc = 0.0
        for k in range(d):
            acc += v[k] * M[k * d + i]
        out[i] = acc


cdef struct Work:
    double* tmp     # d*d
    double* wv      # d
    double* y       # d
    double* w       # d


cdef int _work_alloc(Work* wk, int d) noexcept nogil:
    wk.tmp = <double*>malloc(d * d * sizeof(double))
    wk.wv = <double*>malloc(d * sizeof(double))
    wk.y = <double*>malloc(d * sizeof(double))
    wk.w = <double*>malloc(d * sizeof(double))
    return wk.tmp != NULL and wk.wv != NULL and wk.y != NULL and wk.w != NULL


cdef void _work_free(Work* wk) noexcept nogil:
    free(wk.tmp)
    free(wk.wv)
    free(wk.y)
    free(wk.w)


cdef void _extend(double* core, int64_t* exp2, double* frac, int* zero, double* vec,
                  const double* M, int d, Work* wk) noexcept nogil:
    cdef int i, e
    cdef double s, m
    if zero[0]:
        return
    _matmul(core, M, wk.tmp, d)
    _vecmat(vec, M, wk.wv, d)
    s = _snorm(wk.tmp, d, wk.wv, wk.y, wk.w)
    if s == 0.0:
        for i in range(d * d):
            core[i] = 0.0
        frac[0] = -INFINITY
        zero[0] = 1
        return
    _split(s, &m, &e)
    for i in range(d * d):
        core[i] = wk.tmp[i] / s
    for i in range(d):
        vec[i] = wk.wv[i]
    exp2[0] += e
    frac[0] += log(m)


cdef double _apply(const double* core, int64_t exp2, double frac, const double* z, int d,
                   double* y, int64_t* e_tot, double* f_tot) noexcept nogil:
    # y = core z; returns |y| and the split log-magnitude of the represented vector
    cdef int j, k, e
    cdef double acc, nn, m
    for j in range(d):
        acc = 0.0
        for k in range(d):
            acc += core[j * d + k] * z[k]
        y[j] = acc
    nn = _norm(y, d)
    if nn == 0.0:
        e_tot[0] = 0
        f_tot[0] = -INFINITY
        return 0.0
    _split(nn, &m, &e)
    e_tot[0] = exp2 + e
    f_tot[0] = frac + log(m)
    return nn


cdef double _suffix_term(const double* Ms, int n, const double* z, int d, double* w, double* y) noexcept nogil:
    cdef double best = INFINITY, nn, m, val, acc
    cdef int64_t E = 0
    cdef int k, i, j, e
    for i in range(d):
        w[i] = z[i]
    for k in range(n - 1, -1, -1):
        for i in range(d):
            acc = 0.0
            for j in range(d):
                acc += Ms[k * d * d + i * d + j] * w[j]
            y[i] = acc
        nn = _norm(y, d)
        if nn == 0.0:
            return -INFINITY
        _split(nn, &m, &e)
        E += e
        for i in range(d):
            w[i] = ldexp(y[i], -e)
        val = E * LN2 + log(m)
        if val < best:
            best = val
    return best


cdef double _suffix_norm_step(int j, const double* M, double* cores, int64_t* exp2, double* frac,
                              int* zero, double* vecs, int d, Work* wk) noexcept nogil:
    # fold M_j into every stored suffix, append the suffix {M_j}, return min log-norm
    cdef int k, i
    cdef double best = INFINITY, val
    for k in range(j):
        _extend(&cores[k * d * d], &exp2[k], &frac[k], &zero[k], &vecs[k * d], M, d, wk)
    for i in range(d * d):
        cores[j * d * d + i] = 0.0
    for i in range(d):
        cores[j * d * d + i * d + i] = 1.0
        vecs[j * d + i] = 0.0
    exp2[j] = 0
    frac[j] = 0.0
    zero[j] = 0
    _extend(&cores[j * d * d], &exp2[j], &frac[j], &zero[j], &vecs[j * d], M, d, wk)
    for k in range(j + 1):
        val = exp2[k] * LN2 + frac[k]
        if val < best:
            best = val
    return best


def start_vector(int k, int d):
    """Deterministic pseudo-random start vector number ``k``."""
    out = np.empty(d)
    cdef double[::1] o = out
    _start(k, d, &o[0])
    return out


def spectral_norm(A, v=None):
    """Largest singular value of ``A`` and the matching right singular vector."""
    cdef double[:, ::1] a = np.require(A, np.float64, "CW")
    cdef int d = a.shape[0]
    vec = np.zeros(d) if v is None else np.array(v, dtype=np.float64, copy=True)
    cdef double[::1] vv = vec
    y = np.empty(d)
    w = np.empty(d)
    cdef double[::1] yy = y
    cdef double[::1] ww = w
    cdef double s
    with nogil:
        s = _snorm(&a[0, 0], d, &vv[0], &yy[0], &ww[0])
    return s, vec


def extend(core, exp2, frac, zero, vec, M):
    """Right-multiply a renormalized product by ``M``; see ``_pykernels.extend``."""
    c = np.array(core, dtype=np.float64, copy=True, order="C")
    vo = np.array(vec, dtype=np.float64, copy=True)
    cdef double[:, ::1] cc = c
    cdef double[::1] vv = vo
    cdef double[:, ::1] mm = np.require(M, np.float64, "CW")
    cdef int d = cc.shape[0]
    cdef int64_t e2 = exp2
    cdef double fr = frac
    cdef int zr = 1 if zero else 0
    cdef Work wk
    if not _work_alloc(&wk, d):
        _work_free(&wk)
        raise MemoryError()
    with nogil:
        _extend(&cc[0, 0], &e2, &fr, &zr, &vv[0], &mm[0, 0], d, &wk)
    _work_free(&wk)
    return c, int(e2), float(fr), bool(zr), vo


def apply(core, exp2, frac, zero, z):
    """Apply a renormalized product to ``z``.

    Returns ``(exp2, frac, unit, linear)``: ``|Pz| = 2**exp2 * exp(frac)``,
    ``unit = Pz / |Pz|`` and ``linear = Pz`` in plain floating point.
    """
    zz_ = np.require(z, np.float64, "CW")
    cdef int d = zz_.shape[0]
    if zero:
        return 0, -math.inf, np.zeros(d), np.zeros(d)
    cdef double[:, ::1] cc = np.require(core, np.float64, "CW")
    cdef double[::1] zz = zz_
    y = np.empty(d)
    cdef double[::1] yy = y
    cdef int64_t e_tot = 0
    cdef double f_tot = 0.0
    cdef double nn
    cdef int64_t e_in = exp2
    cdef double f_in = frac
    with nogil:
        nn = _apply(&cc[0, 0], e_in, f_in, &zz[0], d, &yy[0], &e_tot, &f_tot)
    if nn == 0.0:
        return 0, -math.inf, np.zeros(d), np.zeros(d)
    lin = np.ldexp(y * math.exp(frac), exp2)
    return int(e_tot), float(f_tot), y / nn, lin


def suffix_min_term(Ms, z):
    """log of min_k |M_k ... M_n z| over a history of n matrices (+inf if empty)."""
    cdef double[:, :, ::1] ms = np.require(Ms, np.float64, "CW")
    cdef double[::1] zz = np.require(z, np.float64, "CW")
    cdef int n = ms.shape[0]
    cdef int d = zz.shape[0]
    if n == 0:
        return math.inf
    w = np.empty(d)
    y = np.empty(d)
    cdef double[::1] ww = w
    cdef double[::1] yy = y
    cdef double r
    with nogil:
        r = _suffix_term(&ms[0, 0, 0], n, &zz[0], d, &ww[0], &yy[0])
    return r


def suffix_min_norm_trace(Ms):
    """Running log U after each matrix: out[j] = log min_k ||M_k ... M_j|| (out[0] = +inf)."""
    cdef double[:, :, ::1] ms = np.require(Ms, np.float64, "CW")
    cdef int n = ms.shape[0]
    cdef int d = ms.shape[1]
    out = np.full(n + 1, math.inf)
    if n == 0:
        return out
    cdef double[::1] oo = out
    cores = np.zeros((n, d, d))
    exp2 = np.zeros(n, dtype=np.int64)
    frac = np.zeros(n)
    zero = np.zeros(n, dtype=np.intc)
    vecs = np.zeros((n, d))
    cdef double[:, :, ::1] cc = cores
    cdef int64_t[::1] ee = exp2
    cdef double[::1] ff = frac
    cdef int[::1] zz = zero
    cdef double[:, ::1] vv = vecs
    cdef Work wk
    cdef int j
    if not _work_alloc(&wk, d):
        _work_free(&wk)
        raise MemoryError()
    with nogil:
        for j in range(n):
            oo[j + 1] = _suffix_norm_step(j, &ms[j, 0, 0], &cc[0, 0, 0], &ee[0], &ff[0],
                                          &zz[0], &vv[0, 0], d, &wk)
    _work_free(&wk)
    return out


def trajectory(Ms, Zs, z0, bint suffix):
    """One streaming pass over realized draws; see ``simulate.run_trajectory``."""
    cdef double[:, :, ::1] ms = np.require(Ms, np.float64, "CW")
    cdef double[:, ::1] zs = np.require(Zs, np.float64, "CW")
    cdef int T = zs.shape[0]
    cdef int d = zs.shape[1]
    x = np.empty((T, d))
    v = np.empty((T, d))
    w_log = np.empty(T)
    prod_exp2 = np.empty(T, dtype=np.int64)
    prod_frac = np.empty(T)
    y_log = np.full(T, math.nan)
    u_log = np.full(T, math.nan)
    overflow = np.zeros(T, dtype=np.uint8)
    cdef double[:, ::1] xx = x
    cdef double[:, ::1] vv = v
    cdef double[::1] wl = w_log
    cdef int64_t[::1] pe = prod_exp2
    cdef double[::1] pf = prod_frac
    cdef double[::1] yl = y_log
    cdef double[::1] ul = u_log
    cdef unsigned char[::1] of = overflow

    core = np.eye(d)
    X = np.array(z0, dtype=np.float64, copy=True)
    cdef double[:, ::1] cr = core
    cdef double[::1] X_ = X
    Vs = np.zeros(d)
    cdef double[::1] V_ = Vs
    pv = np.zeros(d)
    cdef double[::1] pvec = pv
    Xn = np.empty(d)
    cdef double[::1] Xn_ = Xn
    sw = np.empty(d)
    sy = np.empty(d)
    cdef double[::1] sw_ = sw
    cdef double[::1] sy_ = sy

    n_s = T if suffix else 1
    s_cores = np.zeros((n_s, d, d))
    s_exp2 = np.zeros(n_s, dtype=np.int64)
    s_frac = np.zeros(n_s)
    s_zero = np.zeros(n_s, dtype=np.intc)
    s_vecs = np.zeros((n_s, d))
    cdef double[:, :, ::1] sc = s_cores
    cdef int64_t[::1] se = s_exp2
    cdef double[::1] sf = s_frac
    cdef int[::1] sz = s_zero
    cdef double[:, ::1] sv = s_vecs

    cdef int64_t exp2 = 0, e_w = 0
    cdef double frac = 0.0, nn, m, acc, u_running = INFINITY, scale, f_w = 0.0
    cdef int zero = 0, i, j, k, e, bad
    cdef Work wk
    if not _work_alloc(&wk, d):
        _work_free(&wk)
        raise MemoryError()
    with nogil:
        for i in range(T):
            # W_t = P_{t-1} Z_t, log scale and linear
            if zero:
                wl[i] = -INFINITY
                for j in range(d):
                    sy_[j] = 0.0
            else:
                nn = _apply(&cr[0, 0], exp2, frac, &zs[i, 0], d, &sy_[0], &e_w, &f_w)
                if nn == 0.0:
                    wl[i] = -INFINITY
                else:
                    wl[i] = e_w * LN2 + f_w
                    scale = exp(frac)
                    for j in range(d):
                        sy_[j] = ldexp(sy_[j] * scale, <int>exp2)
            bad = 0
            for j in range(d):
                V_[j] = V_[j] + sy_[j]
                acc = 0.0
                for k in range(d):
                    acc += ms[i, j, k] * X_[k]
                Xn_[j] = acc + zs[i, j]
            for j in range(d):
                X_[j] = Xn_[j]
                xx[i, j] = X_[j]
                vv[i, j] = V_[j]
                if not isfinite(X_[j]) or not isfinite(V_[j]):
                    bad = 1
            of[i] = bad
            if suffix:
                if i == 0:
                    yl[i] = INFINITY
                    ul[i] = INFINITY
                else:
                    yl[i] = _suffix_term(&ms[0, 0, 0], i, &zs[i, 0], d, &sw_[0], &sy_[0])
                    ul[i] = u_running
                u_running = _suffix_norm_step(i, &ms[i, 0, 0], &sc[0, 0, 0], &se[0], &sf[0],
                                              &sz[0], &sv[0, 0], d, &wk)
            _extend(&cr[0, 0], &exp2, &frac, &zero, &pvec[0], &ms[i, 0, 0], d, &wk)
            pe[i] = exp2
            pf[i] = frac
    _work_free(&wk)
    return {
        "x": x,
        "v": v,
        "w_log": w_log,
        "prod_exp2": prod_exp2,
        "prod_frac": prod_frac,
        "y_log": y_log,
        "u_log": u_log,
        "overflow": overflow.astype(bool),
    }
