"""Pure numpy implementation of the hot kernels.

Mirrors ``_ckernels.pyx`` operation for operation. The compiled module is
preferred at import time; this one is the fallback and the reference the
benchmark compares against. Results agree with the compiled kernels to
rounding, and bit-for-bit on dyadic inputs.
"""

import math

import numpy as np

BACKEND = "python"

LN2 = math.log(2.0)
MAX_ITER = 10_000
TOL = 1e-12
RTOL = 1e-10
MIX = 0.0625
POLISH_MAX = 64
STALL_ITER = 500
SQUARINGS = 48

_U32 = 0xFFFFFFFF


def start_vector(k, d):
    """Deterministic pseudo-random start vector number ``k`` (32-bit LCG, exact dyadics)."""
    s = (k * 2654435761 + 12345) & _U32
    out = np.empty(d)
    for i in range(d):
        s = (1664525 * s + 1013904223) & _U32
        out[i] = s / 4294967296.0 - 0.5
    return out


def _split(s):
    # s = 2**e * m with m in [1, 2); exact for powers of two
    m, e = math.frexp(s)
    return m * 2.0, e - 1


def _accelerate(A):
    """Top eigenvector of A^T A by repeated squaring, for tiny spectral gaps."""
    d = A.shape[0]
    B = np.zeros((d, d))
    for i in range(d):
        for j in range(d):
            B[i, j] = float(np.dot(A[:, i], A[:, j]))
    for _ in range(SQUARINGS):
        C = np.zeros((d, d))
        for i in range(d):
            for j in range(d):
                C[i, j] = float(np.dot(B[i], B[:, j]))
        m = float(np.max(np.abs(C)))
        if m == 0.0:
            break
        _, e = math.frexp(m)
        B = np.ldexp(C, -e)
    # every column is close to a multiple of the top eigenvector
    norms = np.sqrt(np.einsum("ij,ij->j", B, B))
    k = int(np.argmax(norms))
    return B[:, k] / norms[k]


def _snorm_batch(A, V):
    """Power iteration on A^T A for a stack of matrices.

    ``V`` holds warm-start vectors (zero rows mean cold start) and is
    returned updated with the top right singular vectors.
    """
    k, d, _ = A.shape
    out = np.zeros(k)
    V = np.array(V, dtype=float, copy=True)
    live = np.flatnonzero(np.any(A != 0.0, axis=(1, 2)))
    if live.size == 0:
        return out, V
    A = A[live]
    # exact power-of-two rescaling keeps |A^T A v|^2 clear of under/overflow
    _, ex = np.frexp(np.max(np.abs(A), axis=(1, 2)))
    ex = np.maximum(ex, -1000)  # 2^-ex must stay finite for subnormal input
    A = A * np.ldexp(1.0, -ex)[:, None, None]
    W0 = V[live]
    nv = np.sqrt(np.einsum("ki,ki->k", W0, W0))
    cold = ~(nv > 0.0) | ~np.isfinite(nv)
    s0 = start_vector(0, d)
    n0 = math.sqrt(float(s0 @ s0))
    warm = ~cold
    if warm.any():
        # a warm start can be exactly orthogonal to the new top direction
        W0[warm] = W0[warm] / nv[warm, None] + MIX * (s0 / n0)
        nv[warm] = np.sqrt(np.einsum("ki,ki->k", W0[warm], W0[warm]))
    if cold.any():
        W0[cold] = s0
        nv[cold] = n0
    W0 = W0 / nv[:, None]

    n = live.size
    lam = np.zeros(n)
    lam_old = np.full(n, -1.0)
    conv = np.zeros(n, dtype=bool)
    polish = np.zeros(n, dtype=np.int64)
    restarts = np.zeros(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    for it in range(MAX_ITER):
        ai = np.flatnonzero(active)
        if ai.size == 0:
            break
        if it == STALL_ITER:
            for idx in ai[~conv[ai]]:
                W0[idx] = _accelerate(A[idx])
                lam_old[idx] = -1.0
        Aa = A[ai]
        Y = np.einsum("kij,kj->ki", Aa, W0[ai])
        L = np.einsum("ki,ki->k", Y, Y)
        W = np.einsum("kji,kj->ki", Aa, Y)
        NW = np.sqrt(np.einsum("ki,ki->k", W, W))
        lam[ai] = L
        dead = NW == 0.0
        if dead.any():
            for idx in ai[dead]:
                restarts[idx] += 1
                sv = start_vector(int(restarts[idx]), d)
                W0[idx] = sv / math.sqrt(float(sv @ sv))
                lam_old[idx] = -1.0
                conv[idx] = False
                polish[idx] = 0
        ok = ~dead
        oi = ai[ok]
        Lo = L[ok]
        R = W[ok] - Lo[:, None] * W0[oi]
        res = np.sqrt(np.einsum("ki,ki->k", R, R))
        W0[oi] = W[ok] / NW[ok, None]
        lo = lam_old[oi]
        c = conv[oi]
        p = polish[oi] + c
        stop = c & ((Lo == lo) | (p >= POLISH_MAX))
        newc = ~c & (np.abs(Lo - lo) <= TOL * Lo) & (res <= RTOL * Lo)
        stop |= newc & (Lo == lo)
        polish[oi] = p
        conv[oi] = c | newc
        lam_old[oi] = Lo
        active[oi[stop]] = False
    out[live] = np.ldexp(np.sqrt(lam), ex)
    V[live] = W0
    return out, V


def spectral_norm(A, v=None):
    """Largest singular value of ``A`` and the matching right singular vector."""
    A = np.ascontiguousarray(A, dtype=float)
    d = A.shape[0]
    v = np.zeros(d) if v is None else np.asarray(v, dtype=float)
    s, V = _snorm_batch(A[None], v[None])
    return float(s[0]), V[0]


def extend(core, exp2, frac, zero, vec, M):
    """Right-multiply a renormalized product by ``M``.

    Returns ``(core, exp2, frac, zero, vec)``; the represented matrix is
    ``2**exp2 * exp(frac) * core``.
    """
    if zero:
        return core, exp2, frac, True, vec
    C = core @ M
    s, v2 = spectral_norm(C, vec @ M)
    if s == 0.0:
        return np.zeros_like(C), exp2, -math.inf, True, vec
    m, e = _split(s)
    return C / s, exp2 + e, frac + math.log(m), False, v2


def apply(core, exp2, frac, zero, z):
    """Apply a renormalized product to ``z``.

    Returns ``(exp2, frac, unit, linear)``: ``|Pz| = 2**exp2 * exp(frac)``,
    ``unit = Pz / |Pz|`` and ``linear = Pz`` in plain floating point.
    """
    z = np.asarray(z, dtype=float)
    if zero:
        return 0, -math.inf, np.zeros_like(z), np.zeros_like(z)
    y = core @ z
    n = math.sqrt(float(y @ y))
    if n == 0.0:
        return 0, -math.inf, np.zeros_like(z), np.zeros_like(z)
    m, e = _split(n)
    return exp2 + e, frac + math.log(m), y / n, np.ldexp(y * math.exp(frac), exp2)


def suffix_min_term(Ms, z):
    """log of min_k |M_k ... M_{n} z| over a history of n matrices (+inf if empty)."""
    best = math.inf
    w = np.array(z, dtype=float, copy=True)
    E = 0
    for k in range(Ms.shape[0] - 1, -1, -1):
        w = np.einsum("ij,j->i", Ms[k], w)
        n = math.sqrt(float(w @ w))
        if n == 0.0:
            return -math.inf
        m, e = _split(n)
        E += e
        w = np.ldexp(w, -e)
        val = E * LN2 + math.log(m)
        if val < best:
            best = val
    return best


def _suffix_terms_all(Ms, Zs):
    # y_log[t] for every t at once, iterating over suffix length instead of t
    T, d = Zs.shape
    out = np.full(T, math.inf)
    if T < 2:
        return out
    W = np.array(Zs[1:], dtype=float, copy=True)
    E = np.zeros(T - 1, dtype=np.int64)
    best = np.full(T - 1, math.inf)
    with np.errstate(divide="ignore"):
        for lag in range(1, T):
            r = slice(lag - 1, T - 1)
            Wr = np.einsum("kij,kj->ki", Ms[: T - lag], W[r])
            n = np.sqrt(np.einsum("ki,ki->k", Wr, Wr))
            m, e = np.frexp(n)
            m = m * 2.0
            e = e - 1
            E[r] += e
            W[r] = np.ldexp(Wr, -e[:, None])
            val = E[r] * LN2 + np.log(m)
            best[r] = np.minimum(best[r], val)
    out[1:] = best
    return out


def suffix_min_norm_trace(Ms):
    """Running log U after each matrix: out[j] = log min_k ||M_k ... M_j|| (out[0] = +inf)."""
    n, d, _ = Ms.shape
    out = np.full(n + 1, math.inf)
    cores = np.zeros((n, d, d))
    exp2 = np.zeros(n, dtype=np.int64)
    frac = np.zeros(n)
    zero = np.zeros(n, dtype=bool)
    vecs = np.zeros((n, d))
    eye = np.eye(d)
    for j in range(n):
        M = Ms[j]
        live = np.flatnonzero(~zero[:j])
        if live.size:
            C = cores[live] @ M
            s, Vn = _snorm_batch(C, vecs[live] @ M)
            dead = s == 0.0
            if dead.any():
                di = live[dead]
                zero[di] = True
                frac[di] = -math.inf
                cores[di] = 0.0
            ok = ~dead
            li = live[ok]
            m, e = np.frexp(s[ok])
            cores[li] = C[ok] / s[ok][:, None, None]
            exp2[li] += e - 1
            frac[li] += np.log(m * 2.0)
            vecs[li] = Vn[ok]
        c, e2, f, zr, v = extend(eye, 0, 0.0, False, np.zeros(d), M)
        cores[j], exp2[j], frac[j], zero[j], vecs[j] = c, e2, f, zr, v
        out[j + 1] = np.min(exp2[: j + 1] * LN2 + frac[: j + 1])
    return out


def trajectory(Ms, Zs, z0, suffix):
    """One streaming pass over realized draws; see ``simulate.run_trajectory``."""
    Ms = np.ascontiguousarray(Ms, dtype=float)
    Zs = np.ascontiguousarray(Zs, dtype=float)
    T, d = Zs.shape
    x = np.empty((T, d))
    v = np.empty((T, d))
    w_log = np.empty(T)
    prod_exp2 = np.empty(T, dtype=np.int64)
    prod_frac = np.empty(T)
    overflow = np.zeros(T, dtype=bool)
    core, exp2, frac, zero, vec = np.eye(d), 0, 0.0, False, np.zeros(d)
    X = np.array(z0, dtype=float, copy=True)
    V = np.zeros(d)
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(T):
            M = Ms[i]
            e_w, f_w, _, wvec = apply(core, exp2, frac, zero, Zs[i])
            w_log[i] = e_w * LN2 + f_w
            V = V + wvec
            X = M @ X + Zs[i]
            x[i] = X
            v[i] = V
            overflow[i] = not (np.all(np.isfinite(X)) and np.all(np.isfinite(V)))
            core, exp2, frac, zero, vec = extend(core, exp2, frac, zero, vec, M)
            prod_exp2[i] = exp2
            prod_frac[i] = frac
    if suffix:
        y_log = _suffix_terms_all(Ms, Zs)
        u_log = suffix_min_norm_trace(Ms)[:T]
    else:
        y_log = np.full(T, math.nan)
        u_log = np.full(T, math.nan)
    return {
        "x": x,
        "v": v,
        "w_log": w_log,
        "prod_exp2": prod_exp2,
        "prod_frac": prod_frac,
        "y_log": y_log,
        "u_log": u_log,
        "overflow": overflow,
    }
