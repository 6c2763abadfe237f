"""The degenerate-coefficient case: M_t = M for all t.

Powers of M are expanded over its minimal polynomial,

    M^t = sum_k sum_{j < m_k} t (t-1) ... (t-j+1) lambda_k^(t-j) Z_{k,j},

where m_k are the multiplicities of lambda_k as roots of the minimal
polynomial (not the characteristic one; a Jordan block of size 2 has m = 2
while the identity has m = 1). The components Z_{k,j} are recovered from
the first ``deg`` powers by solving the confluent Vandermonde system.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import BoundaryWarning, ConditioningError, DegeneracyError, InvalidInput
from .linalg import as_matrix

D_MAX = 32
CLUSTER_TOL = 1e-8
SPLIT_TOL = 1e-5
RANK_TOL = 1e-9
GRAY_ZONE = 1e3
RESIDUAL_TOL = 1e-8
COND_MAX = 1e12
BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class MinimalPolynomial:
    """Monic minimal polynomial ``prod_k (x - roots[k])**multiplicities[k]``."""

    roots: np.ndarray
    multiplicities: tuple
    residual: float

    @property
    def degree(self) -> int:
        return int(sum(self.multiplicities))

    @property
    def coefficients(self) -> np.ndarray:
        """Complex coefficients, highest degree first (leading 1)."""
        c = np.array([1.0 + 0j])
        for lam, m in zip(self.roots, self.multiplicities):
            for _ in range(m):
                c = np.convolve(c, [1.0, -lam])
        return c


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues (nonincreasing modulus), minimal multiplicities and components.

    ``components[k][j]`` is Z_{k,j}. The residual fields record how well the
    representation reproduces I and M.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    multiplicities: tuple
    components: tuple
    identity_residual: float
    matrix_residual: float
    gram_condition: float

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def degree(self) -> int:
        return int(sum(self.multiplicities))

    @property
    def spectral_radius(self) -> float:
        return float(abs(self.eigenvalues[0]))


def _check(M):
    m = as_matrix(M, "M")
    if m.shape[0] > D_MAX:
        raise InvalidInput(f"constant-matrix analysis supports d <= {D_MAX}")
    return m


def _order(vals):
    # nonincreasing modulus; ties broken by real then imaginary part
    keys = [(-round(abs(v), 12), -v.real, -v.imag) for v in vals]
    return sorted(range(len(vals)), key=lambda i: keys[i])


def _cluster(ev, scale):
    """Single-linkage clusters of eigenvalues closer than CLUSTER_TOL * scale."""
    tol = CLUSTER_TOL * scale
    n = len(ev)
    label = list(range(n))

    def find(i):
        while label[i] != i:
            label[i] = label[label[i]]
            i = label[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(ev[i] - ev[j]) <= tol:
                label[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [np.array(g) for g in groups.values()]


def _rank(A, tol):
    s = np.linalg.svd(A, compute_uv=False)
    gray = np.any((s > tol) & (s <= GRAY_ZONE * tol))
    return int(np.count_nonzero(s > tol)), bool(gray)


def _eval_poly(M, roots, mults):
    d = M.shape[0]
    P = np.eye(d, dtype=complex)
    for lam, m in zip(roots, mults):
        A = M - lam * np.eye(d)
        for _ in range(m):
            P = P @ A
    return P


def minimal_polynomial(M) -> MinimalPolynomial:
    """Minimal annihilating polynomial of ``M``.

    Eigenvalues closer than 1e-8 (relative to max(1, ||M||)) are treated as
    one root. Each root's multiplicity is the index at which the rank of
    ``(M - lambda I)**j`` stops dropping. The result is verified by the
    residual ``||p(M)|| < 1e-8 * max(1, ||M||)**deg``.
    """
    M = _check(M)
    d = M.shape[0]
    normM = float(np.linalg.norm(M, 2))
    scale = max(1.0, normM)
    ev = np.linalg.eigvals(M).astype(complex)
    groups = _cluster(ev, scale)
    centers = [complex(np.mean(ev[g])) for g in groups]
    for a in range(len(centers)):
        for b in range(a + 1, len(centers)):
            if abs(centers[a] - centers[b]) <= SPLIT_TOL * scale:
                # defective eigenvalues scatter; neither merging nor splitting is safe
                deg_split = len(groups)
                raise DegeneracyError(
                    f"eigenvalues {centers[a]:.6g} and {centers[b]:.6g} are distinct but closer than "
                    f"{SPLIT_TOL:g}; multiplicity is ambiguous",
                    candidates=(deg_split - 1, deg_split),
                )
    roots, mults, alts = [], [], []
    for g in groups:
        lam = complex(np.mean(ev[g]))
        alg = len(g)
        A = M - lam * np.eye(d)
        P = np.eye(d, dtype=complex)
        prev = d
        m = alg
        ambiguous = False
        for j in range(1, alg + 1):
            P = P @ A
            r, gray = _rank(P, RANK_TOL * scale**j)
            ambiguous |= gray
            if r == prev or r <= d - alg:
                m = j - 1 if r == prev else j
                break
            prev = r
        m = max(m, 1)
        roots.append(lam)
        mults.append(m)
        alts.append(ambiguous)
    order = _order(roots)
    roots = np.array([roots[i] for i in order])
    mults = tuple(mults[i] for i in order)
    deg = sum(mults)
    res = float(np.linalg.norm(_eval_poly(M, roots, mults), 2))
    tol = RESIDUAL_TOL * scale**deg
    if any(alts) or not res < tol:
        cands = (deg, deg + 1) if deg < d else (deg - 1, deg)
        raise DegeneracyError(
            f"multiplicity is numerically ambiguous (residual {res:.3g}, tolerance {tol:.3g})",
            candidates=cands,
        )
    return MinimalPolynomial(roots, mults, res)


def _falling(t, j):
    out = 1
    for i in range(j):
        out *= t - i
    return out


def _coeff(t, j, lam):
    # d^j/dx^j x^t at x = lam
    if t < j:
        return 0j
    return _falling(t, j) * (lam ** (t - j) if t > j else 1.0 + 0j)


def spectral_components(M) -> SpectralDecomposition:
    """Solve ``M^t = sum_{k,j} [d^j/dx^j x^t](lambda_k) Z_{k,j}`` for t < deg."""
    M = _check(M)
    d = M.shape[0]
    mp = minimal_polynomial(M)
    roots, mults, deg = mp.roots, mp.multiplicities, mp.degree
    # solving for M / s keeps the system well scaled; Z_{k,j} = s**j Z'_{k,j}
    s = float(abs(roots[0])) or 1.0
    Ms = M / s
    lam_s = roots / s
    C = np.zeros((deg, deg), dtype=complex)
    for t in range(deg):
        col = 0
        for lam, m in zip(lam_s, mults):
            for j in range(m):
                C[t, col] = _coeff(t, j, lam)
                col += 1
    cond = float(np.linalg.cond(C))
    if not cond <= COND_MAX:
        raise ConditioningError(f"interpolation system condition number {cond:.3g} exceeds {COND_MAX:g}")
    powers = np.empty((deg, d * d), dtype=complex)
    P = np.eye(d)
    for t in range(deg):
        powers[t] = P.reshape(-1)
        P = P @ Ms
    Zflat = np.linalg.solve(C, powers)
    comps, col = [], 0
    for m in mults:
        block = []
        for j in range(m):
            Z = (Zflat[col] * s**j).reshape(d, d)
            Z.setflags(write=False)
            block.append(Z)
            col += 1
        comps.append(tuple(block))
    G = Zflat @ Zflat.conj().T
    gram_cond = float(np.linalg.cond(G))
    eye_res = float(np.linalg.norm(sum(b[0] for b in comps) - np.eye(d), 2))
    dec = SpectralDecomposition(M, roots, mults, tuple(comps), eye_res, 0.0, gram_cond)
    m_res = float(np.linalg.norm(_reconstruct(dec, 1) - M, 2))
    return SpectralDecomposition(M, roots, mults, tuple(comps), eye_res, m_res, gram_cond)


def _reconstruct(dec, t):
    out = np.zeros((dec.dim, dec.dim), dtype=complex)
    for lam, block in zip(dec.eigenvalues, dec.components):
        for j, Z in enumerate(block):
            c = _coeff(t, j, lam)
            if c != 0:
                out += c * Z
    return out


def power_via_spectral(dec: SpectralDecomposition, t: int) -> np.ndarray:
    """``M**t`` from the spectral representation (real part of the complex sum)."""
    if not isinstance(t, (int, np.integer)) or t < 0:
        raise InvalidInput(f"t must be a nonnegative integer, got {t!r}")
    with np.errstate(over="ignore", invalid="ignore"):
        P = _reconstruct(dec, int(t))
    re, im = P.real.copy(), P.imag
    nre = float(np.linalg.norm(re, 2)) if np.all(np.isfinite(re)) else math.inf
    nim = float(np.linalg.norm(im, 2)) if np.all(np.isfinite(im)) else math.inf
    if not nim < 1e-8 * (1.0 + nre):
        warnings.warn(f"imaginary residual {nim:.3g} at t={t}", RuntimeWarning, stacklevel=2)
    return re


@dataclass(frozen=True)
class C0Decision:
    holds: bool
    radius: float
    boundary: bool = False

    def __iter__(self):
        return iter((self.holds, self.radius))

    def __bool__(self):
        return self.holds


def spectral_radius(M) -> float:
    M = _check(M)
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def c0_exact(M) -> C0Decision:
    """Decide ``||M^t|| -> 0``, i.e. spectral radius < 1.

    Radii within 1e-12 of 1 are reported as not holding with a
    BoundaryWarning, since |lambda_1| >= 1 forces ||M^t|| >= 1.
    """
    rho = spectral_radius(M)
    if abs(rho - 1.0) <= BOUNDARY_TOL:
        warnings.warn(f"spectral radius {rho!r} is within {BOUNDARY_TOL:g} of 1", BoundaryWarning, stacklevel=2)
        return C0Decision(False, rho, True)
    return C0Decision(rho < 1.0, rho, False)
