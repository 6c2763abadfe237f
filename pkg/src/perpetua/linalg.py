"""Products of random matrices in log scale.

A product is carried as ``2**exp2 * exp(log_frac) * core`` with the core
renormalized to unit spectral norm after every factor. Splitting off the
power of two keeps dyadic products exact: a product of matrices whose norms
are powers of two has ``log_frac == 0`` and a log-scale of exactly
``exp2 * log(2)``.

All values are immutable; functions never modify their inputs.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .errors import DimensionError, InvalidInput

LN2 = math.log(2.0)
RENORM_EPS = 1e-8


def as_matrix(A, name="matrix"):
    """Validate and return ``A`` as a C-contiguous float64 square matrix."""
    a = np.array(A, dtype=float, copy=True, order="C")
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise InvalidInput(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput(f"{name} has non-finite entries")
    a.setflags(write=False)
    return a


def as_vector(z, name="vector"):
    v = np.array(z, dtype=float, copy=True).reshape(-1)
    if v.size < 1:
        raise InvalidInput(f"{name} must have at least one entry")
    if not np.all(np.isfinite(v)):
        raise InvalidInput(f"{name} has non-finite entries")
    v.setflags(write=False)
    return v


def _check_dim(d, other, what):
    if other != d:
        raise DimensionError(f"{what}: expected dimension {d}, got {other}")


def spectral_norm(A) -> float:
    """Largest singular value of ``A`` (power iteration on ``A^T A``)."""
    a = as_matrix(A)
    s, _ = kernels.spectral_norm(a)
    return s


@dataclass(frozen=True)
class ScaledProduct:
    dim: int
    exp2: int
    log_frac: float
    core: np.ndarray = field(repr=False)
    # top right singular vector of the core, reused as a warm start
    _vec: np.ndarray = field(repr=False, compare=False, default=None)

    @property
    def is_zero(self) -> bool:
        return self.log_frac == -math.inf

    @property
    def log_scale(self) -> float:
        if self.is_zero:
            return -math.inf
        return self.exp2 * LN2 + self.log_frac

    def materialize(self) -> np.ndarray:
        """Dense product; overflows to inf when the magnitude leaves double range."""
        if self.is_zero:
            return np.zeros((self.dim, self.dim))
        with np.errstate(over="ignore"):
            return np.ldexp(self.core * math.exp(self.log_frac), self.exp2)

    def __eq__(self, other):
        if not isinstance(other, ScaledProduct):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.exp2 == other.exp2
            and self.log_frac == other.log_frac
            and np.array_equal(self.core, other.core)
        )

    __hash__ = None


@dataclass(frozen=True)
class ScaledVec:
    dim: int
    exp2: int
    log_frac: float
    core: np.ndarray = field(repr=False)

    @property
    def is_zero(self) -> bool:
        return self.log_frac == -math.inf

    @property
    def log_magnitude(self) -> float:
        if self.is_zero:
            return -math.inf
        return self.exp2 * LN2 + self.log_frac

    def materialize(self) -> np.ndarray:
        if self.is_zero:
            return np.zeros(self.dim)
        with np.errstate(over="ignore"):
            return np.ldexp(self.core * math.exp(self.log_frac), self.exp2)


def product_identity(d: int) -> ScaledProduct:
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise InvalidInput(f"dimension must be a positive integer, got {d!r}")
    d = int(d)
    core = np.eye(d)
    core.setflags(write=False)
    return ScaledProduct(d, 0, 0.0, core, np.zeros(d))


def product_extend(P: ScaledProduct, M) -> ScaledProduct:
    """Represent ``P @ M``, renormalizing the core to unit spectral norm."""
    m = as_matrix(M)
    _check_dim(P.dim, m.shape[0], "product_extend")
    vec = P._vec if P._vec is not None else np.zeros(P.dim)
    core, exp2, frac, zero, vec = kernels.extend(P.core, P.exp2, P.log_frac, P.is_zero, vec, m)
    core = np.array(core, copy=True)
    core.setflags(write=False)
    return ScaledProduct(P.dim, int(exp2), float(frac), core, vec)


def product_of(matrices, d=None) -> ScaledProduct:
    """Fold ``product_extend`` over a sequence, starting from the identity."""
    mats = list(matrices)
    if d is None:
        if not mats:
            raise InvalidInput("dimension needed for an empty product")
        d = as_matrix(mats[0]).shape[0]
    P = product_identity(d)
    for M in mats:
        P = product_extend(P, M)
    return P


def apply(P: ScaledProduct, z) -> ScaledVec:
    v = as_vector(z)
    _check_dim(P.dim, v.size, "apply")
    exp2, frac, unit, _ = kernels.apply(P.core, P.exp2, P.log_frac, P.is_zero, v)
    unit = np.array(unit, copy=True)
    unit.setflags(write=False)
    return ScaledVec(P.dim, int(exp2), float(frac), unit)


def _history(history, d=None):
    mats = [as_matrix(M) for M in history]
    if mats:
        d0 = mats[0].shape[0]
        for M in mats:
            _check_dim(d0, M.shape[0], "history")
        if d is not None:
            _check_dim(d, d0, "history")
        return np.stack(mats)
    return None


def suffix_min_term(history, z) -> float:
    """log of min over k of ``|M_k ... M_{t-1} z|``; +inf for an empty history.

    Backward recursion ``w <- M_k w`` from ``w = z``, one matrix-vector
    product per candidate suffix.
    """
    v = as_vector(z)
    Ms = _history(history, v.size)
    if Ms is None:
        return math.inf
    return float(kernels.suffix_min_term(Ms, v))


def suffix_min_norm(history) -> float:
    """log of min over k of ``||M_k ... M_{t-1}||``; +inf for an empty history.

    Maintains every suffix product explicitly, folding each new matrix into
    all of them; O(t * d^3) per appended matrix.
    """
    Ms = _history(history)
    if Ms is None:
        return math.inf
    return float(kernels.suffix_min_norm_trace(Ms)[-1])


def suffix_min_norm_trace(history) -> np.ndarray:
    """``suffix_min_norm`` of every prefix of ``history`` (entry 0 is the empty prefix)."""
    Ms = _history(history)
    if Ms is None:
        return np.array([math.inf])
    return kernels.suffix_min_norm_trace(Ms)
