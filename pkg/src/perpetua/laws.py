"""Joint laws of the coefficient/innovation pairs (M_t, Z_t) and of Z_0.

Every law draws whole paths at once: ``sample_path(rng, n)`` returns arrays
of shape ``(n, d, d)`` and ``(n, d)``. The order in which each kind consumes
its generator is fixed (documented per class) so that a path depends only on
the stream's ``(seed, stream_id)``.

Laws serialize to and from JSON documents of the form
``{"kind": <tag>, ...parameters}``; see ``law_from_json``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, FrameError, InvalidInput
from .linalg import as_matrix, as_vector
from .rng import RngStream

FRAME_TOL = 1e-10
PROB_TOL = 1e-12


def _probs(p, n, what):
    p = np.array(p, dtype=float).reshape(-1)
    if p.size != n:
        raise InvalidInput(f"{what}: {n} support points but {p.size} probabilities")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise InvalidInput(f"{what}: probabilities must be finite and nonnegative")
    if abs(p.sum() - 1.0) > PROB_TOL:
        raise InvalidInput(f"{what}: probabilities sum to {p.sum()!r}, not 1")
    return p


def _choice(gen, p, n):
    # one uniform per draw, inverted through the cumulative weights
    if p.size == 1:
        return np.zeros(n, dtype=np.intp)
    cdf = np.cumsum(p)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, gen.random(n), side="right").clip(max=p.size - 1)


# -- laws of a single vector --------------------------------------------------


class VectorLaw:
    kind = None
    dim: int

    def sample_path(self, rng, n):
        gen = rng.generator if isinstance(rng, RngStream) else rng
        return self._draw(gen, n)

    @property
    def is_deterministic(self):
        return False


@dataclass(frozen=True)
class ConstantVector(VectorLaw):
    value: np.ndarray
    kind = "constant"

    @property
    def dim(self):
        return self.value.size

    @property
    def is_deterministic(self):
        return True

    def _draw(self, gen, n):
        return np.tile(self.value, (n, 1))

    def to_json(self):
        return {"kind": self.kind, "value": self.value.tolist()}


@dataclass(frozen=True)
class GaussianVector(VectorLaw):
    """Isotropic normal: ``mean + std * N(0, I)``; draws ``n*d`` standard normals."""

    mean: np.ndarray
    std: float
    kind = "gaussian"

    @property
    def dim(self):
        return self.mean.size

    @property
    def is_deterministic(self):
        return self.std == 0.0

    def _draw(self, gen, n):
        if self.std == 0.0:
            return np.tile(self.mean, (n, 1))
        return self.mean + self.std * gen.standard_normal((n, self.dim))

    def to_json(self):
        return {"kind": self.kind, "mean": self.mean.tolist(), "std": self.std}


@dataclass(frozen=True)
class FiniteVector(VectorLaw):
    points: np.ndarray
    probs: np.ndarray
    kind = "finite-support"

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def is_deterministic(self):
        return int(np.count_nonzero(self.probs)) == 1

    def _draw(self, gen, n):
        return self.points[_choice(gen, self.probs, n)]

    def to_json(self):
        return {"kind": self.kind, "points": self.points.tolist(), "probs": self.probs.tolist()}


def vector_constant(value) -> ConstantVector:
    return ConstantVector(as_vector(value, "value"))


def vector_zero(d) -> ConstantVector:
    return ConstantVector(as_vector(np.zeros(d)))


def vector_gaussian(d=None, std=1.0, mean=None) -> GaussianVector:
    if mean is None:
        if d is None:
            raise InvalidInput("gaussian vector law needs d or mean")
        mean = np.zeros(d)
    mean = as_vector(mean, "mean")
    if d is not None and mean.size != d:
        raise DimensionError(f"mean has dimension {mean.size}, expected {d}")
    if not (std >= 0) or not math.isfinite(std):
        raise InvalidInput(f"std must be finite and nonnegative, got {std!r}")
    return GaussianVector(mean, float(std))


def vector_finite(points, probs) -> FiniteVector:
    pts = np.array(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[0] < 1 or not np.all(np.isfinite(pts)):
        raise InvalidInput("points must be a finite (k, d) array")
    return FiniteVector(pts, _probs(probs, pts.shape[0], "finite-support vector"))


# -- laws of the pair (M, Z) -------------------------------------------------


class PairLaw:
    kind = None
    dim: int

    def sample_path(self, rng, n):
        """Draw ``n`` i.i.d. pairs; returns ``(Ms, Zs)`` of shapes (n, d, d), (n, d)."""
        gen = rng.generator if isinstance(rng, RngStream) else rng
        return self._draw(gen, int(n))

    @property
    def is_deterministic(self):
        return False


@dataclass(frozen=True)
class ConstantLaw(PairLaw):
    M: np.ndarray
    z: np.ndarray
    kind = "constant"

    @property
    def dim(self):
        return self.z.size

    @property
    def is_deterministic(self):
        return True

    def _draw(self, gen, n):
        return np.tile(self.M, (n, 1, 1)), np.tile(self.z, (n, 1))

    def to_json(self):
        return {"kind": self.kind, "M": self.M.tolist(), "z": self.z.tolist()}


@dataclass(frozen=True)
class FiniteScalar:
    values: np.ndarray
    probs: np.ndarray

    def to_json(self):
        return {"values": self.values.tolist(), "probs": self.probs.tolist()}


def scalar_finite(values, probs=None) -> FiniteScalar:
    vals = np.array(values, dtype=float).reshape(-1)
    if vals.size < 1 or not np.all(np.isfinite(vals)):
        raise InvalidInput("scalar law needs finite support values")
    if probs is None:
        probs = np.full(vals.size, 1.0 / vals.size)
    return FiniteScalar(vals, _probs(probs, vals.size, "scalar law"))


@dataclass(frozen=True)
class FrameDiagonalLaw(PairLaw):
    """``M = sum_i a_i v_i v_i^T`` over an orthonormal frame, Z independent.

    The scalars are either independent per direction (``scalars`` is a
    tuple of ``FiniteScalar``) or coupled (``tuples``/``tuple_probs``: a
    finite mixture over whole d-tuples). Draw order: scalars for all n steps
    (direction by direction when independent), then the n innovations.
    """

    frame: np.ndarray  # columns are v_1..v_d
    z_law: VectorLaw
    scalars: tuple = ()
    tuples: np.ndarray = None
    tuple_probs: np.ndarray = None
    kind = "frame-diagonal"

    @property
    def dim(self):
        return self.frame.shape[0]

    @property
    def coupled(self):
        return self.tuples is not None

    @property
    def is_deterministic(self):
        if not self.z_law.is_deterministic:
            return False
        if self.coupled:
            return int(np.count_nonzero(self.tuple_probs)) == 1
        return all(int(np.count_nonzero(s.probs)) == 1 for s in self.scalars)

    def draw_scalars(self, gen, n):
        if self.coupled:
            return self.tuples[_choice(gen, self.tuple_probs, n)]
        a = np.empty((n, self.dim))
        for i, s in enumerate(self.scalars):
            a[:, i] = s.values[_choice(gen, s.probs, n)]
        return a

    def matrices(self, a):
        F = self.frame
        return np.einsum("ik,nk,jk->nij", F, a, F)

    def _draw(self, gen, n):
        a = self.draw_scalars(gen, n)
        return self.matrices(a), self.z_law._draw(gen, n)

    def scalars_of(self, Ms):
        """Recover the per-direction scalars ``v_i^T M v_i`` from realized matrices."""
        F = self.frame
        return np.einsum("ik,nij,jk->nk", F, Ms, F)

    def to_json(self):
        doc = {"kind": self.kind, "frame": self.frame.T.tolist(), "z": self.z_law.to_json()}
        if self.coupled:
            doc["scalars"] = {"tuples": self.tuples.tolist(), "probs": self.tuple_probs.tolist()}
        else:
            doc["scalars"] = {"independent": [s.to_json() for s in self.scalars]}
        return doc


@dataclass(frozen=True)
class GaussianEntriesLaw(PairLaw):
    """M entries i.i.d. N(0, entry_std^2), Z i.i.d. N(0, z_std^2); M block drawn first."""

    d: int
    entry_std: float
    z_std: float
    kind = "gaussian-entries"

    @property
    def dim(self):
        return self.d

    @property
    def is_deterministic(self):
        return self.entry_std == 0.0 and self.z_std == 0.0

    def _draw(self, gen, n):
        d = self.d
        Ms = np.zeros((n, d, d))
        Zs = np.zeros((n, d))
        if self.entry_std > 0:
            Ms = self.entry_std * gen.standard_normal((n, d, d))
        if self.z_std > 0:
            Zs = self.z_std * gen.standard_normal((n, d))
        return Ms, Zs

    def to_json(self):
        return {"kind": self.kind, "d": self.d, "entry_std": self.entry_std, "z_std": self.z_std}


@dataclass(frozen=True)
class MixtureLaw(PairLaw):
    """Each step picks a component (one uniform per step), then draws the pair jointly from it.

    Components are served in order, each consuming the generator for all of
    its assigned steps at once.
    """

    components: tuple
    weights: np.ndarray
    kind = "finite-mixture"

    @property
    def dim(self):
        return self.components[0].dim

    @property
    def is_deterministic(self):
        live = [c for c, w in zip(self.components, self.weights) if w > 0]
        return len(live) == 1 and live[0].is_deterministic

    def _draw(self, gen, n):
        idx = _choice(gen, self.weights, n)
        d = self.dim
        Ms = np.empty((n, d, d))
        Zs = np.empty((n, d))
        for c, comp in enumerate(self.components):
            sel = np.flatnonzero(idx == c)
            if sel.size:
                Ms[sel], Zs[sel] = comp._draw(gen, sel.size)
        return Ms, Zs

    def to_json(self):
        return {
            "kind": self.kind,
            "components": [c.to_json() for c in self.components],
            "weights": self.weights.tolist(),
        }


@dataclass(frozen=True)
class CompositeLaw(PairLaw):
    """M from the M-marginal of ``m_law``, Z independently from ``z_law`` (drawn after M)."""

    m_law: PairLaw
    z_law: VectorLaw
    kind = "composite"

    @property
    def dim(self):
        return self.m_law.dim

    @property
    def is_deterministic(self):
        return self.m_law.is_deterministic and self.z_law.is_deterministic

    def _draw(self, gen, n):
        Ms, _ = self.m_law._draw(gen, n)
        return Ms, self.z_law._draw(gen, n)

    def to_json(self):
        return {"kind": self.kind, "m": self.m_law.to_json(), "z": self.z_law.to_json()}


# -- constructors -------------------------------------------------------------


def law_constant(M, z) -> ConstantLaw:
    m = as_matrix(M, "M")
    v = as_vector(z, "z")
    if m.shape[0] != v.size:
        raise DimensionError(f"M is {m.shape[0]}x{m.shape[0]} but z has dimension {v.size}")
    return ConstantLaw(m, v)


def check_frame(frame):
    """Return the frame as a matrix whose columns are the given vectors; FrameError if not orthonormal."""
    F = np.array(frame, dtype=float)
    if F.ndim != 2 or F.shape[0] != F.shape[1] or not np.all(np.isfinite(F)):
        raise FrameError("frame must be d vectors of dimension d")
    F = F.T.copy()
    err = np.max(np.abs(F.T @ F - np.eye(F.shape[0])))
    if err > FRAME_TOL:
        raise FrameError(f"frame is not orthonormal (max deviation {err:.3g})")
    return F


def law_frame_diagonal(frame, scalar_laws=None, z_law=None, *, tuples=None, tuple_probs=None):
    """Frame-diagonal law; pass ``scalar_laws`` (independent) or ``tuples`` (coupled)."""
    F = check_frame(frame)
    d = F.shape[0]
    if z_law is None:
        z_law = vector_zero(d)
    if z_law.dim != d:
        raise DimensionError(f"z law has dimension {z_law.dim}, frame has {d}")
    if tuples is not None:
        tup = np.array(tuples, dtype=float)
        if tup.ndim != 2 or tup.shape[1] != d or not np.all(np.isfinite(tup)):
            raise InvalidInput(f"coupled scalars must be finite tuples of length {d}")
        probs = _probs(tuple_probs if tuple_probs is not None else np.full(len(tup), 1 / len(tup)),
                       tup.shape[0], "scalar tuples")
        return FrameDiagonalLaw(F, z_law, (), tup, probs)
    if scalar_laws is None or len(scalar_laws) != d:
        raise InvalidInput(f"need {d} scalar laws, one per frame direction")
    scal = tuple(s if isinstance(s, FiniteScalar) else scalar_finite(*s) for s in scalar_laws)
    return FrameDiagonalLaw(F, z_law, scal)


def law_gaussian_entries(d, entry_std, z_std) -> GaussianEntriesLaw:
    if int(d) < 1:
        raise InvalidInput("d must be positive")
    for name, val in (("entry_std", entry_std), ("z_std", z_std)):
        if not (val >= 0) or not math.isfinite(val):
            raise InvalidInput(f"{name} must be finite and nonnegative, got {val!r}")
    return GaussianEntriesLaw(int(d), float(entry_std), float(z_std))


def law_mixture(components, weights) -> MixtureLaw:
    comps = tuple(components)
    if not comps:
        raise InvalidInput("mixture needs at least one component")
    d = comps[0].dim
    for c in comps:
        if c.dim != d:
            raise DimensionError("mixture components disagree on dimension")
    return MixtureLaw(comps, _probs(weights, len(comps), "mixture weights"))


def law_composite(m_law, z_law) -> CompositeLaw:
    if m_law.dim != z_law.dim:
        raise DimensionError("composite law: M and Z dimensions differ")
    return CompositeLaw(m_law, z_law)


def sample(law: PairLaw, rng: RngStream):
    """One draw ``(M, Z)``; advances ``rng``."""
    Ms, Zs = law.sample_path(rng, 1)
    return Ms[0], Zs[0]


# -- JSON ---------------------------------------------------------------------


def vector_law_from_json(doc, d=None) -> VectorLaw:
    if isinstance(doc, (list, tuple)):
        return vector_constant(doc)
    if not isinstance(doc, dict) or "kind" not in doc:
        raise InvalidInput("vector law must be a list or an object with a 'kind'")
    kind = doc["kind"]
    if kind == "constant":
        return vector_constant(doc["value"])
    if kind == "zero":
        return vector_zero(doc.get("d", d))
    if kind == "gaussian":
        return vector_gaussian(doc.get("d", d), doc.get("std", 1.0), doc.get("mean"))
    if kind == "finite-support":
        return vector_finite(doc["points"], doc["probs"])
    raise InvalidInput(f"unknown vector law kind {kind!r}")


def law_from_json(doc) -> PairLaw:
    """Build a pair law from its JSON document.

    Kinds: ``constant`` {M, z}; ``frame-diagonal`` {frame (optional, list
    of vectors, default standard basis), scalars: {independent: [{values,
    probs}, ...]} or {tuples, probs}, z: vector law}; ``gaussian-entries``
    {d, entry_std, z_std}; ``finite-mixture`` {components, weights};
    ``composite`` {m: pair law, z: vector law}. Vector laws are
    ``constant`` {value}, ``zero`` {d}, ``gaussian`` {d or mean, std},
    ``finite-support`` {points, probs}, or a bare list (constant).
    """
    if not isinstance(doc, dict) or "kind" not in doc:
        raise InvalidInput("law must be an object with a 'kind'")
    kind = doc["kind"]
    try:
        if kind == "constant":
            return law_constant(doc["M"], doc["z"])
        if kind == "frame-diagonal":
            sc = doc["scalars"]
            if "tuples" in sc:
                d = len(sc["tuples"][0])
            else:
                d = len(sc["independent"])
            frame = doc.get("frame", np.eye(d).tolist())
            z = vector_law_from_json(doc.get("z", {"kind": "zero"}), d)
            if "tuples" in sc:
                return law_frame_diagonal(frame, None, z, tuples=sc["tuples"], tuple_probs=sc.get("probs"))
            laws = [scalar_finite(s["values"], s.get("probs")) for s in sc["independent"]]
            return law_frame_diagonal(frame, laws, z)
        if kind == "gaussian-entries":
            return law_gaussian_entries(doc["d"], doc["entry_std"], doc["z_std"])
        if kind == "finite-mixture":
            return law_mixture([law_from_json(c) for c in doc["components"]], doc["weights"])
        if kind == "composite":
            m = law_from_json(doc["m"])
            return law_composite(m, vector_law_from_json(doc["z"], m.dim))
    except (KeyError, TypeError, IndexError) as exc:
        raise InvalidInput(f"malformed {kind!r} law: {exc}") from exc
    raise InvalidInput(f"unknown law kind {kind!r}")
