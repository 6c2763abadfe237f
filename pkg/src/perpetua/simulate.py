"""Trajectories of X_t = M_t X_{t-1} + Z_t and the quantities the condition checks need.

One streaming pass per replication produces, for t = 1..T,

* ``x``: X_t, started from X_0 drawn from the initial law,
* ``v``: V_t = sum_{i<=t} (M_1 ... M_{i-1}) Z_i, accumulated in linear scale,
* ``w_log``: log |W_t| with W_t = M_1 ... M_{t-1} Z_t,
* ``prod_log``: log ||M_1 ... M_t||,
* ``y_log``: log min_k |M_k ... M_{t-1} Z_t|  (+inf at t = 1),
* ``u_log``: log min_k ||M_k ... M_{t-1}||    (+inf at t = 1).

The last two cost O(t) products per step and are only computed when
``suffix_stats`` is on.
"""

import csv
import math
import os
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .errors import ConfigError, DimensionError, InvalidInput
from .laws import PairLaw, VectorLaw, vector_zero
from .linalg import LN2
from .rng import RngStream

T_MAX_SUFFIX = 5000
DEFAULT_X_GRID = (1e-3, 1e-2, 1e-1, 1.0, 10.0)


@dataclass(frozen=True)
class RunRecord:
    t: int
    x: np.ndarray
    v_partial: np.ndarray
    w_term_log: float
    prod_norm_log: float
    y_log: float
    u_log: float
    overflow: bool = False


@dataclass(frozen=True)
class RunConfig:
    law: PairLaw
    T: int
    R: int = 1
    seed: int = 0
    z0_law: VectorLaw = None
    suffix_stats: bool = None
    t_max: int = T_MAX_SUFFIX

    def __post_init__(self):
        if not isinstance(self.T, (int, np.integer)) or self.T < 1:
            raise InvalidInput(f"horizon T must be a positive integer, got {self.T!r}")
        if not isinstance(self.R, (int, np.integer)) or self.R < 1:
            raise InvalidInput(f"replications R must be a positive integer, got {self.R!r}")
        if self.z0_law is None:
            object.__setattr__(self, "z0_law", vector_zero(self.law.dim))
        elif self.z0_law.dim != self.law.dim:
            raise DimensionError("initial law and pair law have different dimensions")
        if self.suffix_stats is None:
            object.__setattr__(self, "suffix_stats", self.T <= self.t_max)
        elif self.suffix_stats and self.T > self.t_max:
            raise ConfigError(f"suffix statistics are limited to T <= {self.t_max} (O(T^2) cost)")

    @property
    def dim(self):
        return self.law.dim

    def to_json(self):
        return {
            "law": self.law.to_json(),
            "z0": self.z0_law.to_json(),
            "T": int(self.T),
            "R": int(self.R),
            "seed": int(self.seed),
            "suffix_stats": bool(self.suffix_stats),
        }


def _log_from_split(exp2, frac):
    with np.errstate(invalid="ignore"):
        out = exp2 * LN2 + frac
    return np.where(frac == -np.inf, -np.inf, out)


class Trajectory(Sequence):
    """The records of one replication, stored column-wise.

    Indexing yields ``RunRecord`` objects; ``trajectory[0]`` is t = 1. The
    realized draws are kept in ``Ms``, ``Zs`` and ``z0`` so any record can be
    recomputed independently.
    """

    def __init__(self, stream_id, z0, Ms, Zs, cols):
        self.stream_id = stream_id
        self.z0 = z0
        self.Ms = Ms
        self.Zs = Zs
        self.x = cols["x"]
        self.v = cols["v"]
        self.w_log = cols["w_log"]
        self.prod_exp2 = cols["prod_exp2"]
        self.prod_frac = cols["prod_frac"]
        self.prod_log = _log_from_split(self.prod_exp2, self.prod_frac)
        self.y_log = cols["y_log"]
        self.u_log = cols["u_log"]
        self.overflow = cols["overflow"]

    def __len__(self):
        return self.w_log.shape[0]

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        n = len(self)
        if i < 0:
            i += n
        if not 0 <= i < n:
            raise IndexError(i)
        return RunRecord(
            t=i + 1,
            x=self.x[i],
            v_partial=self.v[i],
            w_term_log=float(self.w_log[i]),
            prod_norm_log=float(self.prod_log[i]),
            y_log=float(self.y_log[i]),
            u_log=float(self.u_log[i]),
            overflow=bool(self.overflow[i]),
        )

    @property
    def T(self):
        return len(self)

    @property
    def dim(self):
        return self.x.shape[1]


def run_trajectory(cfg: RunConfig, stream_id: int = 0) -> Trajectory:
    """Simulate replication ``stream_id``: draws Z_0, then the T pairs, from stream ``(seed, stream_id)``."""
    rng = RngStream(cfg.seed, stream_id)
    z0 = cfg.z0_law.sample_path(rng, 1)[0]
    Ms, Zs = cfg.law.sample_path(rng, cfg.T)
    Ms = np.ascontiguousarray(Ms, dtype=float)
    Zs = np.ascontiguousarray(Zs, dtype=float)
    cols = kernels.trajectory(Ms, Zs, z0, bool(cfg.suffix_stats))
    return Trajectory(stream_id, z0, Ms, Zs, cols)


def resolve_threads(threads=None):
    if threads is None:
        threads = int(os.environ.get("PERPETUA_THREADS", "1"))
    if threads < 1:
        raise ConfigError("thread count must be at least 1")
    return threads


@dataclass
class EnsembleSummary:
    """Per-t statistics across replications.

    ``w_log_quantiles`` rows are the 5%, 50% and 95% quantiles of log|W_t|;
    ``w_mean_log`` is log of the mean of |W_t|; ``p_exceed[g, t-1]`` is the
    fraction of replications with Y_t > x_grid[g].
    """

    R: int
    T: int
    x_grid: tuple
    w_log_quantiles: np.ndarray
    w_mean_log: np.ndarray
    prod_log_mean: np.ndarray
    p_exceed: np.ndarray = None


@dataclass
class Ensemble:
    """Replications 0..R-1 stacked as (R, T[, d]) arrays."""

    config: RunConfig
    x: np.ndarray
    v: np.ndarray
    w_log: np.ndarray
    prod_exp2: np.ndarray
    prod_frac: np.ndarray
    y_log: np.ndarray
    u_log: np.ndarray
    overflow: np.ndarray
    trajectories: list = field(default=None, repr=False)

    @property
    def R(self):
        return self.w_log.shape[0]

    @property
    def T(self):
        return self.w_log.shape[1]

    @property
    def prod_log(self):
        return _log_from_split(self.prod_exp2, self.prod_frac)

    @property
    def has_suffix_stats(self):
        return bool(self.config.suffix_stats)

    def p_exceed(self, x_grid=DEFAULT_X_GRID):
        if not self.has_suffix_stats:
            raise ConfigError("ensemble was run without suffix statistics")
        lx = np.log(np.asarray(x_grid, dtype=float))
        return (self.y_log[None, :, :] > lx[:, None, None]).mean(axis=1)

    def summary(self, x_grid=DEFAULT_X_GRID) -> EnsembleSummary:
        w = self.w_log
        q = np.quantile(w, [0.05, 0.5, 0.95], axis=0) if self.R > 1 else np.repeat(w, 3, axis=0)
        with np.errstate(invalid="ignore"):
            mean_log = np.logaddexp.reduce(w, axis=0) - math.log(self.R)
        pl = self.prod_log
        with np.errstate(invalid="ignore"):
            prod_mean = pl.mean(axis=0)
        return EnsembleSummary(
            R=self.R,
            T=self.T,
            x_grid=tuple(float(x) for x in x_grid),
            w_log_quantiles=q,
            w_mean_log=mean_log,
            prod_log_mean=prod_mean,
            p_exceed=self.p_exceed(x_grid) if self.has_suffix_stats else None,
        )


def run_ensemble(cfg: RunConfig, threads=None, keep_trajectories=False) -> Ensemble:
    """Run replications 0..R-1 (stream r for replication r), merged in stream order."""
    threads = resolve_threads(threads)
    ids = range(cfg.R)
    if threads == 1 or cfg.R == 1:
        trajs = [run_trajectory(cfg, r) for r in ids]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trajs = list(pool.map(lambda r: run_trajectory(cfg, r), ids))
    return Ensemble(
        config=cfg,
        x=np.stack([tr.x for tr in trajs]),
        v=np.stack([tr.v for tr in trajs]),
        w_log=np.stack([tr.w_log for tr in trajs]),
        prod_exp2=np.stack([tr.prod_exp2 for tr in trajs]),
        prod_frac=np.stack([tr.prod_frac for tr in trajs]),
        y_log=np.stack([tr.y_log for tr in trajs]),
        u_log=np.stack([tr.u_log for tr in trajs]),
        overflow=np.stack([tr.overflow for tr in trajs]),
        trajectories=trajs if keep_trajectories else None,
    )


def format_float(x) -> str:
    """Shortest round-trip text for a float, with ``inf``/``-inf``/``nan`` spelled out."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def write_trace(traj: Trajectory, fh):
    """CSV dump: t, x_1..x_d, v_1..v_d, wTermLog, prodNormLog, yLog, uLog."""
    d = traj.dim
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(
        ["t"]
        + [f"x_{i + 1}" for i in range(d)]
        + [f"v_{i + 1}" for i in range(d)]
        + ["wTermLog", "prodNormLog", "yLog", "uLog"]
    )
    for i in range(traj.T):
        row = [str(i + 1)]
        row += [format_float(a) for a in traj.x[i]]
        row += [format_float(a) for a in traj.v[i]]
        row += [format_float(a) for a in (traj.w_log[i], traj.prod_log[i], traj.y_log[i], traj.u_log[i])]
        w.writerow(row)
