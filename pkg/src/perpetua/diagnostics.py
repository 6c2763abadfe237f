"""Finite-sample verdicts on C0, conditions (i)-(vi) and the moment conditions.

Almost-sure statements cannot be settled by a finite simulation, so every
check returns HOLDS, FAILS or INCONCLUSIVE together with the statistics it
used. All thresholds live in ``Thresholds`` and can be overridden.

Condition labels:

* ``C0``: ||M_1 ... M_t|| -> 0
* ``i``: X_t converges in distribution
* ``ii``: sum_t |W_t| < inf, with W_t = M_1 ... M_{t-1} Z_t
* ``iii``: V_t converges
* ``iv``: W_t -> 0
* ``v``: sup_t |W_t| < inf
* ``vi``: sum_t P(Y_t > x) < inf for every x > 0
* ``R36i``: E|log||M_1||| < inf and E log||M_1|| < 0
* ``R36ii``: E log^-||M_1|| = inf and E[log^+||M_1|| / A_M(log^+||M_1||)] < inf
"""

import enum
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import constant
from .errors import BoundaryWarning, ConfigError, InvalidInput
from .laws import PairLaw, VectorLaw, vector_zero
from .linalg import LN2
from .rng import RngStream
from .simulate import DEFAULT_X_GRID, Ensemble, RunConfig, run_ensemble

GRID_CAVEAT = "condition (vi) quantifies over all x > 0; only the finite x-grid was tested"
LOG_FLOOR = -800.0  # below log of the smallest subnormal; stands in for log 0 in regressions


class Verdict(str, enum.Enum):
    HOLDS = "HOLDS"
    FAILS = "FAILS"
    INCONCLUSIVE = "INCONCLUSIVE"

    def __str__(self):
        return self.value


HOLDS, FAILS, INCONCLUSIVE = Verdict.HOLDS, Verdict.FAILS, Verdict.INCONCLUSIVE


@dataclass(frozen=True)
class Thresholds:
    """Decision thresholds shared by all checks."""

    c0_sigma: float = 3.0
    trend_sigma: float = 3.0
    quorum: float = 0.95
    tail_tol: float = 1e-6
    growth_tol: float = 0.05
    decay_log: float = math.log(1e3)
    vi_tail_sum: float = 0.01
    vi_fail_p: float = 0.5
    i_slope: float = 0.25
    alpha: float = 0.05
    n_perm: int = 200
    min_perm_samples: int = 8

    def __post_init__(self):
        if not 0.5 < self.quorum <= 1.0:
            raise ConfigError(f"quorum must lie in (0.5, 1], got {self.quorum!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        for name in ("c0_sigma", "trend_sigma", "tail_tol", "growth_tol", "decay_log", "vi_tail_sum", "i_slope"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ConfigError(f"{name} must be positive and finite, got {v!r}")
        if self.tail_tol >= self.growth_tol:
            raise ConfigError("tail_tol must be smaller than growth_tol")
        if self.n_perm < 1:
            raise ConfigError("n_perm must be positive")

    def to_json(self):
        return asdict(self)


DEFAULT_THRESHOLDS = Thresholds()


@dataclass
class ConditionReport:
    condition: str
    verdict: Verdict
    method: str = "monte-carlo"
    statistics: dict = field(default_factory=dict)
    caveats: list = field(default_factory=list)

    def to_json(self):
        return {
            "condition": self.condition,
            "verdict": str(self.verdict),
            "method": self.method,
            "statistics": {k: _jsonable(v) for k, v in sorted(self.statistics.items())},
            "caveats": list(self.caveats),
        }


def _jsonable(v):
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(a) for a in np.asarray(v).tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    v = float(v)
    if math.isfinite(v):
        return v
    return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")


def _three_way(hold, fail):
    if hold and not fail:
        return HOLDS
    if fail and not hold:
        return FAILS
    return INCONCLUSIVE


def _mean_se(x):
    """Mean and standard error; exact (se = 0) when all values coincide."""
    x = np.asarray(x, dtype=float)
    n = x.size
    x0 = x[0]
    dev = x - x0
    mean = x0 + dev.mean()
    se = float(dev.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return float(mean), se


def _slopes(y, t):
    """Per-row least-squares slope of y against t."""
    tc = t - t.mean()
    yc = y - y.mean(axis=1, keepdims=True)
    return (yc @ tc) / (tc @ tc)


# -- Lyapunov exponent and C0 ------------------------------------------------


@dataclass(frozen=True)
class LyapunovEstimate:
    lambda_hat: float
    stderr: float
    T: int
    R: int
    caveats: tuple = ()

    def to_json(self):
        return {
            "lambda_hat": _jsonable(self.lambda_hat),
            "stderr": _jsonable(self.stderr),
            "T": self.T,
            "R": self.R,
            "caveats": list(self.caveats),
        }


def _heavy_tail(values, share=0.5):
    # top decile of the positive values carrying most of the sum
    pos = np.sort(values[values > 0])
    if pos.size < 10:
        return False
    top = pos[-max(1, pos.size // 10):]
    return bool(top.sum() > share * pos.sum())


def lyapunov_from_ensemble(ens: Ensemble, check_tails=True) -> LyapunovEstimate:
    """Mean over replications of log||M_1 ... M_T|| / T."""
    T, R = ens.T, ens.R
    e2 = ens.prod_exp2[:, -1].astype(float)
    fr = ens.prod_frac[:, -1]
    caveats = []
    if np.any(fr == -np.inf):
        caveats.append("product reached the zero matrix in some replications")
        return LyapunovEstimate(-math.inf, 0.0, T, R, tuple(caveats))
    # dividing each part separately keeps dyadic exponents exact
    per_rep = (e2 / T) * LN2 + fr / T
    lam, se = _mean_se(per_rep)
    if check_tails and ens.trajectories is not None:
        Ms = np.concatenate([tr.Ms for tr in ens.trajectories])
        norms = np.linalg.svd(Ms, compute_uv=False)[:, 0]
        with np.errstate(divide="ignore"):
            logp = np.maximum(np.log(norms), 0.0)
        if _heavy_tail(logp):
            caveats.append("log+ ||M_1|| looks heavy-tailed (top decile dominates); E log+ ||M_1|| may be infinite")
    return LyapunovEstimate(lam, se, T, R, tuple(caveats))


def estimate_lyapunov(law: PairLaw, T: int, R: int, seed: int, threads=None) -> LyapunovEstimate:
    if T < 100 or R < 2:
        raise InvalidInput("Lyapunov estimation needs T >= 100 and R >= 2")
    cfg = RunConfig(law, T, R, seed, suffix_stats=False)
    return lyapunov_from_ensemble(run_ensemble(cfg, threads, keep_trajectories=True))


def _fixed_matrix(law):
    # the coefficient matrix when the M-marginal is degenerate, else None
    if getattr(law, "is_deterministic", False):
        M, _ = law.sample_path(RngStream(0), 1)
        return M[0]
    return None


def c0_report(est: LyapunovEstimate, prod_log_T, thr: Thresholds = DEFAULT_THRESHOLDS) -> ConditionReport:
    lam, se = est.lambda_hat, est.stderr
    k = thr.c0_sigma
    frac_small = float(np.mean(np.asarray(prod_log_T) < -thr.decay_log))
    stats = {"lambda_hat": lam, "stderr": se, "T": est.T, "R": est.R, "frac_small_norm": frac_small}
    caveats = list(est.caveats)
    if lam + k * se < 0:
        verdict = HOLDS
    elif lam - k * se > 0:
        verdict = FAILS
    else:
        caveats.append("Lyapunov interval straddles 0; verdict from the fraction of replications with small product norm")
        if frac_small >= thr.quorum:
            verdict = HOLDS
        elif frac_small <= 1.0 - thr.quorum:
            verdict = FAILS
        else:
            verdict = INCONCLUSIVE
    return ConditionReport("C0", verdict, "monte-carlo", stats, caveats)


def check_c0(law: PairLaw, T: int, R: int, seed: int, thresholds=DEFAULT_THRESHOLDS, threads=None) -> ConditionReport:
    """C0 from the Lyapunov estimate; exact via the spectral radius when M is constant."""
    M = _fixed_matrix(law)
    if M is not None:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", BoundaryWarning)
            dec = constant.c0_exact(M)
        caveats = [str(w.message) for w in caught]
        return ConditionReport(
            "C0",
            HOLDS if dec.holds else FAILS,
            "exact",
            {"spectral_radius": dec.radius, "lambda": math.log(dec.radius) if dec.radius > 0 else -math.inf},
            caveats,
        )
    cfg = RunConfig(law, T, R, seed, suffix_stats=False)
    ens = run_ensemble(cfg, threads, keep_trajectories=True)
    est = lyapunov_from_ensemble(ens)
    return c0_report(est, ens.prod_log[:, -1], thresholds)


# -- conditions on an ensemble -----------------------------------------------


def check_condition_iv_v(ens: Ensemble, thresholds=DEFAULT_THRESHOLDS):
    """Reports for (iv) W_t -> 0 and (v) sup_t |W_t| < inf."""
    thr = thresholds
    T = ens.T
    w = np.maximum(ens.w_log, LOG_FLOOR)
    caveats = [] if T >= 100 else [f"short horizon T={T}; trend tests have little power"]
    h, q = T // 2, T // 4
    t = np.arange(1, T + 1, dtype=float)
    late = w[:, h:].max(axis=1)
    early = w[:, q:h].max(axis=1) if h > q else w[:, :h].max(axis=1)
    first = w[:, :h].max(axis=1) if h > 0 else np.full(ens.R, -np.inf)
    slope, slope_se = _mean_se(_slopes(w[:, h:], t[h:])) if T - h >= 2 else (0.0, 0.0)
    rising = slope - thr.trend_sigma * slope_se > 0

    decayed = float(np.mean(late < -thr.decay_log))
    stalled = float(np.mean((late >= early) & (late >= -thr.decay_log)))
    iv = ConditionReport(
        "iv",
        _three_way(decayed >= thr.quorum, rising or stalled >= thr.quorum),
        statistics={
            "frac_decayed": decayed,
            "frac_no_decay": stalled,
            "tail_slope": slope,
            "tail_slope_se": slope_se,
            "median_tail_max_log": float(np.median(late)),
        },
        caveats=list(caveats),
    )
    no_record = float(np.mean(late <= first))
    v = ConditionReport(
        "v",
        _three_way(no_record >= thr.quorum, rising),
        statistics={"frac_no_new_record": no_record, "tail_slope": slope, "tail_slope_se": slope_se},
        caveats=list(caveats),
    )
    return iv, v


def check_condition_ii_iii(ens: Ensemble, thresholds=DEFAULT_THRESHOLDS):
    """Reports for (ii) summability of |W_t| and (iii) convergence of V_t."""
    thr = thresholds
    T = ens.T
    q = max(1, (3 * T) // 4)
    with np.errstate(invalid="ignore"):
        logS = np.logaddexp.accumulate(ens.w_log, axis=1)
        ratio = -np.expm1(logS[:, q - 1] - logS[:, -1])
    ratio = np.where(np.isneginf(logS[:, -1]), 0.0, ratio)
    small = float(np.mean(ratio < thr.tail_tol))
    large = float(np.mean(~(ratio < thr.growth_tol)))
    ii = ConditionReport(
        "ii",
        _three_way(small >= thr.quorum, large >= thr.quorum),
        statistics={
            "frac_tail_negligible": small,
            "frac_tail_growing": large,
            "median_last_quarter_share": float(np.median(ratio)),
            "median_log_sum": float(np.median(logS[:, -1])),
        },
    )
    V = ens.v
    VT = V[:, -1, :]
    with np.errstate(invalid="ignore", over="ignore"):
        dev = np.linalg.norm(V[:, q - 1:, :] - VT[:, None, :], axis=2).max(axis=1)
        rel = dev / (1.0 + np.linalg.norm(VT, axis=1))
    bad = ens.overflow.any(axis=1) | ~np.isfinite(rel)
    conv = float(np.mean(~bad & (rel < thr.tail_tol)))
    div = float(np.mean(bad | ~(rel < thr.growth_tol)))
    caveats = ["partial sums overflowed in some replications"] if bad.any() else []
    iii = ConditionReport(
        "iii",
        _three_way(conv >= thr.quorum, div >= thr.quorum),
        statistics={
            "frac_settled": conv,
            "frac_moving": div,
            "median_relative_tail_oscillation": float(np.median(np.where(bad, np.inf, rel))),
        },
        caveats=caveats,
    )
    return ii, iii


def check_condition_vi(ens: Ensemble, x_grid=DEFAULT_X_GRID, thresholds=DEFAULT_THRESHOLDS) -> ConditionReport:
    """Tail sums of the empirical P(Y_t > x) over t in [T/2, T] on a grid of x."""
    thr = thresholds
    if not ens.has_suffix_stats:
        raise ConfigError("condition (vi) needs an ensemble run with suffix statistics")
    grid = np.asarray(x_grid, dtype=float)
    if grid.size == 0 or np.any(grid <= 0) or not np.all(np.isfinite(grid)):
        raise ConfigError("x-grid must be finite positive values")
    p = ens.p_exceed(grid)
    h = ens.T // 2
    tail = p[:, h:]
    sums = tail.sum(axis=1)
    hold = bool(np.all(sums < thr.vi_tail_sum))
    fail = bool(np.any(np.all(tail >= thr.vi_fail_p, axis=1)))
    return ConditionReport(
        "vi",
        _three_way(hold, fail),
        statistics={"x_grid": grid, "tail_sums": sums, "tail_min_p": tail.min(axis=1)},
        caveats=[GRID_CAVEAT],
    )


# -- energy distance ---------------------------------------------------------


def _pdist(P):
    diff = P[:, None, :] - P[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def energy_statistic(A, B) -> float:
    """2 E|A - B| - E|A - A'| - E|B - B'| (V-statistic form)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    n = A.shape[0]
    D = _pdist(np.vstack([A, B]))
    return float(2 * D[:n, n:].mean() - D[:n, :n].mean() - D[n:, n:].mean())


def energy_test(A, B, n_perm, rng):
    """Energy statistic and permutation p-value ``(1 + #{perm >= obs}) / (1 + n_perm)``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    n, m = A.shape[0], B.shape[0]
    N = n + m
    D = _pdist(np.vstack([A, B]))
    gen = rng.generator if isinstance(rng, RngStream) else rng

    def stat(lab):
        # lab: (k, N) indicator of group A
        a = lab
        b = 1.0 - lab
        Da = a @ D
        Db = b @ D
        saa = np.einsum("kn,kn->k", Da, a)
        sbb = np.einsum("kn,kn->k", Db, b)
        sab = np.einsum("kn,kn->k", Da, b)
        return 2 * sab / (n * m) - saa / (n * n) - sbb / (m * m)

    base = np.zeros((1, N))
    base[0, :n] = 1.0
    obs = float(stat(base)[0])
    labs = np.zeros((n_perm, N))
    for k in range(n_perm):
        labs[k, gen.permutation(N)[:n]] = 1.0
    perm = stat(labs)
    # relative slack so exact ties are not broken by summation order
    count = int(np.count_nonzero(perm >= obs - 1e-12 * max(abs(obs), 1e-300)))
    return obs, (1 + count) / (1 + n_perm)


@dataclass(frozen=True)
class IdentityTest:
    statistic: float
    p_value: float
    t: int
    n_samples: int

    def rejects(self, alpha=0.05):
        return self.p_value < alpha

    def to_json(self):
        return {"statistic": self.statistic, "p_value": self.p_value, "t": self.t, "n_samples": self.n_samples}


def forward_values(law, z0_law, t, n, rng):
    """X_t by the recursion X_s = M_s X_{s-1} + Z_s, for n independent paths."""
    gen = rng.generator if isinstance(rng, RngStream) else rng
    X = z0_law._draw(gen, n)
    Ms, Zs = law._draw(gen, n * t)
    d = law.dim
    Ms = Ms.reshape(n, t, d, d)
    Zs = Zs.reshape(n, t, d)
    for s in range(t):
        X = np.einsum("nij,nj->ni", Ms[:, s], X) + Zs[:, s]
    return X


def series_values(law, z0_law, t, n, rng):
    """sum_{i<=t} M_1...M_{i-1} Z_i + M_1...M_t Z_0, evaluated in nested form
    Z_1 + M_1 (Z_2 + M_2 (... + M_t Z_0))."""
    gen = rng.generator if isinstance(rng, RngStream) else rng
    r = z0_law._draw(gen, n)
    Ms, Zs = law._draw(gen, n * t)
    d = law.dim
    Ms = Ms.reshape(n, t, d, d)
    Zs = Zs.reshape(n, t, d)
    for s in range(t - 1, -1, -1):
        r = np.einsum("nij,nj->ni", Ms[:, s], r) + Zs[:, s]
    return r


def test_distributional_identity(law, z0_law=None, t=5, n_samples=200, seed=0, n_perm=200) -> IdentityTest:
    """Two-sample energy test of X_t against the series form, drawn from independent streams."""
    if t < 1:
        raise InvalidInput("t must be at least 1")
    if n_samples < 100:
        raise InvalidInput("n_samples must be at least 100")
    if z0_law is None:
        z0_law = vector_zero(law.dim)
    A = forward_values(law, z0_law, t, n_samples, RngStream(seed, 0))
    B = series_values(law, z0_law, t, n_samples, RngStream(seed, 1))
    stat, p = energy_test(A, B, n_perm, RngStream(seed, 2))
    return IdentityTest(stat, p, t, n_samples)


test_distributional_identity.__test__ = False


def check_condition_i(ens: Ensemble, thresholds=DEFAULT_THRESHOLDS, seed=0) -> ConditionReport:
    """Compare the cross-replication laws of X_{T/2} and X_T."""
    thr = thresholds
    T, R = ens.T, ens.R
    h = max(1, T // 2)
    Xa = ens.x[:, h - 1, :]
    Xb = ens.x[:, -1, :]
    over = float(np.mean(~np.all(np.isfinite(ens.x[:, -1, :]), axis=1) | ens.overflow[:, -1]))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        logn = np.log(np.linalg.norm(ens.x[:, h - 1:, :], axis=2))
    logn = np.nan_to_num(np.maximum(logn, LOG_FLOOR), nan=LOG_FLOOR, posinf=800.0)
    lt = np.log(np.arange(h, T + 1, dtype=float))
    if lt.size >= 2 and lt[-1] > lt[0]:
        slope, se = _mean_se(_slopes(logn, lt))
    else:
        slope, se = 0.0, 0.0
    stats = {"log_norm_slope": slope, "log_norm_slope_se": se, "frac_overflow": over}
    caveats = []
    fail = slope - thr.trend_sigma * se > thr.i_slope or over >= thr.quorum
    hold = False
    if over == 0.0:
        e = energy_statistic(Xa, Xb)
        scale = float(np.mean(np.linalg.norm(Xb, axis=1)))
        stats["energy"] = e
        if e <= thr.tail_tol * (1.0 + scale):
            hold = True
        elif R >= thr.min_perm_samples:
            _, p = energy_test(Xa, Xb, thr.n_perm, RngStream(seed, 0x5EED))
            stats["p_value"] = p
            hold = p >= thr.alpha
            caveats.append("a permutation test that does not reject is weak evidence of convergence")
        else:
            caveats.append(f"R={R} too small for a permutation test")
    return ConditionReport("i", _three_way(hold, fail), statistics=stats, caveats=caveats)


# -- moment conditions -------------------------------------------------------


def a_m(neglog, y, knots=1000):
    """A_M(y) = int_0^y P(-log||M|| > x) dx by trapezoid quadrature on the empirical survival function."""
    neglog = np.sort(np.asarray(neglog, dtype=float))
    xs = np.linspace(0.0, float(y), knots + 1)
    surv = 1.0 - np.searchsorted(neglog, xs, side="right") / neglog.size
    return float(np.trapezoid(surv, xs)) if hasattr(np, "trapezoid") else float(np.trapz(surv, xs))


def _a_m_many(neglog, ys, knots=1000):
    # A_M on a shared grid up to max(ys), interpolated at each y
    neglog = np.sort(np.asarray(neglog, dtype=float))
    top = float(np.max(ys)) if ys.size else 0.0
    if top <= 0:
        return np.zeros_like(ys)
    xs = np.linspace(0.0, top, knots + 1)
    surv = 1.0 - np.searchsorted(neglog, xs, side="right") / neglog.size
    cum = np.concatenate([[0.0], np.cumsum((surv[1:] + surv[:-1]) * 0.5 * np.diff(xs))])
    return np.interp(ys, xs, cum)


def check_moment_conditions(law: PairLaw, n_samples=10_000, seed=0, thresholds=DEFAULT_THRESHOLDS):
    """Monte Carlo reports for the two moment conditions (R36i, R36ii)."""
    thr = thresholds
    if n_samples < 10_000:
        raise InvalidInput("moment checks need at least 10^4 samples")
    Ms, _ = law.sample_path(RngStream(seed, 0), n_samples)
    norms = np.linalg.svd(Ms, compute_uv=False)[:, 0]
    zero = norms == 0.0
    p0 = float(zero.mean())
    with np.errstate(divide="ignore"):
        L = np.log(norms)
    log_plus = np.maximum(L, 0.0)
    log_minus = np.maximum(-L, 0.0)
    fin = L[~zero]

    if zero.any():
        r1 = ConditionReport(
            "R36i",
            FAILS,
            statistics={"mass_at_zero_norm": p0},
            caveats=[f"||M_1|| = 0 with estimated probability {p0:.4g}; log||M_1|| = -inf there, so E|log||M_1||| is infinite"],
        )
    else:
        m, se = _mean_se(fin)
        ma, sea = _mean_se(np.abs(fin))
        k = thr.c0_sigma
        caveats = ["|log||M_1||| looks heavy-tailed; finiteness of its mean is uncertain"] if _heavy_tail(np.abs(fin)) else []
        if m + k * se < 0:
            verdict = INCONCLUSIVE if caveats else HOLDS
        elif m - k * se >= 0:
            verdict = FAILS
        else:
            verdict = INCONCLUSIVE
        r1 = ConditionReport(
            "R36i",
            verdict,
            statistics={"mean_log_norm": m, "mean_log_norm_se": se, "mean_abs_log_norm": ma, "mean_abs_log_norm_se": sea},
            caveats=caveats,
        )

    neglog = np.where(zero, np.inf, -L)
    A = _a_m_many(neglog, log_plus)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(log_plus == 0.0, 0.0, log_plus / A)
    ratio_mean = float(np.mean(ratio)) if np.all(np.isfinite(ratio)) else math.inf
    stats2 = {"mass_at_zero_norm": p0, "mean_ratio": ratio_mean}
    if zero.any():
        # E log^- = inf exactly; A_M(y) >= p0 * y bounds the ratio by 1 / p0
        verdict2 = HOLDS if math.isfinite(ratio_mean) else INCONCLUSIVE
        caveats2 = [f"E log- ||M_1|| is infinite because of the mass {p0:.4g} at ||M_1|| = 0 (excluded from the log moments)"]
    else:
        lm = log_minus
        stats2["mean_log_minus"] = float(lm.mean())
        if _heavy_tail(lm):
            verdict2 = INCONCLUSIVE
            caveats2 = ["log- ||M_1|| looks heavy-tailed; an infinite mean cannot be excluded from a sample"]
        else:
            verdict2 = FAILS
            caveats2 = ["E log- ||M_1|| appears finite (no heavy tail in the sample)"]
    r2 = ConditionReport("R36ii", verdict2, statistics=stats2, caveats=caveats2)
    return r1, r2


# -- everything at once ------------------------------------------------------


CONDITIONS = ("i", "ii", "iii", "iv", "v", "vi")


def diagnose(
    law: PairLaw,
    T: int,
    R: int,
    seed: int,
    z0_law: VectorLaw = None,
    x_grid=DEFAULT_X_GRID,
    thresholds=DEFAULT_THRESHOLDS,
    threads=None,
    suffix_stats=None,
):
    """Run one ensemble and report C0 and conditions (i)-(vi).

    Returns ``(reports, ensemble)`` with ``reports`` keyed by condition label.
    """
    cfg = RunConfig(law, T, R, seed, z0_law, suffix_stats)
    ens = run_ensemble(cfg, threads, keep_trajectories=True)
    reports = {}
    M = _fixed_matrix(law)
    if M is not None:
        reports["C0"] = check_c0(law, T, R, seed, thresholds)
    else:
        reports["C0"] = c0_report(lyapunov_from_ensemble(ens), ens.prod_log[:, -1], thresholds)
    reports["i"] = check_condition_i(ens, thresholds, seed)
    reports["ii"], reports["iii"] = check_condition_ii_iii(ens, thresholds)
    reports["iv"], reports["v"] = check_condition_iv_v(ens, thresholds)
    if ens.has_suffix_stats:
        reports["vi"] = check_condition_vi(ens, x_grid, thresholds)
    return reports, ens


def contradictions(reports, keys=CONDITIONS):
    """Pairs of conditions with one HOLDS and the other FAILS."""
    out = []
    ks = [k for k in keys if k in reports]
    for a in range(len(ks)):
        for b in range(a + 1, len(ks)):
            va, vb = reports[ks[a]].verdict, reports[ks[b]].verdict
            if {va, vb} == {HOLDS, FAILS}:
                out.append((ks[a], ks[b]))
    return out


def chain_violations(reports):
    """Violations of HOLDS(ii) => not FAILS(iii) => not FAILS(iv) => not FAILS(v) and HOLDS(iv) => not FAILS(vi)."""
    bad = []
    order = ["ii", "iii", "iv", "v"]
    for a in range(len(order)):
        for b in range(a + 1, len(order)):
            ra, rb = reports.get(order[a]), reports.get(order[b])
            if ra is not None and rb is not None and ra.verdict == HOLDS and rb.verdict == FAILS:
                bad.append((order[a], order[b]))
    if "iv" in reports and "vi" in reports and reports["iv"].verdict == HOLDS and reports["vi"].verdict == FAILS:
        bad.append(("iv", "vi"))
    return bad
