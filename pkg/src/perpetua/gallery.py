"""Worked counterexamples with closed-form oracles, and a search harness.

Entries (default frame e_1, e_2; default alpha = 1/2, beta = 2, c = 1):

* ``E31``: M = alpha v1 v1^T + v2 v2^T, Z = v1. |W_t| = alpha^(t-1), ||M^t|| = 1.
* ``E32``: M = alpha v1 v1^T + beta v2 v2^T, Z = v1, Z_0 = v2. ||M^t|| = beta^t.
* ``E33``: d = 1, M = beta, Z = (1 - beta) c, Z_0 = c. X_t = c for all t.
* ``E34``: as E31 with Z = v2. W_t = v2 for all t.
* ``R34``: M_t = a_t v1 v1^T + (3/2 - a_t) v2 v2^T with a_t in {1, 1/2}
  equiprobable, Z = v1. ||M_1 ... M_t|| = 2^(-min(K_t, t - K_t)) with K_t
  the number of a_j = 1, while every ||M_t|| = 1.

With dyadic parameters and the standard frame every oracle is exactly
representable, and ``verify`` demands bit-for-bit agreement.
"""

import copy
import math
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import (
    DEFAULT_THRESHOLDS,
    FAILS,
    HOLDS,
    INCONCLUSIVE,
    check_condition_iv_v,
    check_condition_vi,
    diagnose,
    estimate_lyapunov,
    lyapunov_from_ensemble,
)
from .errors import InvalidInput
from .laws import law_constant, law_frame_diagonal, law_from_json, vector_constant, vector_zero
from .linalg import LN2, spectral_norm
from .rng import RngStream
from .simulate import DEFAULT_X_GRID, RunConfig, run_ensemble

IDS = ("E31", "E32", "E33", "E34", "R34")
SEARCH_LABEL = "numerical evidence only; does not resolve the open problem"


@dataclass(frozen=True)
class GalleryEntry:
    id: str
    params: dict
    law: object
    z0_law: object
    expected: dict
    exact: bool
    description: str
    frame: np.ndarray = field(repr=False, default=None)

    def oracles(self, traj) -> dict:
        """Closed-form ``prod_log``, ``w_log`` and ``y_log`` for t = 1..T of one trajectory."""
        return _ORACLES[self.id](self, traj)

    def to_json(self):
        return {
            "id": self.id,
            "params": {k: v for k, v in sorted(self.params.items())},
            "law": self.law.to_json(),
            "z0": self.z0_law.to_json(),
            "expected": {k: str(v) for k, v in sorted(self.expected.items())},
            "exact_oracles": self.exact,
            "description": self.description,
        }


def _is_dyadic(x):
    m, _ = math.frexp(abs(x))
    return x != 0 and m == 0.5


def _frame(frame, d=2):
    F = np.eye(d) if frame is None else np.array(frame, dtype=float)
    return F


def build(id: str, *, alpha=0.5, beta=2.0, c=1.0, frame=None) -> GalleryEntry:
    """Construct a gallery entry; parameters are validated against each example's range."""
    if id not in IDS:
        raise InvalidInput(f"unknown gallery id {id!r}; choose from {', '.join(IDS)}")
    alpha, beta, c = float(alpha), float(beta), float(c)
    F = _frame(frame)
    std = frame is None or np.array_equal(F, np.eye(2))
    if id in ("E31", "E32", "E34") and not 0 < alpha < 1:
        raise InvalidInput(f"{id} needs 0 < alpha < 1, got {alpha}")
    if id == "E32" and not beta > 1:
        raise InvalidInput(f"E32 needs beta > 1, got {beta}")
    if id == "E33":
        if not abs(beta) > 1:
            raise InvalidInput(f"E33 needs |beta| > 1, got {beta}")
        if not c > 0:
            raise InvalidInput(f"E33 needs c > 0, got {c}")

    # frame vectors are the rows of ``frame`` and the columns of F.T
    v1, v2 = F[0], F[1]
    if id == "E31":
        law = law_frame_diagonal(F, [([alpha],), ([1.0],)], vector_constant(v1))
        return GalleryEntry(
            id, {"alpha": alpha}, law, vector_zero(2),
            {"ii": HOLDS, "C0": FAILS}, std and _is_dyadic(alpha),
            "summable terms without C0", F,
        )
    if id == "E32":
        law = law_frame_diagonal(F, [([alpha],), ([beta],)], vector_constant(v1))
        return GalleryEntry(
            id, {"alpha": alpha, "beta": beta}, law, vector_constant(v2),
            {"ii": HOLDS, "i": FAILS, "C0": FAILS}, std and _is_dyadic(alpha) and _is_dyadic(beta),
            "convergent perpetuity while X_t diverges", F,
        )
    if id == "E33":
        law = law_constant([[beta]], [(1.0 - beta) * c])
        return GalleryEntry(
            id, {"beta": beta, "c": c}, law, vector_constant([c]),
            {"i": HOLDS, "v": FAILS, "vi": FAILS, "C0": FAILS},
            _is_dyadic(beta) and _is_dyadic(c) and _is_dyadic(1.0 - beta),
            "constant process X_t = c with growing terms", None,
        )
    if id == "E34":
        law = law_frame_diagonal(F, [([alpha],), ([1.0],)], vector_constant(v2))
        return GalleryEntry(
            id, {"alpha": alpha}, law, vector_zero(2),
            {"v": HOLDS, "vi": FAILS, "C0": FAILS}, std and _is_dyadic(alpha),
            "bounded terms that never shrink", F,
        )
    law = law_frame_diagonal(F, None, vector_constant(v1), tuples=[[1.0, 0.5], [0.5, 1.0]], tuple_probs=[0.5, 0.5])
    return GalleryEntry(
        "R34", {}, law, vector_zero(2),
        {"C0": HOLDS}, std,
        "C0 holds although every factor has norm 1", F,
    )


def _t(traj):
    return np.arange(1, traj.T + 1, dtype=float)


def _with_inf_start(y):
    y = np.array(y, dtype=float)
    y[0] = math.inf
    return y


def _oracle_e31(e, traj):
    n = np.arange(traj.T, dtype=float)  # t - 1
    la = math.log(e.params["alpha"])
    w = n * la
    return {"prod_log": np.zeros(traj.T), "w_log": w, "y_log": _with_inf_start(w)}


def _oracle_e32(e, traj):
    n = np.arange(traj.T, dtype=float)
    la, lb = math.log(e.params["alpha"]), math.log(e.params["beta"])
    w = n * la
    return {"prod_log": (n + 1) * lb, "w_log": w, "y_log": _with_inf_start(w)}


def _oracle_e33(e, traj):
    n = np.arange(traj.T, dtype=float)
    beta, c = e.params["beta"], e.params["c"]
    lb = math.log(abs(beta))
    l0 = math.log(abs(1.0 - beta) * c)
    return {
        "prod_log": (n + 1) * lb,
        "w_log": l0 + n * lb,
        # the shortest suffix wins when |beta| > 1
        "y_log": _with_inf_start(np.full(traj.T, l0 + lb)),
    }


def _oracle_e34(e, traj):
    z = np.zeros(traj.T)
    return {"prod_log": z, "w_log": z.copy(), "y_log": _with_inf_start(z)}


def _oracle_r34(e, traj):
    # K_t from the realized scalars along v1
    v1 = e.frame[0]
    a = np.einsum("i,nij,j->n", v1, traj.Ms, v1)
    K = np.cumsum(a == 1.0).astype(float)
    t = _t(traj)
    Kprev = np.concatenate([[0.0], K[:-1]])
    w = -((t - 1 - Kprev) * LN2)
    return {
        "prod_log": -(np.minimum(K, t - K) * LN2),
        "w_log": w,
        # all scalars are <= 1, so the longest suffix is the smallest
        "y_log": _with_inf_start(w),
    }


_ORACLES = {"E31": _oracle_e31, "E32": _oracle_e32, "E33": _oracle_e33, "E34": _oracle_e34, "R34": _oracle_r34}


@dataclass
class VerifyReport:
    entry: GalleryEntry
    T: int
    R: int
    seed: int
    oracle_checks: dict
    verdicts: dict
    verdict_checks: dict
    extra_checks: dict

    @property
    def contradictions(self):
        return [k for k, v in self.verdict_checks.items() if v == "contradiction"]

    @property
    def oracle_failures(self):
        return [k for k, v in self.oracle_checks.items() if not v["pass"]]

    @property
    def ok(self):
        return not self.contradictions and not self.oracle_failures and all(
            v["pass"] for v in self.extra_checks.values() if v.get("required", True)
        )

    def to_json(self):
        return {
            "entry": self.entry.to_json(),
            "T": self.T,
            "R": self.R,
            "seed": self.seed,
            "oracle_checks": self.oracle_checks,
            "verdicts": {k: r.to_json() for k, r in sorted(self.verdicts.items())},
            "verdict_checks": dict(sorted(self.verdict_checks.items())),
            "extra_checks": self.extra_checks,
            "ok": self.ok,
        }


def _compare(sim, ref, exact):
    sim = np.asarray(sim, dtype=float)
    ref = np.asarray(ref, dtype=float)
    same_inf = (sim == ref) | (np.isnan(sim) & np.isnan(ref))
    fin = np.isfinite(sim) & np.isfinite(ref)
    if exact:
        ok = bool(np.all(same_inf))
        with np.errstate(invalid="ignore"):
            diff = np.where(fin, np.abs(sim - ref), np.where(same_inf, 0.0, np.inf))
        return ok, float(diff.max()) if diff.size else 0.0
    with np.errstate(invalid="ignore"):
        diff = np.where(fin, np.abs(sim - ref) / np.maximum(1.0, np.abs(ref)), np.where(same_inf, 0.0, np.inf))
    mx = float(diff.max()) if diff.size else 0.0
    return mx <= 1e-9, mx


def check_oracles(entry: GalleryEntry, ens) -> dict:
    """Compare every replication of ``ens`` against the entry's closed forms."""
    out = {}
    for key in ("prod_log", "w_log", "y_log"):
        ok_all, worst = True, 0.0
        for traj in ens.trajectories:
            if key == "y_log" and not ens.has_suffix_stats:
                continue
            ref = entry.oracles(traj)[key]
            sim = getattr(traj, key)
            ok, mx = _compare(sim, ref, entry.exact)
            ok_all &= ok
            worst = max(worst, mx)
        out[key] = {"pass": bool(ok_all), "max_abs_diff" if entry.exact else "max_rel_diff": worst, "exact": entry.exact}
    return out


def verify(entry: GalleryEntry, T=256, R=16, seed=0, thresholds=DEFAULT_THRESHOLDS, threads=None, x_grid=DEFAULT_X_GRID):
    """Simulate the entry, check the oracles, and compare verdicts with the expected ones."""
    reports, ens = diagnose(entry.law, T, R, seed, entry.z0_law, x_grid, thresholds, threads)
    oracle_checks = check_oracles(entry, ens)
    checks = {}
    for cond, want in entry.expected.items():
        got = reports[cond].verdict if cond in reports else None
        if got is None:
            checks[cond] = "not-run"
        elif got == want:
            checks[cond] = "agree"
        elif got == INCONCLUSIVE:
            checks[cond] = "inconclusive"
        else:
            checks[cond] = "contradiction"
    extra = {}
    if entry.id in ("E31", "E34", "R34"):
        # every factor has norm 1, so the product of norms is exactly 1
        logs = [math.log(spectral_norm(M)) for tr in ens.trajectories for M in tr.Ms]
        extra["product_of_norms_is_one"] = {"pass": all(v == 0.0 for v in logs), "max_abs_log_norm": max(abs(v) for v in logs)}
    if entry.id == "R34" and T >= 100 and R >= 2:
        est = lyapunov_from_ensemble(ens, check_tails=False)
        target = -LN2 / 2
        extra["lyapunov_within_3se"] = {
            "pass": abs(est.lambda_hat - target) <= 3 * est.stderr,
            "lambda_hat": est.lambda_hat,
            "stderr": est.stderr,
            "target": target,
            # finite-T bias of order 1/sqrt(T) from E|K_T - T/2|; informational only
            "required": False,
        }
    return VerifyReport(entry, T, R, seed, oracle_checks, reports, checks, extra)


# -- search harness ----------------------------------------------------------


def _substitute(node, values):
    if isinstance(node, str) and node.startswith("$"):
        name = node[1:]
        if name not in values:
            raise InvalidInput(f"family template uses undefined parameter {name!r}")
        return values[name]
    if isinstance(node, dict):
        return {k: _substitute(v, values) for k, v in node.items()}
    if isinstance(node, list):
        return [_substitute(v, values) for v in node]
    return node


@dataclass(frozen=True)
class Family:
    """A law template with ``"$name"`` placeholders and uniform ranges for each name."""

    template: dict
    parameters: dict

    @classmethod
    def from_json(cls, doc):
        if not isinstance(doc, dict) or "template" not in doc:
            raise InvalidInput("family must be an object with a 'template' law and optional 'parameters'")
        params = doc.get("parameters", {})
        for k, rng in params.items():
            if not (isinstance(rng, (list, tuple)) and len(rng) == 2 and float(rng[0]) <= float(rng[1])):
                raise InvalidInput(f"parameter {k!r} needs a [low, high] range")
        fam = cls(copy.deepcopy(doc["template"]), {k: (float(a), float(b)) for k, (a, b) in sorted(params.items())})
        fam.law({k: a for k, (a, _) in fam.parameters.items()})  # validate the template
        return fam

    def law(self, values):
        return law_from_json(_substitute(self.template, values))

    def draw(self, gen):
        return {k: float(a + (b - a) * gen.random()) for k, (a, b) in self.parameters.items()}

    def to_json(self):
        return {"template": self.template, "parameters": {k: list(v) for k, v in self.parameters.items()}}


def families() -> dict:
    """Example families for the search harness."""
    e34 = build("E34").law.to_json()
    mixed = {
        "template": {
            "kind": "frame-diagonal",
            "scalars": {
                "independent": [
                    {"values": ["$a_lo", "$a_hi"], "probs": [0.5, 0.5]},
                    {"values": ["$b_lo", "$b_hi"], "probs": [0.5, 0.5]},
                ]
            },
            "z": {"kind": "gaussian", "d": 2, "std": 1.0},
        },
        "parameters": {"a_lo": [0.1, 1.0], "a_hi": [1.0, 3.0], "b_lo": [0.1, 1.0], "b_hi": [1.0, 3.0]},
    }
    return {"e34-only": {"template": e34, "parameters": {}}, "mixed-frame-diagonal": mixed}


@dataclass
class SearchReport:
    label: str
    family: dict
    budget: int
    seed: int
    evaluated: int
    rejected_c0: int
    candidates: list

    def to_json(self):
        return {
            "label": self.label,
            "family": self.family,
            "budget": self.budget,
            "seed": self.seed,
            "evaluated": self.evaluated,
            "rejected_c0": self.rejected_c0,
            "candidates": self.candidates,
        }


def search_open_problem(family, budget, seed, T=256, R=16, thresholds=DEFAULT_THRESHOLDS, x_grid=DEFAULT_X_GRID, threads=None):
    """Random scan for laws outside C0 whose (vi) verdict is HOLDS while (v) FAILS."""
    fam = family if isinstance(family, Family) else Family.from_json(family)
    budget = int(budget)
    if budget < 0:
        raise InvalidInput("budget must be nonnegative")
    gen = RngStream(seed, 0).generator
    cands, rejected, evaluated = [], 0, 0
    for i in range(budget):
        values = fam.draw(gen)
        law = fam.law(values)
        est = estimate_lyapunov(law, max(T, 100), max(R, 2), seed + 1 + i, threads)
        evaluated += 1
        if est.lambda_hat < 0:
            if not fam.parameters:
                raise InvalidInput("family has a negative Lyapunov exponent; C0 holds, so it is outside the search regime")
            rejected += 1
            continue
        ens = run_ensemble(RunConfig(law, T, R, seed + 1 + i, suffix_stats=True), threads)
        vi = check_condition_vi(ens, x_grid, thresholds)
        _, v = check_condition_iv_v(ens, thresholds)
        if vi.verdict == HOLDS and v.verdict == FAILS:
            margin = v.statistics["tail_slope"] - thresholds.trend_sigma * v.statistics["tail_slope_se"]
            cands.append({
                "params": values,
                "law": law.to_json(),
                "lambda_hat": est.lambda_hat,
                "lambda_stderr": est.stderr,
                "margin": margin,
                "v": v.to_json(),
                "vi": vi.to_json(),
            })
    cands.sort(key=lambda c: -c["margin"])
    return SearchReport(SEARCH_LABEL, fam.to_json(), budget, int(seed), evaluated, rejected, cands)
