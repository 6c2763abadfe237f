"""Command-line interface.

Every command writes one JSON report (stdout or ``--out``) that embeds the
resolved configuration. Reports are byte-identical for identical arguments
regardless of ``--threads``. Exit codes: 0 success, 1 gallery verification
failure, 2 configuration or usage error.
"""

import argparse
import json
import math
import os
import sys
import warnings

import numpy as np

from . import __version__
from .constant import c0_exact, power_via_spectral, spectral_components
from .diagnostics import (
    CONDITIONS,
    Thresholds,
    check_moment_conditions,
    contradictions,
    diagnose,
    estimate_lyapunov,
    lyapunov_from_ensemble,
)
from .errors import BoundaryWarning, ConfigError, DegeneracyError, PerpetuaError
from .gallery import IDS, Family, build, families, search_open_problem, verify
from .laws import law_from_json, vector_law_from_json
from .linalg import as_matrix
from .simulate import DEFAULT_X_GRID, RunConfig, run_ensemble, write_trace


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(2)


def clean(obj):
    """Recursively convert to JSON-safe values; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_json"):
        return clean(obj.to_json())
    return str(obj)


def dumps(report) -> str:
    return json.dumps(clean(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _load_json(text, what):
    if os.path.exists(text):
        try:
            with open(text, encoding="utf-8") as fh:
                return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{what} file {text!r} is not valid JSON: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} is neither an existing file nor inline JSON: {text!r}") from exc


def _grid(text):
    try:
        vals = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"bad --x-grid {text!r}") from exc
    if not vals or any(not (v > 0 and math.isfinite(v)) for v in vals):
        raise ConfigError("--x-grid values must be positive and finite")
    return vals


def _threads(args):
    if args.threads is not None:
        n = args.threads
    elif os.environ.get("PERPETUA_THREADS"):
        try:
            n = int(os.environ["PERPETUA_THREADS"])
        except ValueError as exc:
            raise ConfigError("PERPETUA_THREADS must be an integer") from exc
    else:
        n = os.cpu_count() or 1
    if n < 1:
        raise ConfigError("thread count must be at least 1")
    return n


def _thresholds(args):
    kw = {}
    for name in ("c0_sigma", "quorum", "tail_tol"):
        v = getattr(args, name, None)
        if v is not None:
            kw[name] = v
    return Thresholds(**kw)


def _positive(name, v):
    if v < 1:
        raise ConfigError(f"--{name} must be at least 1")
    return v


def _header(args, command, extra=None):
    cfg = {"command": command, "version": __version__}
    if args.epoch is not None:
        cfg["epoch"] = args.epoch
    if extra:
        cfg.update(extra)
    return cfg


# -- commands ----------------------------------------------------------------


def cmd_simulate(args):
    law = law_from_json(_load_json(args.law, "--law"))
    z0 = vector_law_from_json(_load_json(args.z0, "--z0"), law.dim) if args.z0 else None
    grid = _grid(args.x_grid)
    cfg = RunConfig(law, _positive("T", args.T), _positive("R", args.R), args.seed, z0, False if args.no_suffix else None)
    ens = run_ensemble(cfg, _threads(args), keep_trajectories=bool(args.trace))
    if args.trace:
        with open(args.trace, "w", encoding="utf-8", newline="") as fh:
            write_trace(ens.trajectories[0], fh)
    s = ens.summary(grid)
    report = {
        "config": _header(args, "simulate", {"run": cfg.to_json(), "x_grid": grid}),
        "summary": {
            "w_log_q05": s.w_log_quantiles[0],
            "w_log_q50": s.w_log_quantiles[1],
            "w_log_q95": s.w_log_quantiles[2],
            "w_mean_log": s.w_mean_log,
            "prod_log_mean": s.prod_log_mean,
            "p_exceed": s.p_exceed,
            "final_x": ens.x[:, -1, :],
            "final_v": ens.v[:, -1, :],
            "overflow_any": ens.overflow.any(axis=1),
        },
    }
    return report, 0


def cmd_diagnose(args):
    law = law_from_json(_load_json(args.law, "--law"))
    z0 = vector_law_from_json(_load_json(args.z0, "--z0"), law.dim) if args.z0 else None
    grid = _grid(args.x_grid)
    thr = _thresholds(args)
    _positive("T", args.T)
    _positive("R", args.R)
    reports, ens = diagnose(law, args.T, args.R, args.seed, z0, grid, thr, _threads(args), False if args.no_suffix else None)
    out = {k: r.to_json() for k, r in reports.items()}
    if args.moments:
        for r in check_moment_conditions(law, args.moment_samples, args.seed, thr):
            out[r.condition] = r.to_json()
    report = {
        "config": _header(args, "diagnose", {"run": ens.config.to_json(), "thresholds": thr.to_json(), "x_grid": grid}),
        "reports": out,
        "contradictions": [list(p) for p in contradictions(reports, CONDITIONS)],
    }
    if ens.T >= 100 and ens.R >= 2:
        report["lyapunov"] = lyapunov_from_ensemble(ens).to_json()
    return report, 0


def cmd_lyapunov(args):
    law = law_from_json(_load_json(args.law, "--law"))
    est = estimate_lyapunov(law, args.T, args.R, args.seed, _threads(args))
    report = {
        "config": _header(args, "lyapunov", {"law": law.to_json(), "T": args.T, "R": args.R, "seed": args.seed}),
        "estimate": est.to_json(),
    }
    return report, 0


def cmd_constant(args):
    M = as_matrix(_load_json(args.matrix, "--matrix"), "--matrix")
    caveats = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        dec0 = c0_exact(M)
        out = {"c0": dec0.holds, "spectral_radius": dec0.radius, "boundary": dec0.boundary}
        try:
            dec = spectral_components(M)
            recon = []
            P = np.eye(M.shape[0])
            for t in range(args.t_check + 1):
                R = power_via_spectral(dec, t)
                denom = max(np.linalg.norm(P, 2), np.finfo(float).tiny)
                recon.append(float(np.linalg.norm(R - P, 2) / denom))
                P = P @ M
            out.update({
                "eigenvalues": [[float(l.real), float(l.imag)] for l in dec.eigenvalues],
                "multiplicities": list(dec.multiplicities),
                "identity_residual": dec.identity_residual,
                "matrix_residual": dec.matrix_residual,
                "reconstruction_rel_error": recon,
            })
        except DegeneracyError as exc:
            caveats.append(f"{exc} (candidate degrees {list(exc.candidates)})")
        except PerpetuaError as exc:
            caveats.append(str(exc))
    caveats += [str(w.message) for w in caught]
    out["caveats"] = caveats
    report = {"config": _header(args, "constant", {"matrix": M, "t_check": args.t_check}), "result": out}
    return report, 0


def cmd_gallery(args):
    if args.action == "list":
        entries = [build(i).to_json() for i in IDS]
        return {"config": _header(args, "gallery list"), "entries": entries, "families": families()}, 0
    if args.action == "verify":
        if not args.target:
            raise ConfigError("gallery verify needs an entry id")
        params = {k: getattr(args, k) for k in ("alpha", "beta", "c") if getattr(args, k) is not None}
        entry = build(args.target, **params)
        thr = _thresholds(args)
        rep = verify(entry, _positive("T", args.T), _positive("R", args.R), args.seed, thr, _threads(args), _grid(args.x_grid))
        report = {
            "config": _header(args, "gallery verify", {"thresholds": thr.to_json(), "x_grid": _grid(args.x_grid)}),
            "verification": rep.to_json(),
        }
        return report, 0 if rep.ok else 1
    return cmd_search(args)


def cmd_search(args):
    target = args.target
    if not target:
        raise ConfigError("search needs a family JSON (file or inline)")
    doc = families()[target] if target in families() else _load_json(target, "family")
    fam = Family.from_json(doc)
    thr = _thresholds(args)
    rep = search_open_problem(fam, args.budget, args.seed, args.T, args.R, thr, _grid(args.x_grid), _threads(args))
    report = {
        "config": _header(args, "search", {"T": args.T, "R": args.R, "thresholds": thr.to_json(), "x_grid": _grid(args.x_grid)}),
        "search": rep.to_json(),
    }
    return report, 0


# -- parser ------------------------------------------------------------------


def _common(p, T=256, R=16):
    p.add_argument("--T", type=int, default=T, help="horizon")
    p.add_argument("--R", type=int, default=R, help="replications")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--x-grid", default=",".join(repr(x) for x in DEFAULT_X_GRID), help="comma-separated x values for (vi)")
    p.add_argument("--threads", type=int, default=None, help="worker threads (env PERPETUA_THREADS, else CPU count)")
    p.add_argument("--c0-sigma", dest="c0_sigma", type=float, default=None)
    p.add_argument("--quorum", type=float, default=None)
    p.add_argument("--tail-tol", dest="tail_tol", type=float, default=None)


def _io(p):
    p.add_argument("--out", default=None, help="write the JSON report here instead of stdout")
    p.add_argument("--epoch", type=int, default=None, help="fixed timestamp recorded in the report")


def build_parser():
    parser = _Parser(prog="perpetua", description="Random coefficient autoregression and perpetuity diagnostics.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate an ensemble and summarize it")
    p.add_argument("--law", required=True, help="law JSON file or inline JSON")
    p.add_argument("--z0", default=None, help="initial-value law JSON (default zero)")
    p.add_argument("--trace", default=None, help="CSV trajectory dump of replication 0")
    p.add_argument("--no-suffix", action="store_true", help="skip the O(T^2) suffix statistics")
    _common(p)
    _io(p)

    p = sub.add_parser("diagnose", help="verdicts on C0 and conditions (i)-(vi)")
    p.add_argument("--law", required=True)
    p.add_argument("--z0", default=None)
    p.add_argument("--no-suffix", action="store_true")
    p.add_argument("--moments", action="store_true", help="also check the moment conditions")
    p.add_argument("--moment-samples", type=int, default=10_000)
    _common(p)
    _io(p)

    p = sub.add_parser("lyapunov", help="estimate the top Lyapunov exponent")
    p.add_argument("--law", required=True)
    _common(p, T=2000, R=64)
    _io(p)

    p = sub.add_parser("constant", help="exact analysis of a constant coefficient matrix")
    p.add_argument("--matrix", required=True, help="matrix as JSON (file or inline)")
    p.add_argument("--t-check", type=int, default=20, help="largest power used in the reconstruction check")
    _io(p)
    p.set_defaults(threads=None)

    p = sub.add_parser("gallery", help="worked examples: list, verify <id>, search <family>")
    p.add_argument("action", choices=("list", "verify", "search"))
    p.add_argument("target", nargs="?", default=None, help="entry id for verify, family for search")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--budget", type=int, default=20)
    _common(p)
    _io(p)

    p = sub.add_parser("search", help="scan a law family for (vi) HOLDS with (v) FAILS")
    p.add_argument("target", help="family JSON (file, inline, or a built-in family name)")
    p.add_argument("--budget", type=int, default=20)
    _common(p)
    _io(p)
    return parser


COMMANDS = {
    "simulate": cmd_simulate,
    "diagnose": cmd_diagnose,
    "lyapunov": cmd_lyapunov,
    "constant": cmd_constant,
    "gallery": cmd_gallery,
    "search": cmd_search,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        report, code = COMMANDS[args.command](args)
    except (PerpetuaError, ValueError, KeyError) as exc:
        sys.stderr.write(f"perpetua {args.command}: error: {exc}\n")
        return 2
    text = dumps(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


def main(argv=None) -> int:
    return run(argv)
