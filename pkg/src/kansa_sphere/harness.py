"""Manufactured problems, convergence ladders, rate fits and report emission."""

from __future__ import annotations

import copy
import csv
import io
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .collocation import interpolate
from .kansa import assemble_kansa, l2_distance, solve_least_squares
from .kernels import SpectralOperator, helmholtz_operator, kernel_from_config
from .norming import build_norming_set
from .spectral import HarmonicExpansion
from .sphere_geom import fibonacci_points, metrics, quadrature_rule
from .thinning import solve_thinned, thin

log = logging.getLogger(__name__)

CSV_COLUMNS = ["N", "M", "h_X", "q_X", "rho_X", "kappa", "sigma_min", "residual",
               "err_interp", "err_ls", "err_thin"]

DEFAULT_CONFIG = {
    "d": 2,
    "problem": {"terms": [[1, 0, 1.0], [3, 2, 0.5], [5, 0, 0.25]]},
    "kernel": {"kind": "tps", "s": 2},
    "operator": {"c": 1.0},
    "ladder": [100, 200, 400, 800, 1600],
    "sigma": 2.0,
    "f_param": 2.0,
    "quadrature_degree": 60,
    "probe_density": 100,
    "candidate_density": 25,
}


@dataclass(frozen=True, eq=False)
class Problem:
    d: int
    op: SpectralOperator
    u_true: HarmonicExpansion
    f: HarmonicExpansion
    label: str = ""


def manufactured_problem(d: int, op: SpectralOperator, terms, label: str = "") -> Problem:
    """u from (l, m, coefficient) terms, m the within-degree index; f = L u degree by degree."""
    terms = [(int(l), int(m), float(v)) for l, m, v in terms]
    if any(not math.isfinite(v) for _, _, v in terms):
        raise ValueError("non-finite coefficient in manufactured solution")
    u = HarmonicExpansion.from_terms(d, terms) if terms else HarmonicExpansion(d, 0, np.zeros(1))
    return Problem(d, op, u, u.scaled_by_degree(op), label)


@dataclass
class LadderRow:
    N: int
    M: int = 0
    h_X: float = math.nan
    q_X: float = math.nan
    rho_X: float = math.nan
    kappa: float = math.nan
    sigma_min: float = math.nan
    residual: float = math.nan
    err_interp: float = math.nan
    err_ls: float = math.nan
    err_thin: float = math.nan
    status: str = "ok"
    extras: dict = field(default_factory=dict)

    def values(self) -> list:
        return [getattr(self, c) for c in CSV_COLUMNS]


@dataclass
class LadderResult:
    rows: list
    fits: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)


def merged_config(config: dict | None) -> dict:
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    for key, val in (config or {}).items():
        if isinstance(val, dict) and isinstance(cfg.get(key), dict):
            cfg[key] = {**cfg[key], **val}
        else:
            cfg[key] = val
    return cfg


def problem_from_config(cfg: dict) -> Problem:
    d = int(cfg["d"])
    return manufactured_problem(d, helmholtz_operator(float(cfg["operator"]["c"]), d),
                                cfg["problem"]["terms"])


def _run_row(N: int, cfg: dict, problem: Problem, kernel, rule, seed: int, row_index: int) -> LadderRow:
    row = LadderRow(N)
    t0 = time.perf_counter()
    try:
        d = problem.d
        X = fibonacci_points(N, d)
        row.h_X, row.q_X, row.rho_X = metrics(X, int(cfg["probe_density"]))
        # per-row seed picks the starting candidate of the greedy net
        rng = np.random.default_rng([seed, row_index])
        n_cand = int(math.ceil(cfg["candidate_density"] * cfg["sigma"] ** d * N))
        Y = build_norming_set(X, float(cfg["sigma"]), int(cfg["candidate_density"]),
                              seed_index=int(rng.integers(max(n_cand, 2 * N))))
        row.M = len(Y)
        row.kappa = len(Y) / N
        u = problem.u_true

        interp = interpolate(X, kernel, u(X.points))
        row.err_interp = l2_distance(interp, u, rule)

        sys = assemble_kansa(X, Y, kernel, problem.op, "lagrange")
        ls = solve_least_squares(sys, problem.f(Y.points), reference=u, rule=rule)
        row.sigma_min = ls.sigma_min
        row.residual = ls.residual_norm
        row.err_ls = ls.l2_error
        row.extras["bound_product"] = row.kappa / ls.sigma_min ** 2
        row.extras["sigma_over_sqrt_kappa"] = ls.sigma_min / math.sqrt(row.kappa)

        ts = thin(sys, float(cfg["f_param"]))
        th = solve_thinned(ts, problem.f(ts.Y_tilde.points), reference=u, rule=rule)
        row.err_thin = th.l2_error
        row.extras["thin_sigma_min"] = ts.sigma_min
        row.extras["thin_inverse_norm_over_N"] = th.extras["inverse_norm_over_N"]
        row.extras["swaps"] = ts.rrqr.swaps
        if row.err_ls > 10.0 * row.err_thin:
            log.warning("N=%d: least-squares error %.3g exceeds 10x thinned error %.3g",
                        N, row.err_ls, row.err_thin)
    except (ValueError, np.linalg.LinAlgError, AssertionError) as exc:
        row.status = f"failed: {exc}"
        log.error("ladder row N=%d failed: %s", N, exc)
    row.extras["seconds"] = time.perf_counter() - t0
    return row


def convergence_study(config: dict | None = None, seed: int = 0) -> LadderResult:
    """Interpolation, least-squares and thinned errors along a ladder of N."""
    cfg = merged_config(config)
    problem = problem_from_config(cfg)
    kernel = kernel_from_config(cfg["kernel"], problem.d)
    rule = quadrature_rule(problem.d, int(cfg["quadrature_degree"]))
    ladder = sorted(int(n) for n in cfg["ladder"])
    rows = [_run_row(N, cfg, problem, kernel, rule, seed, i) for i, N in enumerate(ladder)]
    return LadderResult(rows, fit_orders(rows), cfg)


def fit_rate(pairs) -> tuple[float, float]:
    """Slope of log(error) against log(q) and its standard error."""
    pairs = [(float(q), float(e)) for q, e in pairs]
    if len(pairs) < 3:
        raise ValueError("need at least three (q, error) pairs")
    q, e = np.array(pairs).T
    if np.any(e <= 0) or np.any(q <= 0):
        raise ValueError("errors and mesh sizes must be positive")
    fit = stats.linregress(np.log(q), np.log(e))
    return float(fit.slope), float(fit.stderr)


def fit_orders(rows) -> dict:
    ok = [r for r in rows if r.status == "ok"]
    fits = {}
    for col in ("err_interp", "err_ls", "err_thin"):
        for mesh in ("q_X", "h_X"):
            pairs = [(getattr(r, mesh), getattr(r, col)) for r in ok]
            try:
                fits[f"{col}_vs_{mesh}"] = fit_rate(pairs)
            except ValueError:
                fits[f"{col}_vs_{mesh}"] = (math.nan, math.nan)
    return fits


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def to_csv(result: LadderResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in result.rows:
        w.writerow([_fmt(v) for v in r.values()])
    return buf.getvalue()


def to_json(result: LadderResult) -> str:
    rows = []
    for r in result.rows:
        rec = dict(zip(CSV_COLUMNS, r.values()))
        rec["status"] = r.status
        rec.update(r.extras)
        rows.append(rec)
    fits = {k: {"order": v[0], "stderr": v[1]} for k, v in result.fits.items()}
    return json.dumps({"config": result.config, "rows": rows, "fits": fits}, indent=2,
                      allow_nan=True)


def emit(result: LadderResult, fmt: str, path) -> Path:
    path = Path(path)
    if fmt == "csv":
        path.write_text(to_csv(result))
    elif fmt == "json":
        path.write_text(to_json(result))
    elif fmt == "svg":
        from .plotting import plot_ladder
        plot_ladder(result, path)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return path
