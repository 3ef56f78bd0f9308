"""Strong rank-revealing QR column selection and thinned square Kansa systems.

Thinning picks N rows of the M x N Kansa matrix K by running strong RRQR on
K^T with k = N. Tiling K by kappa identical copies (as in the analysis of the
tiled matrix e_kappa (x) K) adds only duplicate columns to K^T; a duplicate of
an already selected column makes A_k singular, so it is never swapped in, and
the selection is the same as on K^T itself. That is why no tiling is formed.
"""

from __future__ import annotations

import logging
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .kansa import KansaSystem, SolveReport, l2_distance, reconstruct
from .sphere_geom import PointSet

log = logging.getLogger(__name__)

RECOMPUTE_EVERY = 64
SWAP_GUARD = 100
SVD_CHECK_LIMIT = 2_000_000
BOUND_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class RRQRResult:
    """F[:, perm] = Q [[A_k, B_k], [0, trailing]] with perm[:k] = selected."""

    selected: np.ndarray
    perm: np.ndarray
    A_k: np.ndarray
    B_k: np.ndarray
    trailing: np.ndarray
    f_param: float
    sigma_min_Ak: float
    q1_bound: float
    swaps: int
    interp_max: float
    logdet_history: list = field(default_factory=list)
    svd_checked: bool = False

    @property
    def k(self) -> int:
        return len(self.selected)


def _check_input(F: np.ndarray, k: int, f_param: float) -> np.ndarray:
    F = np.asarray(F, dtype=float)
    if F.ndim != 2:
        raise ValueError("F must be a matrix")
    m, n = F.shape
    if not 1 <= k <= min(m, n):
        raise ValueError(f"k={k} out of range 1..{min(m, n)}")
    if not f_param > 1:
        raise ValueError("f_param must exceed 1")
    if not np.all(np.isfinite(F)):
        raise ValueError("F has non-finite entries")
    return F


def _triangular_blocks(F: np.ndarray, perm: np.ndarray, k: int):
    R = sla.qr(F[:, perm], mode="r", check_finite=False)[0]
    # nonnegative diagonal: flip the signs of rows (and the matching Q columns)
    sgn = np.sign(np.diag(R))
    sgn[sgn == 0] = 1.0
    R = R * np.concatenate([sgn, np.ones(R.shape[0] - sgn.size)])[:, None]
    return R[:k, :k], R[:k, k:], R[k:, k:]


def _swap_full_rank(F: np.ndarray, perm: np.ndarray, k: int, f_param: float,
                    history: list) -> int:
    """Swap phase for k = m, where no trailing block exists.

    W = F_S^{-1} F_R; swapping selected i with unselected j scales |det F_S| by |W_ij|.
    """
    S = perm[:k].copy()
    Rn = perm[k:].copy()
    W = sla.solve(F[:, S], F[:, Rn], check_finite=False)
    logdet = float(np.linalg.slogdet(F[:, S])[1])
    history.append(logdet)
    swaps = 0
    guard = SWAP_GUARD * k
    while True:
        absW = np.abs(W)
        flat = int(np.argmax(absW))  # first maximum: lowest i, then lowest j
        i, j = divmod(flat, W.shape[1])
        p = W[i, j]
        if abs(p) <= f_param:
            break
        row = W[i].copy()
        row[j] = 1.0
        col = W[:, j].copy()
        col[i] = 0.0
        W[i] = row / p
        W -= np.outer(col, W[i])
        W[:, j] = -col / p
        W[i, j] = 1.0 / p
        S[i], Rn[j] = Rn[j], S[i]
        logdet += math.log(abs(p))
        history.append(logdet)
        swaps += 1
        if swaps % RECOMPUTE_EVERY == 0:
            W = sla.solve(F[:, S], F[:, Rn], check_finite=False)
        if swaps == guard:
            log.warning("strong RRQR: %d swaps (k=%d); continuing", swaps, k)
    perm[:k], perm[k:] = S, Rn
    return swaps


def _swap_general(F: np.ndarray, perm: np.ndarray, k: int, f_param: float,
                  history: list) -> int:
    """Swap phase with a trailing block; re-triangularizes after each swap."""
    swaps = 0
    guard = SWAP_GUARD * k
    while True:
        A, B, C = _triangular_blocks(F, perm, k)
        if not swaps:
            history.append(float(np.sum(np.log(np.abs(np.diag(A))))))
        Ainv = sla.solve_triangular(A, np.eye(k), check_finite=False)
        W = Ainv @ B
        gamma = np.linalg.norm(C, axis=0) if C.size else np.zeros(B.shape[1])
        rho = np.sqrt(W ** 2 + np.outer(np.linalg.norm(Ainv, axis=1), gamma) ** 2)
        flat = int(np.argmax(rho))
        i, j = divmod(flat, rho.shape[1])
        if rho[i, j] <= f_param:
            return swaps
        perm[i], perm[k + j] = perm[k + j], perm[i]
        swaps += 1
        history.append(history[-1] + math.log(rho[i, j]))
        if swaps == guard:
            log.warning("strong RRQR: %d swaps (k=%d); continuing", swaps, k)


def strong_rrqr(F, k: int, f_param: float = 2.0, check_bounds: bool = True) -> RRQRResult:
    """Column-pivoted QR followed by determinant-increasing swaps.

    On return max|A_k^{-1} B_k| <= f_param and
    sigma_min(A_k) >= sigma_k(F) / sqrt(1 + f_param^2 k (n - k)).
    """
    F = _check_input(F, k, f_param)
    m, n = F.shape
    perm = sla.qr(F, mode="r", pivoting=True, check_finite=False)[1].astype(np.intp)
    history: list = []
    if k == n:
        swaps = 0  # every column is selected
    elif k == m:
        swaps = _swap_full_rank(F, perm, k, f_param, history)
    else:
        swaps = _swap_general(F, perm, k, f_param, history)
    A, B, C = _triangular_blocks(F, perm, k)
    W = sla.solve_triangular(A, B, check_finite=False) if B.size else np.zeros((k, 0))
    interp = float(np.max(np.abs(W))) if W.size else 0.0
    smin = float(sla.svdvals(A, check_finite=False)[-1])
    q1 = math.sqrt(1.0 + f_param ** 2 * k * (n - k))

    if interp > f_param * (1 + BOUND_SLACK):
        raise AssertionError(f"RRQR interpolation bound violated: {interp:.6g} > {f_param}")
    svd_checked = False
    if check_bounds and m * n <= SVD_CHECK_LIMIT:
        sk = float(sla.svdvals(F, check_finite=False)[k - 1])
        if smin < sk / q1 * (1 - BOUND_SLACK):
            raise AssertionError(
                f"RRQR singular value bound violated: {smin:.6g} < {sk:.6g}/{q1:.6g}")
        svd_checked = True
    if any(b < a for a, b in zip(history, history[1:])):
        raise AssertionError("RRQR swap phase did not increase |det A_k| monotonically")

    return RRQRResult(perm[:k].copy(), perm.copy(), A, B, C, float(f_param), smin, q1, swaps,
                      interp, history, svd_checked)


@dataclass(frozen=True, eq=False)
class ThinnedSystem:
    system: KansaSystem
    rows: np.ndarray
    Y_tilde: PointSet
    K_red: np.ndarray
    sigma_min: float
    sigma_max: float
    rrqr: RRQRResult


def thin(sys: KansaSystem, f_param: float = 2.0) -> ThinnedSystem:
    """Pick N of the M test points by strong RRQR on K^T."""
    N = len(sys.X)
    res = strong_rrqr(sys.K.T, N, f_param)
    rows = np.sort(res.selected)
    K_red = np.array(sys.K[rows])
    sv = sla.svdvals(K_red, check_finite=False)
    if sv[-1] < 1e-12 * sv[0]:
        raise ValueError("thinning produced singular square system")
    return ThinnedSystem(sys, rows, sys.Y.subset(rows), K_red, float(sv[-1]), float(sv[0]), res)


def solve_square(K: np.ndarray, f) -> SolveReport:
    """LU solve with partial pivoting; reports 1/sigma_N against the N envelope."""
    K = np.asarray(K, dtype=float)
    f = np.asarray(f, dtype=float)
    if f.shape != (K.shape[0],):
        raise ValueError(f"right-hand side has shape {f.shape}; expected ({K.shape[0]},)")
    t0 = time.perf_counter()
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            lu = sla.lu_factor(K, check_finite=False)
    except (sla.LinAlgError, ValueError) as exc:
        raise ValueError(f"singular thinned system: {exc}") from exc
    if np.any(np.diag(lu[0]) == 0):
        raise ValueError("singular thinned system")
    a = sla.lu_solve(lu, f, check_finite=False)
    wall = time.perf_counter() - t0
    sv = sla.svdvals(K, check_finite=False)
    res = float(np.linalg.norm(K @ a - f))
    n = K.shape[0]
    inv_norm = 1.0 / float(sv[-1])
    return SolveReport(a, res, float(sv[-1]), float(sv[0]), None, wall, "lu",
                       {"inverse_norm": inv_norm, "inverse_norm_over_N": inv_norm / n})


def solve_thinned(ts: ThinnedSystem, f_on_Ytilde, reference=None, rule=None) -> SolveReport:
    rep = solve_square(ts.K_red, f_on_Ytilde)
    rep.extras["swaps"] = ts.rrqr.swaps
    if reference is not None and rule is not None:
        rep.l2_error = l2_distance(reconstruct(ts.system, rep.coefficients), reference, rule)
    return rep


def kron_tile_check(K, kappa: int) -> float:
    """max_j |sigma_j(e_kappa (x) K) - sqrt(kappa) sigma_j(K)|."""
    K = np.asarray(K, dtype=float)
    if int(kappa) != kappa or kappa < 1:
        raise ValueError("kappa must be a positive integer")
    if kappa * K.size > 1_000_000:
        raise ValueError("tiled matrix would exceed 1e6 entries")
    tiled = np.kron(np.ones((int(kappa), 1)), K)
    s_big = sla.svdvals(tiled)
    s = sla.svdvals(K)
    return float(np.max(np.abs(s_big - math.sqrt(kappa) * s)))
