"""Oversampled test sets and empirical norming / Marcinkiewicz-Zygmund constants.

For a test set Y with M points and the operator-applied trial space
W = span{L chi_k}, the norming ratio of w in W is

    r(w) = ||w||_L2 * sqrt(M) / ||w|_Y||_l2,

and the norming constant is its supremum over W.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .collocation import TrialBasis, basis_gram, gram_degree, make_basis, poly_matrix
from .kernels import SpectralOperator, ZonalKernel
from .spectral import harmonics_matrix
from .sphere_geom import (PointSet, QuadratureRule, fibonacci_points, greedy_net,
                          quadrature_rule, surface_area)

log = logging.getLogger(__name__)

DENSE_LIMIT = 150
POWER_ITERATIONS = 200


def build_norming_set(X: PointSet, sigma: float = 2.0, candidate_density: int = 25,
                      candidates: PointSet | None = None, seed_index: int = 0) -> PointSet:
    """Greedy epsilon-net with epsilon = h_X / sigma.

    The default candidate pool is a Fibonacci set of about
    ``candidate_density * sigma^d * N`` points. An explicit ``candidates`` set
    is used as given (no density check).
    """
    if sigma < 1:
        raise ValueError("sigma must be >= 1")
    eps = X.h / sigma
    if candidates is None:
        n_cand = int(math.ceil(candidate_density * sigma ** X.d * len(X)))
        candidates = fibonacci_points(max(n_cand, 2 * len(X)), X.d)
        return greedy_net(candidates, eps, seed_index)
    return greedy_net(candidates, eps, seed_index, check_density=False)


@dataclass(frozen=True, eq=False)
class NormingReport:
    Y: PointSet
    kappa: float
    C_N_hat: float
    trials: int
    worst_witness: np.ndarray
    sampled_max: float
    constant_witness: float | None
    method: str

    def as_dict(self) -> dict:
        return {
            "M": len(self.Y), "kappa": self.kappa, "C_N_hat": self.C_N_hat,
            "sampled_max": self.sampled_max, "constant_witness": self.constant_witness,
            "trials": self.trials, "method": self.method,
            "worst_witness": [float(v) for v in self.worst_witness],
        }


def _ratios(a: np.ndarray, G2: np.ndarray, GY: np.ndarray) -> np.ndarray:
    num = np.einsum("ij,ij->j", a, G2 @ a)
    den = np.einsum("ij,ij->j", a, GY @ a)
    if np.any(den <= 0):
        raise ValueError("not a norming set witness: trial function vanishes on Y")
    return np.sqrt(num / den)


def constant_witness_ratio(Y: PointSet, kernel: ZonalKernel, op: SpectralOperator | None,
                           rule: QuadratureRule) -> float | None:
    """r(w) for w = L 1, which lies in W whenever the kernel carries constants."""
    if kernel.order < 1:
        return None
    # the constant trial function is the degree-0 harmonic with zero kernel part
    y00 = float(harmonics_matrix(Y.d, 0, Y.points[:1])[0, 0])
    b = np.zeros(poly_matrix(kernel, Y.points[:1]).shape[1])
    b[0] = 1.0 / y00
    scale = float(op(0)) if op is not None else 1.0
    on_nodes = poly_matrix(kernel, rule.nodes, op) @ b
    on_y = poly_matrix(kernel, Y.points, op) @ b
    l2 = math.sqrt(float(np.dot(rule.weights, on_nodes ** 2)))
    if scale == 0.0 or not np.any(on_y):
        return None
    return l2 * math.sqrt(len(Y)) / float(np.linalg.norm(on_y))


def norming_check(Y: PointSet, X: PointSet, kernel: ZonalKernel, op: SpectralOperator | None = None,
                  trials: int = 200, rule: QuadratureRule | None = None,
                  basis: TrialBasis | None = None, seed: int = 0, method: str = "auto") -> NormingReport:
    """Sampled and maximised norming ratio over the operator-applied trial space.

    The maximum of r is the square root of the top generalized eigenvalue of
    (L2 Gram, discrete Gram / M). ``method`` is ``dense``, ``power`` or ``auto``
    (dense up to 150 centers).
    """
    if basis is None:
        basis = make_basis(X, kernel, "lagrange")
    if rule is None:
        rule = quadrature_rule(X.d, gram_degree(X))
    M = len(Y)
    G2 = basis_gram(basis, rule, op)
    KY = basis.values(Y.points, op)
    GY = KY.T @ KY / M
    GY = 0.5 * (GY + GY.T)

    rng = np.random.default_rng(seed)
    a = rng.standard_normal((basis.n, trials))
    a /= np.linalg.norm(a, axis=0)
    r = _ratios(a, G2, GY)
    best = int(np.argmax(r))
    sampled = float(r[best])
    witness = a[:, best]

    if method == "auto":
        method = "dense" if basis.n <= DENSE_LIMIT else "power"
    try:
        cho = sla.cho_factor(GY, check_finite=False)
    except sla.LinAlgError as exc:
        raise ValueError("not a norming set witness: discrete Gram matrix is singular") from exc
    if method == "dense":
        w, V = sla.eigh(G2, GY, subset_by_index=[basis.n - 1, basis.n - 1])
        top, v = float(w[0]), V[:, 0]
    elif method == "power":
        v = witness.copy()
        top = 0.0
        for _ in range(POWER_ITERATIONS):
            v = sla.cho_solve(cho, G2 @ v, check_finite=False)
            v /= np.linalg.norm(v)
            top = float(v @ G2 @ v) / float(v @ GY @ v)
    else:
        raise ValueError(f"unknown method {method!r}")
    C = math.sqrt(max(top, 0.0))
    if C >= sampled:
        witness = v / np.linalg.norm(v)
    else:
        C = sampled

    return NormingReport(Y, M / basis.n, C, trials, witness, sampled,
                         constant_witness_ratio(Y, kernel, op, rule), method)


def mz_check(Y: PointSet, basis_values: Callable[[np.ndarray], np.ndarray], rule: QuadratureRule,
             trials: int = 200, seed: int = 0) -> tuple[float, float]:
    """Min / max over random w of ((1/M) sum_Y |w|^2) / (||w||^2_L2 / omega_d).

    ``basis_values(points)`` returns the spanning functions at points as an
    (n_points, n_basis) array.
    """
    VY = np.asarray(basis_values(Y.points), dtype=float)
    VQ = np.asarray(basis_values(rule.nodes), dtype=float)
    GY = VY.T @ VY / len(Y)
    GQ = VQ.T @ (rule.weights[:, None] * VQ) / surface_area(Y.d)
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((VY.shape[1], trials))
    num = np.einsum("ij,ij->j", a, GY @ a)
    den = np.einsum("ij,ij->j", a, GQ @ a)
    r = num / den
    return float(r.min()), float(r.max())
