"""Oversampled Kansa collocation: K_jk = (L B_k)(y_j), solved by least squares."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .collocation import InterpolantRep, TrialBasis, make_basis
from .kernels import SpectralOperator, ZonalKernel
from .sphere_geom import PointSet

SVD_LIMIT = 800


@dataclass(frozen=True, eq=False)
class KansaSystem:
    X: PointSet
    Y: PointSet
    kernel: ZonalKernel
    op: SpectralOperator
    basis_mode: str
    basis: TrialBasis
    K: np.ndarray

    @property
    def kappa(self) -> float:
        return len(self.Y) / len(self.X)

    @property
    def shape(self) -> tuple[int, int]:
        return self.K.shape


@dataclass
class SolveReport:
    coefficients: np.ndarray
    residual_norm: float
    sigma_min: float
    sigma_max: float
    l2_error: float | None = None
    wall_time: float = 0.0
    method: str = ""
    extras: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {"residual_norm": self.residual_norm, "sigma_min": self.sigma_min,
               "sigma_max": self.sigma_max, "l2_error": self.l2_error,
               "wall_time": self.wall_time, "method": self.method,
               "coefficients": [float(v) for v in self.coefficients]}
        out.update(self.extras)
        return out


def assemble_kansa(X: PointSet, Y: PointSet, kernel: ZonalKernel, op: SpectralOperator,
                   basis_mode: str = "lagrange", basis: TrialBasis | None = None) -> KansaSystem:
    if len(Y) < len(X):
        raise ValueError(f"undersampled test set: M={len(Y)} < N={len(X)}")
    if X.d != Y.d or kernel.d != X.d or op.d != X.d:
        raise ValueError("points, kernel and operator must live on the same sphere")
    if basis is None:
        basis = make_basis(X, kernel, basis_mode)
    K = basis.values(Y.points, op)
    K.setflags(write=False)
    return KansaSystem(X, Y, kernel, op, basis.mode, basis, K)


def singular_values(K: np.ndarray, R: np.ndarray | None = None) -> tuple[np.ndarray, str]:
    """Singular values of K; from the triangular factor R when K is large."""
    if K.shape[1] <= SVD_LIMIT:
        return sla.svdvals(K, check_finite=False), "svd"
    if R is None:
        R = sla.qr(K, mode="r", check_finite=False)[0]
    return sla.svdvals(R, check_finite=False), "svd-of-R"


def least_squares_qr(K: np.ndarray, f) -> SolveReport:
    """argmin ||K a - f|| by Householder QR, with the singular-value range of K."""
    K = np.asarray(K, dtype=float)
    f = np.asarray(f, dtype=float)
    if f.shape != (K.shape[0],):
        raise ValueError(f"right-hand side has shape {f.shape}; expected ({K.shape[0]},)")
    t0 = time.perf_counter()
    Q, R = sla.qr(K, mode="economic", check_finite=False)
    sv, method = singular_values(K, R)
    if sv[-1] < 1e-12 * sv[0]:
        raise ValueError(f"rank-deficient Kansa matrix (sigma_min/sigma_max={sv[-1] / sv[0]:.3g})")
    a = sla.solve_triangular(R, Q.T @ f, check_finite=False)
    wall = time.perf_counter() - t0
    res = float(np.linalg.norm(K @ a - f))
    return SolveReport(a, res, float(sv[-1]), float(sv[0]), None, wall, f"qr+{method}")


def solve_least_squares(sys: KansaSystem, f_on_Y, reference=None, rule=None) -> SolveReport:
    """Least-squares Kansa solve.

    ``reference`` (a callable u) and ``rule`` give an L2 error of the reconstruction.
    """
    rep = least_squares_qr(sys.K, f_on_Y)
    if reference is not None and rule is not None:
        rep.l2_error = l2_distance(reconstruct(sys, rep.coefficients), reference, rule)
    return rep


def l2_distance(g, u, rule) -> float:
    diff = np.asarray(g(rule.nodes)) - np.asarray(u(rule.nodes))
    return math.sqrt(float(np.dot(rule.weights, diff * diff)))


def matrix_diagnostics(K: np.ndarray, kappa: float) -> dict:
    """sigma_N, ||(K^T K)^-1|| = 1/sigma_N^2, its product with kappa, and sigma_N/sqrt(kappa)."""
    sv, method = singular_values(np.asarray(K, dtype=float))
    smin = float(sv[-1])
    if smin < 1e-12 * sv[0]:
        raise ValueError(f"rank-deficient Kansa matrix (sigma_min/sigma_max={smin / sv[0]:.3g})")
    inv = 1.0 / smin ** 2
    return {"sigma_min": smin, "gram_inverse_norm": inv, "bound_product": inv * kappa,
            "sigma_over_sqrt_kappa": smin / math.sqrt(kappa), "method": method}


def gram_diagnostics(sys: KansaSystem) -> dict:
    return matrix_diagnostics(sys.K, sys.kappa)


def reconstruct(sys: KansaSystem, a) -> InterpolantRep:
    """u* = sum_j a_j B_j as an evaluable trial function."""
    a = np.asarray(a, dtype=float)
    if a.shape != (len(sys.X),):
        raise ValueError(f"coefficient vector has shape {a.shape}; expected ({len(sys.X)},)")
    return sys.basis.combination(a)
