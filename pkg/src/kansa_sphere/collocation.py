"""Kernel interpolation with polynomial side conditions and trial-space bases.

A trial function is g = sum_xi c_xi Z(. xi) + sum_{l<L} b_lm Y_lm with the
side conditions P^T c = 0, where P holds the degree < L harmonics at X. A
basis of the trial space is stored as a coefficient matrix ``coef`` of shape
(N + n_poly, N) whose columns are the stacked (c, b) of each basis function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .kernels import SpectralOperator, ZonalKernel, apply_operator, eval_zonal, operator_values
from .spectral import HarmonicExpansion, degree_of_index, harmonics_matrix, lambda_d, \
    poly_space_dim, sobolev_norm
from .sphere_geom import PointSet, QuadratureRule, quadrature_rule

MAX_GRAM_DEGREE = 240


def inner_products(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.clip(A @ B.T, -1.0, 1.0)


def kernel_matrix(kernel: ZonalKernel, points: np.ndarray, centers: np.ndarray,
                  op: SpectralOperator | None = None, use_closed_form: bool = True) -> np.ndarray:
    """Matrix of Z(x_i . xi_j), or of the operator-applied kernel when ``op`` is given."""
    t = inner_products(points, centers)
    if op is None:
        return np.asarray(eval_zonal(kernel, t, use_closed_form=use_closed_form))
    if not use_closed_form:
        return np.asarray(eval_zonal(apply_operator(kernel, op), t, use_closed_form=False))
    return operator_values(kernel, op, t)


def poly_matrix(kernel: ZonalKernel, points: np.ndarray, op: SpectralOperator | None = None) -> np.ndarray:
    """Harmonics of degree < kernel.order at ``points`` (times m(l) under ``op``)."""
    P = harmonics_matrix(kernel.d, kernel.order - 1, points)
    if op is not None and P.shape[1]:
        P = P * op(degree_of_index(kernel.d, kernel.order - 1))
    return P


def assemble_saddle(X: PointSet, kernel: ZonalKernel) -> tuple[np.ndarray, np.ndarray]:
    """Collocation matrix A and polynomial block P for the saddle system."""
    pts = X.points
    A = kernel_matrix(kernel, pts, pts)
    A = 0.5 * (A + A.T)
    P = poly_matrix(kernel, pts)
    if P.shape[1]:
        if P.shape[0] < P.shape[1]:
            raise ValueError("non-unisolvent centers: fewer points than polynomial dimension")
        R = sla.qr(P, mode="r", pivoting=True)[0]
        diag = np.abs(np.diag(R))
        if diag.min() <= 1e-10 * np.linalg.norm(P, 2):
            raise ValueError("non-unisolvent centers: polynomial block is rank deficient")
    return A, P


def saddle_matrix(A: np.ndarray, P: np.ndarray) -> np.ndarray:
    n, p = P.shape
    S = np.zeros((n + p, n + p))
    S[:n, :n] = A
    S[:n, n:] = P
    S[n:, :n] = P.T
    return S


def _saddle_solve(S: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        return sla.solve(S, rhs, assume_a="sym", check_finite=False)
    except (sla.LinAlgError, np.linalg.LinAlgError) as exc:
        raise ValueError(f"singular saddle system: {exc}") from exc


@dataclass(frozen=True, eq=False)
class InterpolantRep:
    """g = sum c_xi Z(. xi) + sum b_lm Y_lm over the centers X."""

    X: PointSet
    kernel: ZonalKernel
    c: np.ndarray
    b: np.ndarray

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(points)
        return kernel_matrix(self.kernel, pts, self.X.points) @ self.c + \
            poly_matrix(self.kernel, pts) @ self.b

    def apply(self, op: SpectralOperator, points, use_closed_form: bool = True) -> np.ndarray:
        pts = np.atleast_2d(points)
        return kernel_matrix(self.kernel, pts, self.X.points, op, use_closed_form) @ self.c + \
            poly_matrix(self.kernel, pts, op) @ self.b

    def side_condition_residual(self) -> float:
        P = poly_matrix(self.kernel, self.X.points)
        return float(np.max(np.abs(P.T @ self.c))) if P.shape[1] else 0.0

    def expansion(self, max_degree: int) -> HarmonicExpansion:
        """Exact harmonic coefficients up to ``max_degree`` (Funk-Hecke)."""
        return trial_expansion(self.X, self.kernel, self.c, self.b, max_degree)


def trial_expansion(X: PointSet, kernel: ZonalKernel, c: np.ndarray, b: np.ndarray,
                    max_degree: int) -> HarmonicExpansion:
    d = kernel.d
    Yx = harmonics_matrix(d, max_degree, X.points)
    deg = degree_of_index(d, max_degree)
    coeffs = kernel.coeff(deg) * (Yx.T @ c)
    nb = min(b.size, coeffs.size)
    coeffs[:nb] += b[:nb]
    return HarmonicExpansion(d, max_degree, coeffs)


def interpolate(X: PointSet, kernel: ZonalKernel, values) -> InterpolantRep:
    """Solve [A P; P^T 0][c; b] = [values; 0]."""
    values = np.asarray(values, dtype=float)
    A, P = assemble_saddle(X, kernel)
    n, p = P.shape
    sol = _saddle_solve(saddle_matrix(A, P), np.concatenate([values, np.zeros(p)]))
    return InterpolantRep(X, kernel, sol[:n], sol[n:])


@dataclass(frozen=True, eq=False)
class TrialBasis:
    """A basis of the trial space S_X(Z), as a (N + n_poly, N) coefficient matrix."""

    X: PointSet
    kernel: ZonalKernel
    coef: np.ndarray
    mode: str = "lagrange"

    @property
    def n(self) -> int:
        return len(self.X)

    @property
    def C(self) -> np.ndarray:
        return self.coef[: self.n]

    @property
    def B(self) -> np.ndarray:
        return self.coef[self.n:]

    def design(self, points, op: SpectralOperator | None = None,
               use_closed_form: bool = True) -> np.ndarray:
        """[kernel columns | polynomial columns] at ``points`` (operator applied if given)."""
        pts = np.atleast_2d(points)
        return np.hstack([kernel_matrix(self.kernel, pts, self.X.points, op, use_closed_form),
                          poly_matrix(self.kernel, pts, op)])

    def values(self, points, op: SpectralOperator | None = None) -> np.ndarray:
        """Basis functions (or their images under ``op``) at points, shape (n_points, N)."""
        return self.design(points, op) @ self.coef

    def combination(self, a) -> InterpolantRep:
        v = self.coef @ np.asarray(a, dtype=float)
        return InterpolantRep(self.X, self.kernel, v[: self.n], v[self.n:])

    def scaled(self, factor: float) -> "TrialBasis":
        return TrialBasis(self.X, self.kernel, self.coef * factor, self.mode)


LagrangeBasis = TrialBasis


def lagrange_basis(X: PointSet, kernel: ZonalKernel) -> TrialBasis:
    """Cardinal functions chi_j(x_k) = delta_jk; one factorisation, N right-hand sides."""
    A, P = assemble_saddle(X, kernel)
    n, p = P.shape
    rhs = np.zeros((n + p, n))
    rhs[:n] = np.eye(n)
    return TrialBasis(X, kernel, _saddle_solve(saddle_matrix(A, P), rhs), "lagrange")


def standard_basis(X: PointSet, kernel: ZonalKernel) -> TrialBasis:
    """Kernel translates; for conditionally positive kernels, null-space combinations plus harmonics."""
    n = len(X)
    P = poly_matrix(kernel, X.points)
    p = P.shape[1]
    if p == 0:
        return TrialBasis(X, kernel, np.eye(n), "standard")
    assemble_saddle(X, kernel)  # unisolvency check
    Z = sla.null_space(P.T)
    coef = np.zeros((n + p, n))
    coef[:n, : n - p] = Z
    coef[n:, n - p:] = np.eye(p)
    return TrialBasis(X, kernel, coef, "standard")


def make_basis(X: PointSet, kernel: ZonalKernel, basis_mode: str = "lagrange") -> TrialBasis:
    if basis_mode == "lagrange":
        return lagrange_basis(X, kernel)
    if basis_mode == "standard":
        return standard_basis(X, kernel)
    raise ValueError(f"unknown basis mode {basis_mode!r}")


def eval_trial(g, op: SpectralOperator | None, x, use_closed_form: bool = True):
    """(L g)(x) for an InterpolantRep ``g``; plain evaluation when ``op`` is None."""
    x = np.asarray(x, dtype=float)
    v = g(x) if op is None else g.apply(op, x, use_closed_form)
    return float(v[0]) if x.ndim == 1 else v


# -- quadrature Gram machinery -------------------------------------------------

def gram_degree(X: PointSet, factor: float = 2.0) -> int:
    """Quadrature degree resolving the band proxy pi/q of the point set."""
    return int(min(MAX_GRAM_DEGREE, max(8, math.ceil(factor * math.pi / X.q))))


def gram_matrix(values_at_nodes: np.ndarray, rule: QuadratureRule) -> np.ndarray:
    G = values_at_nodes.T @ (rule.weights[:, None] * values_at_nodes)
    return 0.5 * (G + G.T)


def basis_gram(basis: TrialBasis, rule: QuadratureRule, op: SpectralOperator | None = None,
               chunk: int = 4096) -> np.ndarray:
    """L2 Gram matrix of the basis (or of its image under ``op``), nodes in chunks."""
    G = np.zeros((basis.n, basis.n))
    for i in range(0, len(rule), chunk):
        V = basis.values(rule.nodes[i:i + chunk], op)
        G += V.T @ (rule.weights[i:i + chunk, None] * V)
    return 0.5 * (G + G.T)


@dataclass(frozen=True)
class StabilityRatio:
    value: float
    quadrature_degree: int
    lambda_min: float


def _lambda_min(G: np.ndarray) -> float:
    n = G.shape[0]
    lo = float(sla.eigvalsh(G, subset_by_index=[0, 0])[0])
    hi = float(sla.eigvalsh(G, subset_by_index=[n - 1, n - 1])[0])
    if not lo > n * np.finfo(float).eps * hi:
        raise ValueError(f"Gram matrix is not numerically positive (lambda_min={lo:.3g})")
    return lo


def stability_ratio_from_values(values_at_nodes: np.ndarray, rule: QuadratureRule) -> StabilityRatio:
    """max ||a|| / ||sum a_k B_k||_L2 = 1/sqrt(lambda_min of the L2 Gram matrix)."""
    lam = _lambda_min(gram_matrix(values_at_nodes, rule))
    return StabilityRatio(1.0 / math.sqrt(lam), rule.design_degree, lam)


def stability_ratio(X: PointSet, kernel: ZonalKernel, basis_mode: str = "lagrange",
                    rule: QuadratureRule | None = None, basis: TrialBasis | None = None) -> StabilityRatio:
    if basis is None:
        basis = make_basis(X, kernel, basis_mode)
    if rule is None:
        rule = quadrature_rule(X.d, gram_degree(X))
    lam = _lambda_min(basis_gram(basis, rule))
    return StabilityRatio(1.0 / math.sqrt(lam), rule.design_degree, lam)


@dataclass(frozen=True)
class RieszReport:
    c_L_hat: float
    C_R_hat: float
    trials: int
    gram_low: float
    gram_high: float
    quadrature_degree: int


def riesz_check(basis: TrialBasis, trials: int = 200, rule: QuadratureRule | None = None,
                seed: int = 0) -> RieszReport:
    """Empirical frame bounds of ||sum a_j B_j||_L2 / (q^{d/2} ||a||) over random a.

    ``gram_low``/``gram_high`` are the exact extremes from the Gram eigenvalues.
    """
    X = basis.X
    if rule is None:
        rule = quadrature_rule(X.d, gram_degree(X))
    G = basis_gram(basis, rule)
    scale = X.q ** (X.d / 2.0)
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((basis.n, trials))
    r = np.sqrt(np.einsum("ij,ij->j", a, G @ a)) / np.linalg.norm(a, axis=0) / scale
    ev = sla.eigvalsh(G)
    return RieszReport(float(r.min()), float(r.max()), trials,
                       math.sqrt(max(ev[0], 0.0)) / scale, math.sqrt(ev[-1]) / scale,
                       rule.design_degree)


# -- Bernstein inequality ---------------------------------------------------------

@dataclass(frozen=True)
class BernsteinReport:
    constant: float
    gamma: float
    epsilon: float
    q: float
    truncation_degree: int
    tail_fraction: float
    trials: int


def bernstein_ratio(e: HarmonicExpansion, gamma: float, eps: float, q: float) -> float:
    """||w||_{H^{gamma+eps}} q^gamma / ||w||_{H^eps}."""
    return sobolev_norm(e, gamma + eps) * q ** gamma / sobolev_norm(e, eps)


def bernstein_check(X: PointSet, kernel: ZonalKernel, op: SpectralOperator | None = None,
                    gamma: float = 1.0, eps: float = 2.0, trials: int = 50,
                    max_degree: int | None = None, seed: int = 0) -> BernsteinReport:
    """Empirical Bernstein constant over random trial-space elements.

    Sobolev norms use exact harmonic coefficients truncated at ``max_degree``
    (default: 3 pi / q, capped at 120).
    """
    tau = kernel.smoothness - (op.order / 2.0 if op is not None else 0.0)
    if gamma <= 0 or eps <= 0 or not gamma + eps < 2.0 * tau - X.d / 2.0:
        raise ValueError(
            f"inadmissible (gamma, eps)=({gamma}, {eps}): need gamma+eps < {2 * tau - X.d / 2:g}")
    q = X.q
    L = max_degree if max_degree is not None else int(min(120, math.ceil(3.0 * math.pi / q)))
    P = poly_matrix(kernel, X.points)
    p = P.shape[1]
    rng = np.random.default_rng(seed)
    Z = sla.null_space(P.T) if p else np.eye(len(X))
    worst, tails = 0.0, []
    deg = degree_of_index(X.d, L)
    for _ in range(trials):
        c = Z @ rng.standard_normal(Z.shape[1])
        b = rng.standard_normal(p)
        e = trial_expansion(X, kernel, c, b, L)
        if op is not None:
            e = e.scaled_by_degree(op)
        worst = max(worst, bernstein_ratio(e, gamma, eps, q))
        w = (deg + lambda_d(X.d)) ** (2 * (gamma + eps)) * e.coeffs ** 2
        tails.append(float(w[deg > 0.9 * L].sum() / w.sum()))
    return BernsteinReport(worst, gamma, eps, q, L, max(tails), trials)


def polynomial_dim(kernel: ZonalKernel) -> int:
    return poly_space_dim(kernel.d, kernel.order - 1)
