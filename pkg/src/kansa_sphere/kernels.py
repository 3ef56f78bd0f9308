"""Zonal kernels on S^d and elliptic operators that are diagonal in harmonics.

A zonal kernel is stored through its Funk-Hecke coefficients z_l:

    Z(t) = sum_l z_l * sum_m Y_lm(x) Y_lm(y),   t = x.y,

so ``z_l`` is the eigenvalue of the integral operator with kernel Z on the
degree-l harmonics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.special import eval_chebyt, eval_legendre, gammaln

from .spectral import harmonic_dim, lambda_d, zonal_series
from .sphere_geom import surface_area

DEFAULT_TOL = 1e-8
DEFAULT_LMAX_CAP = 4000


@dataclass(frozen=True, eq=False)
class ZonalKernel:
    """Rotation-invariant kernel given by spectral coefficients.

    ``high_coeff`` gives z_l for l >= ``order`` (vectorised over l); the first
    ``order`` coefficients are ``low_coeffs``. ``smoothness`` is tau with
    z_l ~ l^(-2 tau); it is ``inf`` for finitely many nonzero coefficients.
    """

    d: int
    order: int
    high_coeff: Callable[[np.ndarray], np.ndarray]
    low_coeffs: np.ndarray
    smoothness: float
    name: str = "zonal"
    closed_form: Callable[[np.ndarray], np.ndarray] | None = None
    derivatives: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]] | None = None
    laplacian: Callable[[np.ndarray], np.ndarray] | None = None
    max_degree: int | None = None
    _lmax_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        low = np.asarray(self.low_coeffs, dtype=float).reshape(-1)
        if low.size != self.order:
            raise ValueError(f"need {self.order} low coefficients, got {low.size}")
        object.__setattr__(self, "low_coeffs", low)

    def coeff(self, ell) -> np.ndarray:
        ell = np.asarray(ell)
        li = np.atleast_1d(ell).astype(int)
        out = np.zeros(li.shape)
        lo = li < self.order
        out[lo] = self.low_coeffs[li[lo]]
        hi = ~lo
        if self.max_degree is not None:
            hi &= li <= self.max_degree
        if np.any(hi):
            out[hi] = self.high_coeff(li[hi])
        return out if ell.ndim else float(out[0])

    def coefficients(self, lmax: int) -> np.ndarray:
        return self.coeff(np.arange(lmax + 1))


@dataclass(frozen=True, eq=False)
class SpectralOperator:
    """Elliptic operator acting on degree-l harmonics as multiplication by m(l).

    When ``shift`` and ``scale`` are set, m(l) = shift + scale * l(l+d-1), i.e.
    the operator is ``shift - scale * Delta`` and has a closed form on zonal
    kernels with analytic derivatives.
    """

    d: int
    multiplier: Callable[[np.ndarray], np.ndarray]
    order: int = 2
    shift: float | None = None
    scale: float | None = None
    name: str = "multiplier"
    c_L: float = field(init=False)
    gamma1: float = field(init=False)
    gamma2: float = field(init=False)

    def __post_init__(self):
        ell = np.arange(10_001, dtype=float)
        m = np.asarray(self.multiplier(ell), dtype=float)
        if np.any(~np.isfinite(m)) or np.any(m <= 0):
            raise ValueError("multiplier must be finite and positive")
        far = np.array([1e6, 2e6])
        m_far = np.asarray(self.multiplier(far), dtype=float)
        lam = lambda_d(self.d)
        w = (ell + lam) ** self.order
        # (l + lambda_d) vanishes at l = 0 on S^1; that degree is dropped there
        ok = w > 0
        w_far = (far + lam) ** self.order
        r = m[ok] / w[ok]
        r_far = m_far / w_far
        if not np.all(np.isfinite(r_far)) or r_far[1] > 2 * r_far[0] + 1 or r_far[0] <= 0:
            raise ValueError("multiplier does not grow like (l + lambda_d)^order")
        object.__setattr__(self, "c_L", float(min(m.min(), m_far.min())))
        object.__setattr__(self, "gamma1", float(max(r.max(), r_far.max())))
        object.__setattr__(self, "gamma2", float(max((1.0 / r).max(), (1.0 / r_far).max())))

    def __call__(self, ell):
        return self.multiplier(np.asarray(ell, dtype=float))

    @property
    def has_closed_form(self) -> bool:
        return self.shift is not None and self.scale is not None


def helmholtz_operator(c: float, d: int = 2) -> SpectralOperator:
    """The operator c - Delta, m(l) = c + l(l+d-1)."""
    if c <= 0:
        raise ValueError("Helmholtz shift c must be positive")
    return SpectralOperator(d, lambda ell: c + ell * (ell + d - 1), 2, float(c), 1.0,
                            name=f"helmholtz(c={c:g})")


def identity_operator(d: int = 2) -> SpectralOperator:
    return SpectralOperator(d, lambda ell: np.ones_like(np.asarray(ell, dtype=float)), 0,
                            1.0, 0.0, name="identity")


def multiplier_operator(m: Callable, d: int = 2, order: int = 2) -> SpectralOperator:
    return SpectralOperator(d, m, order, name="multiplier")


# -- thin-plate splines -----------------------------------------------------

def tps_constant(s: int, d: int) -> float:
    return 2.0 ** (s + d) * math.pi ** (d / 2) * math.gamma(s + 1) * math.gamma(s + d / 2)


def funk_hecke_log_weight(s: int, d: int, ell: int) -> float:
    """z_l of (1-t)^s log(1-t) on S^d by adaptive quadrature with a log weight."""
    if d == 2:
        val, _ = quad(lambda t: eval_legendre(ell, t), -1.0, 1.0, weight="alg-logb",
                      wvar=(0.0, float(s)), epsabs=1e-14, epsrel=1e-13, limit=400)
        return 2.0 * math.pi * val
    if d == 1:
        val, _ = quad(lambda t: eval_chebyt(ell, t), -1.0, 1.0, weight="alg-logb",
                      wvar=(-0.5, s - 0.5), epsabs=1e-14, epsrel=1e-13, limit=400)
        return 2.0 * val
    raise ValueError(f"unsupported d={d}")


def tps_kernel(s: int, d: int = 2) -> ZonalKernel:
    """Restricted thin-plate spline (-1)^(s+1) (1-t)^s log(1-t), s >= 2 integer."""
    if int(s) != s or s < 2:
        raise ValueError("thin-plate spline needs integer s >= 2")
    s = int(s)
    sign = (-1.0) ** (s + 1)
    C = tps_constant(s, d)

    def high(ell):
        ell = np.asarray(ell, dtype=float)
        return C * np.exp(gammaln(ell - s) - gammaln(ell + s + d))

    def f(t):
        t = np.asarray(t, dtype=float)
        u = np.maximum(1.0 - t, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = sign * u ** s * np.log(u)
        return np.where(u > 0, v, 0.0)

    def derivs(t):
        t = np.asarray(t, dtype=float)
        u = np.maximum(1.0 - t, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            lu = np.log(u)
            d1 = -sign * u ** (s - 1) * (s * lu + 1.0)
            d2 = sign * u ** (s - 2) * (s * (s - 1) * lu + 2 * s - 1)
        return np.where(u > 0, d1, 0.0), np.where(u > 0, d2, np.inf)

    def lap(t):
        # (1-t^2) f'' - d t f', with the u^(s-1) factor pulled out so t = 1 is finite
        t = np.asarray(t, dtype=float)
        u = np.maximum(1.0 - t, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            lu = np.log(u)
            v = sign * u ** (s - 1) * ((1.0 + t) * (s * (s - 1) * lu + 2 * s - 1)
                                       + d * t * (s * lu + 1.0))
        return np.where(u > 0, v, 0.0)

    low = np.array([sign * funk_hecke_log_weight(s, d, ell) for ell in range(s + 1)])
    return ZonalKernel(d, s + 1, high, low, s + d / 2.0, name=f"tps(s={s})",
                       closed_form=f, derivatives=derivs, laplacian=lap)


def g_beta_kernel(beta: float, d: int = 2) -> ZonalKernel:
    """Fundamental solution of L^beta, z_l = (l + lambda_d)^(-beta)."""
    return psi_beta_kernel(beta, d, None)


def psi_beta_kernel(beta: float, d: int = 2, psi_hat: Sequence[float] | None = None) -> ZonalKernel:
    """z_l = (l + lambda_d)^(-beta) (1 + psi_hat(l)); psi_hat is zero past its length."""
    if beta <= d:
        raise ValueError(f"beta={beta} must exceed d={d}")
    if d != 2:
        raise ValueError("G_beta kernels need lambda_d > 0; only d = 2 is supported")
    lam = lambda_d(d)
    ph = np.zeros(0) if psi_hat is None else np.asarray(psi_hat, dtype=float)
    if np.any(1.0 + ph <= 0):
        raise ValueError("need 1 + psi_hat(l) > 0 for all l")

    def high(ell):
        ell = np.asarray(ell)
        out = (ell + lam) ** (-float(beta))
        if ph.size:
            li = ell.astype(int)
            inside = li < ph.size
            out = out * np.where(inside, 1.0 + ph[np.minimum(li, ph.size - 1)], 1.0)
        return out

    name = f"g_beta({beta:g})" if not ph.size else f"psi_beta({beta:g})"
    return ZonalKernel(d, 0, high, np.zeros(0), beta / 2.0, name=name)


def table_kernel(d: int, coeffs: Sequence[float], order: int = 0, **kw) -> ZonalKernel:
    """Kernel with finitely many nonzero coefficients (degrees beyond the table vanish)."""
    c = np.asarray(coeffs, dtype=float)
    L = c.size - 1
    return ZonalKernel(d, order, lambda ell: c[np.asarray(ell, dtype=int)], c[:order],
                       math.inf, max_degree=L, **kw)


def kernel_from_config(cfg: dict, d: int = 2) -> ZonalKernel:
    kind = cfg.get("kind", "tps")
    if kind == "tps":
        return tps_kernel(int(cfg.get("s", 2)), d)
    if kind == "g_beta":
        return g_beta_kernel(float(cfg["beta"]), d)
    if kind == "psi_beta":
        return psi_beta_kernel(float(cfg["beta"]), d, cfg.get("psi_hat"))
    raise ValueError(f"unknown kernel kind {kind!r}")


# -- evaluation ---------------------------------------------------------------

def _term_bounds(k: ZonalKernel, lmax: int) -> np.ndarray:
    """|z_l| * sum_m Y_lm(x)^2, the sup over t of the l-th series term."""
    ell = np.arange(lmax + 1)
    z = np.abs(k.coefficients(lmax))
    dims = np.array([harmonic_dim(k.d, int(l)) for l in ell], dtype=float) if k.d != 2 \
        else 2.0 * ell + 1.0
    return z * dims / surface_area(k.d)


def series_degree(k: ZonalKernel, tol: float = DEFAULT_TOL, lmax_cap: int = DEFAULT_LMAX_CAP) -> int:
    """Smallest truncation degree whose tail bound is below ``tol``."""
    key = (tol, lmax_cap)
    if key in k._lmax_cache:
        return k._lmax_cache[key]
    if k.max_degree is not None and k.max_degree <= lmax_cap:
        k._lmax_cache[key] = k.max_degree
        return k.max_degree
    a = _term_bounds(k, lmax_cap)
    p = 2.0 * k.smoothness - k.d + 1.0
    if p <= 1.0:
        raise ValueError(f"kernel series is not absolutely summable (tau={k.smoothness})")
    ell = np.arange(lmax_cap + 1, dtype=float)
    half = ell >= lmax_cap / 2
    A = float(np.max(a[half] * ell[half] ** p))
    beyond = A * lmax_cap ** (1.0 - p) / (p - 1.0)
    if beyond >= tol:
        raise ValueError(
            f"series tail bound {beyond:.3g} at cap l={lmax_cap} does not reach tol={tol:.3g}")
    # tail[L] = sum_{l > L} a_l + bound beyond the cap
    tail = np.concatenate([np.cumsum(a[::-1])[::-1][1:], [0.0]]) + beyond
    L = int(np.argmax(tail < tol))
    k._lmax_cache[key] = L
    return L


def eval_zonal(k: ZonalKernel, t, tol: float = DEFAULT_TOL, lmax_cap: int = DEFAULT_LMAX_CAP,
               use_closed_form: bool = True):
    """Kernel value at t = x.y; closed form when available, else truncated series."""
    t = np.asarray(t, dtype=float)
    if use_closed_form and k.closed_form is not None:
        out = np.asarray(k.closed_form(t), dtype=float)
    else:
        L = series_degree(k, tol, lmax_cap)
        out = zonal_series(k.d, k.coefficients(L), t)
    return out if out.ndim else float(out)


def apply_operator(k: ZonalKernel, op: SpectralOperator) -> ZonalKernel:
    """Kernel with coefficients m(l) z_l (operator applied in one variable)."""
    if op.d != k.d:
        raise ValueError("operator and kernel live on different spheres")
    tau = k.smoothness - op.order / 2.0
    if not tau > k.d / 2.0:
        raise ValueError(
            f"operator of order {op.order} on kernel with smoothness {k.smoothness} "
            "gives a non-summable series")
    high = k.high_coeff
    return ZonalKernel(
        k.d, k.order, lambda ell: op(ell) * high(ell),
        k.low_coeffs * op(np.arange(k.order)), tau,
        name=f"{op.name}[{k.name}]", max_degree=k.max_degree)


def laplacian_closed_form(k: ZonalKernel, t):
    """Delta_x Z(x.y) = (1-t^2) Z''(t) - d t Z'(t) from analytic derivatives."""
    if k.laplacian is not None:
        return k.laplacian(t)
    if k.derivatives is None:
        raise ValueError(f"kernel {k.name} has no closed form with derivatives")
    t = np.asarray(t, dtype=float)
    d1, d2 = k.derivatives(t)
    return (1.0 - t * t) * d2 - k.d * t * d1


def operator_values(k: ZonalKernel, op: SpectralOperator, t, tol: float = DEFAULT_TOL,
                    lmax_cap: int = DEFAULT_LMAX_CAP) -> np.ndarray:
    """Values of the operator-applied kernel, closed-form path when one exists."""
    t = np.asarray(t, dtype=float)
    if op.has_closed_form and k.closed_form is not None and (
            op.scale == 0.0 or k.laplacian is not None or k.derivatives is not None):
        out = op.shift * np.asarray(k.closed_form(t), dtype=float)
        if op.scale != 0.0:
            out = out - op.scale * laplacian_closed_form(k, t)
        return out
    return np.asarray(eval_zonal(apply_operator(k, op), t, tol, lmax_cap, use_closed_form=False))
