"""Real spherical harmonics, Gegenbauer polynomials and Sobolev norms on S^1, S^2.

Harmonic ordering within degree l (d = 2): index 0 is the zonal harmonic,
index 2j-1 carries cos(j*phi) and index 2j carries sin(j*phi). On S^1 the
degree-l space (l >= 1) is {cos(l*theta), sin(l*theta)} in that order.
Flat arrays list degrees 0, 1, 2, ... consecutively.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .sphere_geom import QuadratureRule, surface_area


def harmonic_dim(d: int, ell: int) -> int:
    """Dimension of the space of degree-``ell`` spherical harmonics on S^d."""
    if d < 1 or ell < 0:
        raise ValueError("need d >= 1 and ell >= 0")
    if ell == 0:
        return 1
    num = (2 * ell + d - 1) * math.factorial(ell + d - 2)
    den = math.factorial(ell) * math.factorial(d - 1)
    n, r = divmod(num, den)
    assert r == 0
    return n


def poly_space_dim(d: int, max_degree: int) -> int:
    """Dimension of Pi_{max_degree}; zero when ``max_degree < 0``."""
    return sum(harmonic_dim(d, ell) for ell in range(max_degree + 1))


def laplacian_eigenvalue(d: int, ell: int) -> float:
    """Eigenvalue ell(ell+d-1) of -Delta on degree-ell harmonics."""
    return float(ell * (ell + d - 1))


def lambda_d(d: int) -> float:
    return (d - 1) / 2.0


def degree_of_index(d: int, max_degree: int) -> np.ndarray:
    """Degree of each flat harmonic index up to ``max_degree``."""
    return np.concatenate([np.full(harmonic_dim(d, ell), ell) for ell in range(max_degree + 1)]) \
        if max_degree >= 0 else np.zeros(0, dtype=int)


def flat_index(d: int, ell: int, m: int) -> int:
    n = harmonic_dim(d, ell)
    if not 0 <= m < n:
        raise ValueError(f"invalid harmonic index (l={ell}, m={m}) on S^{d}")
    return poly_space_dim(d, ell - 1) + m


def gegenbauer(lam: float, ell: int, t):
    """C_ell^lam(t) by the three-term recurrence."""
    t = np.asarray(t, dtype=float)
    c_prev = np.ones_like(t)
    if ell == 0:
        return c_prev if c_prev.ndim else float(c_prev)
    c = 2.0 * lam * t
    for n in range(1, ell):
        c_prev, c = c, (2.0 * (n + lam) * t * c - (n + 2.0 * lam - 1.0) * c_prev) / (n + 1)
    return c if c.ndim else float(c)


def zonal_projection(d: int, ell: int, t):
    """Reproducing kernel of degree-ell harmonics: sum_m Y_lm(x) Y_lm(y), t = x.y."""
    t = np.asarray(t, dtype=float)
    if d == 2:
        lam = 0.5
        return (ell + lam) / (lam * 4.0 * math.pi) * gegenbauer(lam, ell, t)
    if d == 1:
        if ell == 0:
            return np.full_like(t, 1.0 / (2.0 * math.pi))
        return np.cos(ell * np.arccos(np.clip(t, -1.0, 1.0))) / math.pi
    raise ValueError(f"unsupported d={d}")


def zonal_series(d: int, coeffs: np.ndarray, t) -> np.ndarray:
    """Evaluate sum_l coeffs[l] * zonal_projection(d, l, t) by forward recurrence."""
    t = np.asarray(t, dtype=float)
    coeffs = np.asarray(coeffs, dtype=float)
    out = np.zeros_like(t)
    if coeffs.size == 0:
        return out
    omega = surface_area(d)
    p_prev = np.ones_like(t)  # P_0 (Legendre, d=2) or T_0 (Chebyshev, d=1)
    out += coeffs[0] / omega * p_prev
    if coeffs.size == 1:
        return out
    p = t.copy()
    for ell in range(1, coeffs.size):
        if ell > 1:
            if d == 2:
                p_prev, p = p, ((2 * ell - 1) * t * p - (ell - 1) * p_prev) / ell
            else:
                p_prev, p = p, 2.0 * t * p - p_prev
        factor = (2 * ell + 1) / omega if d == 2 else 1.0 / math.pi
        if coeffs[ell] != 0.0:
            out += coeffs[ell] * factor * p
    return out


def _sectoral_seeds(m_max: int) -> np.ndarray:
    seeds = np.empty(m_max + 1)
    seeds[0] = 1.0 / math.sqrt(4.0 * math.pi)
    for m in range(1, m_max + 1):
        seeds[m] = seeds[m - 1] * math.sqrt((2 * m + 1) / (2.0 * m))
    return seeds


def harmonics_matrix(d: int, max_degree: int, points) -> np.ndarray:
    """Values of all real orthonormal harmonics of degree <= max_degree.

    Returns an ``(n_points, dim Pi_max_degree)`` array.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = pts.shape[0]
    if max_degree < 0:
        return np.zeros((n, 0))
    if d == 1:
        theta = np.arctan2(pts[:, 1], pts[:, 0])
        cols = [np.full(n, 1.0 / math.sqrt(2.0 * math.pi))]
        for ell in range(1, max_degree + 1):
            cols.append(np.cos(ell * theta) / math.sqrt(math.pi))
            cols.append(np.sin(ell * theta) / math.sqrt(math.pi))
        return np.column_stack(cols)
    if d != 2:
        raise ValueError(f"harmonic evaluation only for d in (1, 2); got {d}")

    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    L = max_degree
    out = np.empty((n, (L + 1) ** 2))
    seeds = _sectoral_seeds(L)
    # (x + iy)^m carries the sin^m(theta) factor, so Q below is P_l^m / sin^m
    w = x + 1j * y
    wm = np.ones(n, dtype=complex)
    sqrt2 = math.sqrt(2.0)
    for m in range(L + 1):
        if m > 0:
            wm = wm * w
        cm, sm = wm.real, wm.imag
        q_prev = np.zeros(n)
        q = np.full(n, seeds[m])
        for ell in range(m, L + 1):
            if ell == m + 1:
                q_prev, q = q, math.sqrt(2 * m + 3) * z * q
            elif ell > m + 1:
                a = math.sqrt((4.0 * ell * ell - 1.0) / (ell * ell - m * m))
                b = math.sqrt(((ell - 1.0) ** 2 - m * m) / (4.0 * (ell - 1.0) ** 2 - 1.0))
                q_prev, q = q, a * (z * q - b * q_prev)
            base = ell * ell
            if m == 0:
                out[:, base] = q
            else:
                out[:, base + 2 * m - 1] = sqrt2 * q * cm
                out[:, base + 2 * m] = sqrt2 * q * sm
    return out


def real_harmonic(d: int, ell: int, m: int, x) -> float | np.ndarray:
    """Single orthonormal real harmonic Y_{ell,m} at point(s) ``x``."""
    k = flat_index(d, ell, m)
    x = np.asarray(x, dtype=float)
    vals = harmonics_matrix(d, ell, np.atleast_2d(x))[:, k]
    return float(vals[0]) if x.ndim == 1 else vals


@dataclass(frozen=True, eq=False)
class HarmonicExpansion:
    d: int
    max_degree: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float).copy()
        if c.shape != (poly_space_dim(self.d, self.max_degree),):
            raise ValueError("coefficient vector length does not match max_degree")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite harmonic coefficients")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_terms(cls, d: int, terms: Iterable[tuple[int, int, float]],
                   max_degree: int | None = None) -> "HarmonicExpansion":
        terms = [(int(l), int(m), float(v)) for l, m, v in terms]
        L = max([l for l, _, _ in terms], default=0) if max_degree is None else max_degree
        c = np.zeros(poly_space_dim(d, L))
        for ell, m, v in terms:
            c[flat_index(d, ell, m)] += v
        return cls(d, L, c)

    @property
    def degrees(self) -> np.ndarray:
        return degree_of_index(self.d, self.max_degree)

    def get(self, ell: int, m: int) -> float:
        if ell > self.max_degree:
            return 0.0
        return float(self.coeffs[flat_index(self.d, ell, m)])

    def as_dict(self, tol: float = 0.0) -> dict[tuple[int, int], float]:
        out = {}
        k = 0
        for ell in range(self.max_degree + 1):
            for m in range(harmonic_dim(self.d, ell)):
                if abs(self.coeffs[k]) > tol:
                    out[(ell, m)] = float(self.coeffs[k])
                k += 1
        return out

    def scaled_by_degree(self, mult: Callable[[np.ndarray], np.ndarray]) -> "HarmonicExpansion":
        """Expansion with each degree-l coefficient multiplied by ``mult(l)``."""
        return HarmonicExpansion(self.d, self.max_degree, self.coeffs * mult(self.degrees))

    def __call__(self, points) -> np.ndarray:
        return harmonics_matrix(self.d, self.max_degree, points) @ self.coeffs

    synthesize = __call__

    def to_json(self) -> str:
        items = [[l, m, v] for (l, m), v in self.as_dict().items()]
        return json.dumps({"d": self.d, "max_degree": self.max_degree, "coefficients": items})

    @classmethod
    def from_json(cls, text: str) -> "HarmonicExpansion":
        obj = json.loads(text)
        return cls.from_terms(obj["d"], obj["coefficients"], obj["max_degree"])


def analyze(f: Callable[[np.ndarray], np.ndarray], d: int, max_degree: int,
            rule: QuadratureRule) -> HarmonicExpansion:
    """Harmonic coefficients <f, Y_lm> computed with ``rule``."""
    if rule.d != d:
        raise ValueError("quadrature rule dimension mismatch")
    if rule.design_degree < 2 * max_degree:
        raise ValueError(
            f"quadrature degree {rule.design_degree} < 2*max_degree={2 * max_degree}")
    vals = np.asarray(f(rule.nodes), dtype=float)
    Y = harmonics_matrix(d, max_degree, rule.nodes)
    return HarmonicExpansion(d, max_degree, Y.T @ (rule.weights * vals))


def sobolev_norm(e: HarmonicExpansion, s: float) -> float:
    """H^s norm sqrt(sum (l + lambda_d)^{2s} c_lm^2)."""
    w = (e.degrees + lambda_d(e.d)) ** (2.0 * s) if s != 0 else 1.0
    return math.sqrt(float(np.sum(w * e.coeffs ** 2)))
