"""Point sets on the unit sphere S^d (d = 1, 2): metrics, nets, quadrature.

Points are stored as rows of an ``(n, d+1)`` float array. Distances are
geodesic (great-circle) distances in radians.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

log = logging.getLogger(__name__)

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0
DEFAULT_PROBE_DENSITY = 100


def surface_area(d: int) -> float:
    """Surface area omega_d of S^d (only d = 1, 2 are supported)."""
    if d == 1:
        return 2.0 * math.pi
    if d == 2:
        return 4.0 * math.pi
    raise ValueError(f"unsupported sphere dimension d={d}")


def _check_dim(d: int) -> None:
    if d not in (1, 2):
        raise ValueError(f"unsupported sphere dimension d={d}; only 1 and 2")


def chord_to_geodesic(chord):
    return 2.0 * np.arcsin(np.clip(np.asarray(chord) / 2.0, 0.0, 1.0))


def geodesic_to_chord(theta):
    return 2.0 * np.sin(np.asarray(theta) / 2.0)


def geodesic_distance(x, y) -> float:
    """Great-circle distance between two unit vectors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(np.arccos(np.clip(np.dot(x, y), -1.0, 1.0)))


def fill_distance(points: np.ndarray, probes: np.ndarray) -> float:
    """Max over ``probes`` of the geodesic distance to the nearest point."""
    chord, _ = cKDTree(points).query(probes, k=1)
    return float(chord_to_geodesic(np.max(chord)))


def separation_radius(points: np.ndarray) -> float:
    """Half the minimal pairwise geodesic distance (exact)."""
    if len(points) < 2:
        raise ValueError("separation radius needs at least two points")
    chord, _ = cKDTree(points).query(points, k=2)
    cmin = float(np.min(chord[:, 1]))
    if cmin <= 1e-14:
        raise ValueError("zero separation: point set contains duplicate points")
    return 0.5 * float(chord_to_geodesic(cmin))


def probe_grid(d: int, n: int) -> np.ndarray:
    """Dense probe grid used for fill-distance estimates."""
    return fibonacci_array(n) if d == 2 else circle_array(n, offset=0.5)


@dataclass(frozen=True, eq=False)
class PointSet:
    """Distinct unit vectors on S^d with lazily cached mesh metrics.

    ``h`` is the probe-grid estimate of the fill distance at the default
    probe density; ``q`` is exact.
    """

    points: np.ndarray
    d: int = field(default=2)

    def __post_init__(self):
        _check_dim(self.d)
        pts = np.ascontiguousarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.d + 1:
            raise ValueError(f"points must have shape (n, {self.d + 1}); got {pts.shape}")
        norms = np.linalg.norm(pts, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError("points must be unit vectors (|norm - 1| <= 1e-12)")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    @cached_property
    def _metrics(self) -> tuple[float, float, float]:
        return metrics(self, DEFAULT_PROBE_DENSITY)

    @property
    def h(self) -> float:
        return self._metrics[0]

    @property
    def q(self) -> float:
        return self._metrics[1]

    @property
    def rho(self) -> float:
        return self._metrics[2]

    def subset(self, idx) -> "PointSet":
        return PointSet(self.points[np.asarray(idx)], self.d)


def metrics(X: PointSet, probe_density: int = DEFAULT_PROBE_DENSITY) -> tuple[float, float, float]:
    """Return ``(h, q, rho)`` for a point set.

    ``h`` is maximised over a probe grid of ``probe_density * len(X)`` points,
    so it can only underestimate the true covering radius.
    """
    if len(X) < 2:
        raise ValueError("metrics need at least two points")
    q = separation_radius(X.points)
    h = fill_distance(X.points, probe_grid(X.d, probe_density * len(X)))
    # the probe estimate can fall below q on very coarse sets; h >= q always holds
    h = max(h, q)
    return h, q, h / q


def fibonacci_array(n: int) -> np.ndarray:
    k = np.arange(n, dtype=float)
    z = 1.0 - (2.0 * k + 1.0) / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = 2.0 * math.pi * np.mod(k / GOLDEN, 1.0)
    pts = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def circle_array(n: int, offset: float = 0.0) -> np.ndarray:
    theta = 2.0 * math.pi * (np.arange(n) + offset) / n
    return np.column_stack([np.cos(theta), np.sin(theta)])


def fibonacci_points(n: int, d: int = 2) -> PointSet:
    """Quasi-uniform points: spherical Fibonacci lattice (d=2) or equispaced circle (d=1)."""
    if n < 2:
        raise ValueError("need n >= 2 points")
    _check_dim(d)
    X = PointSet(fibonacci_array(n) if d == 2 else circle_array(n), d)
    if d == 2 and n >= 20 and X.rho > 3.0:
        log.warning("Fibonacci set with n=%d has mesh ratio %.3f > 3", n, X.rho)
    return X


def greedy_net(candidates: PointSet, epsilon: float, seed_index: int = 0,
               check_density: bool = True) -> PointSet:
    """Farthest-point (Gonzalez) selection of an epsilon-net from ``candidates``.

    Points are added in farthest-first order until every candidate lies within
    ``epsilon`` of a selected point. Selected points are pairwise more than
    ``epsilon`` apart, so the result has ``q >= epsilon/2``. The selection is
    returned in candidate order.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    pts = candidates.points
    n = len(pts)
    if check_density:
        fill = fill_distance(pts, probe_grid(candidates.d, 2 * n)) if n > 1 else math.pi
        if fill > epsilon / 2:
            raise ValueError(
                f"candidates too sparse for epsilon={epsilon:.4g}: candidate fill distance "
                f"{fill:.4g} exceeds epsilon/2")
        if fill > epsilon / 4:
            log.info("candidate fill %.4g exceeds epsilon/4=%.4g", fill, epsilon / 4)

    eps_chord = float(geodesic_to_chord(epsilon))
    tree = cKDTree(pts)
    mind = np.full(n, np.inf)
    selected = []
    j = int(seed_index)
    while True:
        selected.append(j)
        p = pts[j]
        r = mind[j] if np.isfinite(mind[j]) else np.inf
        if r > 0.5 or not np.isfinite(r):
            dist = np.linalg.norm(pts - p, axis=1)
            np.minimum(mind, dist, out=mind)
        else:
            idx = np.asarray(tree.query_ball_point(p, r), dtype=np.intp)
            if idx.size:
                dist = np.linalg.norm(pts[idx] - p, axis=1)
                mind[idx] = np.minimum(mind[idx], dist)
        j = int(np.argmax(mind))
        if mind[j] <= eps_chord:
            break
    return PointSet(pts[np.sort(np.asarray(selected))], candidates.d)


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    d: int
    design_degree: int
    nodes: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.weights)


def quadrature_rule(d: int, design_degree: int) -> QuadratureRule:
    """Positive-weight rule exact for harmonics of degree <= ``design_degree``.

    d = 2: Gauss-Legendre in the polar cosine times an equispaced azimuth grid.
    d = 1: trapezoid rule on equispaced points.
    """
    _check_dim(d)
    if design_degree < 1:
        raise ValueError("design_degree must be >= 1")
    if d == 1:
        n = design_degree + 1
        return QuadratureRule(1, design_degree, circle_array(n), np.full(n, 2.0 * math.pi / n))
    n_polar = design_degree // 2 + 1
    n_az = 2 * design_degree + 2
    z, wz = np.polynomial.legendre.leggauss(n_polar)
    phi = 2.0 * math.pi * np.arange(n_az) / n_az
    Z, PHI = np.meshgrid(z, phi, indexing="ij")
    R = np.sqrt(1.0 - Z ** 2)
    nodes = np.column_stack([(R * np.cos(PHI)).ravel(), (R * np.sin(PHI)).ravel(), Z.ravel()])
    nodes /= np.linalg.norm(nodes, axis=1, keepdims=True)
    weights = np.repeat(wz * (2.0 * math.pi / n_az), n_az)
    return QuadratureRule(2, design_degree, nodes, weights)


def integrate(values: np.ndarray, rule: QuadratureRule) -> float:
    return float(np.dot(rule.weights, values))


def l2_norm(f: Callable[[np.ndarray], np.ndarray], rule: QuadratureRule) -> float:
    """L2 norm of ``f`` (vectorised over an ``(n, d+1)`` array) by quadrature."""
    v = np.asarray(f(rule.nodes), dtype=float)
    return math.sqrt(float(np.dot(rule.weights, v * v)))


def l2_error(f, g, rule: QuadratureRule) -> float:
    return l2_norm(lambda x: np.asarray(f(x)) - np.asarray(g(x)), rule)


def read_points(path, d: int | None = None) -> PointSet:
    """Read a point file: one point per line, whitespace separated, ``#`` comments."""
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append([float(v) for v in line.split()])
    if not rows:
        raise ValueError(f"no points in {path}")
    pts = np.array(rows, dtype=float)
    if d is not None and pts.shape[1] != d + 1:
        raise ValueError(f"expected {d + 1} coordinates per point, found {pts.shape[1]}")
    norms = np.linalg.norm(pts, axis=1)
    bad = np.abs(norms - 1.0) > 1e-6
    if np.any(bad):
        raise ValueError(f"point {int(np.argmax(bad))} has norm {norms[bad][0]:.9g}; not on the sphere")
    return PointSet(pts / norms[:, None], pts.shape[1] - 1)


def write_points(path, X: PointSet, comment: str | None = None) -> None:
    lines = []
    if comment:
        lines.extend(f"# {c}" for c in comment.splitlines())
    lines.extend(" ".join(f"{v:.17g}" for v in p) for p in X.points)
    Path(path).write_text("\n".join(lines) + "\n")
