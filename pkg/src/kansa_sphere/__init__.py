"""Stabilized kernel collocation (Kansa) solvers for elliptic problems on S^1 and S^2."""

from .collocation import TrialBasis, interpolate, lagrange_basis, make_basis, stability_ratio
from .harness import convergence_study, fit_rate, manufactured_problem
from .kansa import KansaSystem, SolveReport, assemble_kansa, gram_diagnostics, reconstruct, \
    solve_least_squares
from .kernels import SpectralOperator, ZonalKernel, helmholtz_operator, tps_kernel
from .norming import build_norming_set, mz_check, norming_check
from .spectral import HarmonicExpansion, harmonics_matrix
from .sphere_geom import PointSet, fibonacci_points, greedy_net, quadrature_rule
from .thinning import kron_tile_check, solve_thinned, strong_rrqr, thin

__version__ = "0.1.0"
