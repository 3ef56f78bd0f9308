import itertools
import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from kansa_sphere.kansa import assemble_kansa, least_squares_qr, solve_least_squares
from kansa_sphere.norming import build_norming_set
from kansa_sphere.sphere_geom import PointSet, quadrature_rule
from kansa_sphere.thinning import kron_tile_check, solve_square, solve_thinned, strong_rrqr, thin

from test_kansa import random_trial_function


def kahan(n, c=0.285):
    s = math.sqrt(1 - c * c)
    R = np.eye(n) - c * np.triu(np.ones((n, n)), 1)
    return np.diag(s ** np.arange(n)) @ R


def check_bounds(F, res):
    m, n = F.shape
    k = res.k
    sk = sla.svdvals(F)[k - 1]
    W = np.linalg.solve(res.A_k, res.B_k) if res.B_k.size else np.zeros(1)
    return (sla.svdvals(res.A_k)[-1] >= sk / math.sqrt(1 + res.f_param ** 2 * k * (n - k)) * (1 - 1e-12)
            and np.abs(W).max() <= res.f_param * (1 + 1e-12))


class TestStrongRRQR:
    @pytest.mark.parametrize("n,k", [(4, 1), (6, 3), (5, 5)])
    def test_identity(self, n, k):
        res = strong_rrqr(np.eye(n), k)
        assert res.sigma_min_Ak == pytest.approx(1.0) and res.swaps == 0

    def test_diagonal(self):
        res = strong_rrqr(np.diag([3.0, 2.0, 1.0]), 2)
        assert sorted(res.selected) == [0, 1]
        assert res.sigma_min_Ak == pytest.approx(2.0)

    def test_random_batch(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            F = rng.standard_normal((20, 80))
            assert check_bounds(F, strong_rrqr(F, 20, 2.0))

    def test_swaps_full_rank(self):
        rng = np.random.default_rng(8)
        total = 0
        for _ in range(30):
            F = rng.standard_normal((15, 60))
            res = strong_rrqr(F, 15, 1.01)
            total += res.swaps
            assert check_bounds(F, res)
            assert np.abs(np.linalg.solve(res.A_k, res.B_k)).max() <= 1.01 + 1e-9
        assert total > 0

    def test_kahan_forces_swaps(self):
        F = kahan(30)
        res = strong_rrqr(F, 29, 1.05)
        assert res.swaps >= 1  # column pivoting alone keeps the identity order here
        assert check_bounds(F, res)
        assert res.sigma_min_Ak >= sla.svdvals(F)[28] / res.q1_bound

    def test_monotone_determinant(self):
        rng = np.random.default_rng(9)
        F = rng.standard_normal((12, 50))
        res = strong_rrqr(F, 12, 1.001)
        h = res.logdet_history
        assert len(h) == res.swaps + 1
        assert all(b > a for a, b in zip(h, h[1:]))
        assert h[-1] == pytest.approx(np.linalg.slogdet(F[:, res.selected])[1], abs=1e-8)

    def test_max_volume_small(self):
        rng = np.random.default_rng(3)
        F = rng.standard_normal((3, 9))
        res = strong_rrqr(F, 3, 1.0 + 1e-9)
        best = max(itertools.combinations(range(9), 3), key=lambda c: abs(np.linalg.det(F[:, c])))
        # every single swap is non-improving; here that is also the global optimum
        assert abs(np.linalg.det(F[:, res.selected])) >= abs(np.linalg.det(F[:, best])) / 1.0001

    def test_factorization(self):
        rng = np.random.default_rng(4)
        F = rng.standard_normal((10, 25))
        res = strong_rrqr(F, 6)
        assert np.all(np.diag(res.A_k) >= 0)
        R = np.block([[res.A_k, res.B_k], [np.zeros((4, 6)), res.trailing]])
        # F Pi = Q R with Q orthogonal: Gram matrices agree
        Fp = F[:, res.perm]
        np.testing.assert_allclose(R.T @ R, Fp.T @ Fp, atol=1e-10)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 12), st.integers(1, 30), st.integers(0, 2**31),
           st.floats(1.01, 3.0))
    def test_bounds_property(self, m, extra, seed, f):
        rng = np.random.default_rng(seed)
        n = m + extra
        k = int(rng.integers(1, m + 1))
        F = rng.standard_normal((m, n)) * np.logspace(0, -6, n)
        assert check_bounds(F, strong_rrqr(F, k, f))

    @pytest.mark.parametrize("k", [0, 6])
    def test_k_range(self, k):
        with pytest.raises(ValueError, match="out of range"):
            strong_rrqr(np.ones((5, 8)), k)

    def test_nonfinite(self):
        F = np.ones((3, 4))
        F[1, 2] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            strong_rrqr(F, 2)

    def test_f_param(self):
        with pytest.raises(ValueError):
            strong_rrqr(np.eye(3), 2, 1.0)


@pytest.fixture(scope="module")
def system60(tps2, helm):
    from kansa_sphere.sphere_geom import fibonacci_points
    X = fibonacci_points(60)
    return assemble_kansa(X, build_norming_set(X, 2.0), tps2, helm)


class TestThin:
    def test_square_system(self, system60):
        ts = thin(system60)
        assert ts.K_red.shape == (60, 60) and len(ts.Y_tilde) == 60
        np.testing.assert_array_equal(ts.K_red, system60.K[ts.rows])
        assert ts.sigma_min > 0

    def test_guarantee(self, system60):
        ts = thin(system60)
        smin_K = sla.svdvals(system60.K)[-1]
        assert ts.sigma_min >= smin_K / ts.rrqr.q1_bound

    def test_duplicates_dropped(self, system60, tps2, helm):
        Y = system60.Y
        Ydup = PointSet(np.vstack([Y.points, Y.points[:40]]))
        ts = thin(assemble_kansa(system60.X, Ydup, tps2, helm))
        pts = ts.Y_tilde.points
        assert len(np.unique(np.round(pts, 14), axis=0)) == 60

    def test_same_set(self, system60, tps2, helm):
        X = system60.X
        sys = assemble_kansa(X, X, tps2, helm)
        ts = thin(sys)
        np.testing.assert_array_equal(np.sort(ts.rows), np.arange(60))
        np.testing.assert_array_equal(ts.K_red, sys.K)

    def test_plain_set_runs(self, fib, tps2, helm):
        # any set Z with #Z = #X can be thinned; only the inverse-norm growth is reported
        X = fib(60)
        from kansa_sphere.sphere_geom import fibonacci_points
        Z = PointSet(fibonacci_points(61).points[1:])
        rep = solve_thinned(thin(assemble_kansa(X, Z, tps2, helm)), np.ones(60))
        assert rep.extras["inverse_norm"] > 0


class TestSolveThinned:
    def test_identity(self, rng):
        f = rng.standard_normal(6)
        np.testing.assert_allclose(solve_square(np.eye(6), f).coefficients, f)

    def test_matches_least_squares_when_square(self, system60, tps2, helm, rng):
        sys = assemble_kansa(system60.X, system60.X, tps2, helm)
        f = rng.standard_normal(60)
        a_ls = solve_least_squares(sys, f).coefficients
        ts = thin(sys)
        a_th = solve_thinned(ts, f[ts.rows]).coefficients
        np.testing.assert_allclose(a_th, a_ls, atol=1e-8 * np.abs(a_ls).max())

    def test_exact_recovery(self, system60, rng):
        v = random_trial_function(system60.X, system60.kernel, rng)
        ts = thin(system60)
        f = v.apply(system60.op, ts.Y_tilde.points)
        rule = quadrature_rule(2, 60)
        rep = solve_thinned(ts, f, reference=v, rule=rule)
        vnorm = math.sqrt(np.dot(rule.weights, v(rule.nodes) ** 2))
        assert rep.l2_error <= 1e-7 * vnorm

    def test_envelope_reported(self, system60):
        rep = solve_thinned(thin(system60), np.ones(60))
        assert rep.extras["inverse_norm_over_N"] == pytest.approx(rep.extras["inverse_norm"] / 60)

    def test_singular(self):
        with pytest.raises(ValueError, match="singular"):
            solve_square(np.zeros((3, 3)), np.ones(3))


class TestKronTile:
    def test_kappa_one(self, rng):
        assert kron_tile_check(rng.standard_normal((6, 4)), 1) <= 1e-14

    def test_random(self, rng):
        assert kron_tile_check(rng.standard_normal((8, 5)), 3) <= 1e-10

    def test_identity(self):
        K = np.kron(np.ones((4, 1)), np.eye(4))
        np.testing.assert_allclose(sla.svdvals(K), 2.0)
        assert kron_tile_check(np.eye(4), 4) <= 1e-14

    def test_memory_guard(self):
        with pytest.raises(ValueError, match="1e6"):
            kron_tile_check(np.ones((1000, 100)), 11)
