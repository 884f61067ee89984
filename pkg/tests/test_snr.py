import numpy as np
import pytest

from sketchnewton.errors import SingularW
from sketchnewton.problems import (ScalarProblem, glm_system, linear_system,
                                   scalar_system, snm_system)
from sketchnewton.sketches import (Gaussian, Identity, SingleRow,
                                   UniformSubsample, sample)
from sketchnewton.snr import (SnrConfig, estimate_rho, gauss_newton_step,
                              run_snr, sketch_and_project_oracle, snr_step,
                              snr_step_weighted, sketched_metric_grad,
                              sketched_metric_value)
from conftest import random_glm, random_invertible_linear, random_quad_losses

QUADRATIC = ScalarProblem(phi=lambda x: x * x - 4.0, dphi=lambda x: 2 * x)


def random_systems(rng):
    """A mix of small instances: linear, GLM primal-dual, split."""
    A, b, _ = random_invertible_linear(rng, 4)
    yield linear_system(A, b)
    yield glm_system(random_glm(rng, n=5, d=3, lam=0.2))
    yield snm_system(random_quad_losses(rng, 2, 2), 2)


class TestSketchedMetric:
    def test_scalar_linear_value(self, rng):
        system = scalar_system(ScalarProblem(phi=lambda x: x, dphi=lambda x: 1.0))
        S = sample(Identity(), rng, system=system)
        x = np.array([3.0])
        assert sketched_metric_value(system, x, x, S) == pytest.approx(4.5)
        assert sketched_metric_grad(system, x, x, S) == pytest.approx([3.0])

    def test_zero_at_root(self, rng):
        A, b, x_star = random_invertible_linear(rng, 3)
        system = linear_system(A, b)
        S = sample(UniformSubsample(2), rng, system=system)
        assert sketched_metric_value(system, x_star, x_star, S) == pytest.approx(0.0, abs=1e-18)
        assert np.allclose(sketched_metric_grad(system, x_star, x_star, S), 0.0, atol=1e-12)

    def test_identity_sketch_equals_full_newton_functional(self, rng):
        # with S = I the metric is 1/2 ||(DF^T)^+ F||^2
        A, b, _ = random_invertible_linear(rng, 3)
        system = linear_system(A, b)
        x = rng.standard_normal(3)
        S = sample(Identity(), rng, system=system)
        oracle = 0.5 * np.linalg.norm(np.linalg.pinv(A.T.T) @ (A @ x - b)) ** 2
        assert sketched_metric_value(system, x, x, S) == pytest.approx(oracle, abs=1e-10)

    def test_grad_matches_finite_differences(self, rng):
        system = glm_system(random_glm(rng, n=4, d=2, lam=0.5))
        x = rng.standard_normal(system.p)
        y = rng.standard_normal(system.p)
        S = sample(Gaussian(3), rng, system=system)
        g = sketched_metric_grad(system, x, y, S)
        h = 1e-6
        for j in range(system.p):
            e = np.zeros(system.p)
            e[j] = h
            fd = (sketched_metric_value(system, x + e, y, S)
                  - sketched_metric_value(system, x - e, y, S)) / (2 * h)
            assert g[j] == pytest.approx(fd, abs=1e-6 * (1 + abs(fd)))


class TestSnrStep:
    def test_linear_exact_in_one_step(self):
        system = linear_system(np.diag([2.0, 4.0]), np.array([2.0, 8.0]))
        S = sample(Identity(), np.random.default_rng(0), system=system)
        assert np.allclose(snr_step(system, np.zeros(2), S, 1.0), [1.0, 2.0])

    def test_scalar_hand_value(self, rng):
        system = scalar_system(QUADRATIC)
        S = sample(Identity(), rng, system=system)
        new = snr_step(system, np.array([3.0]), S, 1.0)
        assert new[0] == pytest.approx(13.0 / 6.0)

    def test_fixed_at_root(self, rng):
        A, b, x_star = random_invertible_linear(rng, 3)
        system = linear_system(A, b)
        for dist in (Identity(), UniformSubsample(2), Gaussian(2)):
            S = sample(dist, rng, system=system)
            assert np.allclose(snr_step(system, x_star, S, 1.3), x_star, atol=1e-10)

    def test_equals_sgd_step_on_sketched_metric(self, rng):
        for system in random_systems(rng):
            x = rng.standard_normal(system.p)
            S = sample(UniformSubsample(min(3, system.m)), rng, system=system)
            gamma = 0.7
            lhs = snr_step(system, x, S, gamma)
            rhs = x - gamma * sketched_metric_grad(system, x, x, S)
            assert np.max(np.abs(lhs - rhs)) <= 1e-12 * (1 + np.max(np.abs(x)))


class TestWeightedStep:
    def test_identity_weight_reduces_to_plain(self, rng):
        for system in random_systems(rng):
            x = rng.standard_normal(system.p)
            S = sample(Gaussian(2), rng, system=system)
            assert np.max(np.abs(snr_step_weighted(system, x, S, 0.9, np.eye(system.p))
                                 - snr_step(system, x, S, 0.9))) <= 1e-12

    def test_scalar_weight_invariance(self, rng):
        A, b, _ = random_invertible_linear(rng, 3)
        system = linear_system(A, b)
        x = rng.standard_normal(3)
        S = sample(UniformSubsample(2), rng, system=system)
        assert np.allclose(snr_step_weighted(system, x, S, 1.0, 2.0 * np.eye(3)),
                           snr_step(system, x, S, 1.0), atol=1e-10)

    def test_singular_weight_rejected(self, rng):
        A, b, _ = random_invertible_linear(rng, 2)
        system = linear_system(A, b)
        S = sample(Identity(), rng, system=system)
        with pytest.raises(SingularW):
            snr_step_weighted(system, np.zeros(2), S, 1.0, np.diag([1.0, -1.0]))


class TestVerificationOracles:
    def test_projection_oracle_gamma_zero(self, rng):
        A, b, _ = random_invertible_linear(rng, 3)
        system = linear_system(A, b)
        x = rng.standard_normal(3)
        S = sample(UniformSubsample(2), rng, system=system)
        assert np.allclose(sketch_and_project_oracle(system, x, S, 0.0), x)

    def test_projection_oracle_full_sketch_linear(self, rng):
        A, b, x_star = random_invertible_linear(rng, 3)
        system = linear_system(A, b)
        S = sample(Identity(), rng, system=system)
        assert np.allclose(sketch_and_project_oracle(system, rng.standard_normal(3), S, 1.0),
                           x_star, atol=1e-8)

    def test_gauss_newton_gamma_zero_and_hand_value(self, rng):
        system = scalar_system(QUADRATIC)
        S = sample(Identity(), rng, system=system)
        assert np.allclose(gauss_newton_step(system, np.array([3.0]), S, 0.0), [3.0])
        assert gauss_newton_step(system, np.array([3.0]), S, 1.0)[0] == \
            pytest.approx(13.0 / 6.0)

    def test_fixed_point_form(self, rng):
        # step(gamma) = gamma * projection(gamma=1) + (1 - gamma) * x
        for system in random_systems(rng):
            x = rng.standard_normal(system.p) * 0.5
            S = sample(UniformSubsample(min(2, system.m)), rng, system=system)
            gamma = 0.6
            lhs = snr_step(system, x, S, gamma)
            rhs = gamma * sketch_and_project_oracle(system, x, S, 1.0) + (1 - gamma) * x
            assert np.max(np.abs(lhs - rhs)) <= 1e-10

    def test_projection_idempotence(self, rng):
        for system in random_systems(rng):
            x = rng.standard_normal(system.p)
            S = sample(Gaussian(2), rng, system=system)
            Smat = S.matrix()
            DFS = system.eval_DF_times(x, Smat)
            H = Smat @ np.linalg.pinv(DFS.T @ DFS) @ Smat.T
            DF = system.df_full(x)
            P = DF @ H @ DF.T
            assert np.linalg.norm(P @ P - P) <= 1e-8


class TestRunSnr:
    def test_linear_converges_in_one_iteration(self, rng):
        A, b, _ = random_invertible_linear(rng, 3)
        system = linear_system(A, b)
        trace = run_snr(system, Identity(), SnrConfig(gamma=1.0, max_iters=5,
                                                      stop_tol=1e-10, eval_every=1))
        assert trace.converged
        assert trace.iterations <= 1

    def test_deterministic_per_seed(self, rng):
        system = glm_system(random_glm(rng, n=6, d=3, lam=0.3))
        cfg = SnrConfig(gamma=0.9, max_iters=50, stop_tol=0.0, eval_every=10, seed=42)
        t1 = run_snr(system, UniformSubsample(3), cfg)
        t2 = run_snr(system, UniformSubsample(3), cfg)
        assert np.array_equal(t1.final_x, t2.final_x)
        assert np.array_equal(t1.f_history, t2.f_history)
        assert [r.grad_norm for r in t1.records] == [r.grad_norm for r in t2.records]

    def test_best_so_far_non_increasing_and_clock_monotone(self, rng):
        system = glm_system(random_glm(rng, n=6, d=3, lam=0.3))
        trace = run_snr(system, UniformSubsample(2),
                        SnrConfig(gamma=0.8, max_iters=200, stop_tol=0.0, eval_every=20))
        trace.check()
        running = np.minimum.accumulate(trace.f_history)
        assert trace.best_f == pytest.approx(running[-1])

    def test_monotone_distance_on_quadratic_with_single_row(self, rng):
        # convex quadratic sum-of-squares instance, single-row sketches
        A, b, x_star = random_invertible_linear(rng, 4)
        system = linear_system(A, b)
        x = rng.standard_normal(4)
        rng2 = np.random.default_rng(9)
        for _ in range(200):
            S = sample(SingleRow(), rng2, system=system)
            x_new = snr_step(system, x, S, 0.8)
            assert np.linalg.norm(x_new - x_star) <= np.linalg.norm(x - x_star) + 1e-12
            x = x_new

    def test_linear_rate_identity_sketch(self, rng):
        A, b, x_star = random_invertible_linear(rng, 4)
        system = linear_system(A, b)
        gamma = 0.7
        x = rng.standard_normal(4)
        d0 = np.linalg.norm(x - x_star) ** 2
        S = sample(Identity(), rng, system=system)
        for k in range(1, 30):
            x = snr_step(system, x, S, gamma)
            assert np.linalg.norm(x - x_star) ** 2 <= (1 - gamma) ** k * d0 * (1 + 1e-10)

    def test_gamma_range_enforced(self):
        with pytest.raises(ValueError):
            SnrConfig(gamma=2.0)
        with pytest.raises(ValueError):
            SnrConfig(gamma=0.0)
        SnrConfig(gamma=1.8)   # accepted


class TestEstimateRho:
    def test_identity_sketch_gives_one(self, rng):
        A, b, _ = random_invertible_linear(rng, 3)
        system = linear_system(A, b)
        est = estimate_rho(system, [rng.standard_normal(3)], Identity(), 5, rng)
        assert est.rho == pytest.approx(1.0, abs=1e-8)
        assert 0.0 <= est.rho <= 1.0 + 1e-9

    def test_single_row_on_orthogonal_system(self, rng):
        Q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        system = linear_system(Q, np.zeros(4))
        est = estimate_rho(system, [rng.standard_normal(4)], SingleRow(), 4000, rng)
        assert est.rho == pytest.approx(0.25, abs=0.03)
        assert est.L_bound == pytest.approx(1.0, rel=1e-8)
