import numpy as np
import pytest

from sketchnewton.errors import BadSubset, LineSearchStalled
from sketchnewton.problems import GlmDataset
from sketchnewton.tcs import (ArmijoParams, TcsConfig, TcsState, b_preset,
                              compute_cov, default_b, default_gamma,
                              kaczmarz_tcs_step, p_uniform, tcs_armijo_run,
                              tcs_linear_block_step, tcs_nonlinear_block_step,
                              tcs_run, _armijo_nonlinear, _prepare_nonlinear)
from conftest import random_glm


def consistent_state(dataset, alpha, w):
    """State with alpha_bar recomputed exactly from alpha."""
    return TcsState(alpha=np.asarray(alpha, dtype=np.float64),
                    w=np.asarray(w, dtype=np.float64),
                    alpha_bar=dataset.A_dot(np.asarray(alpha, dtype=np.float64))
                    / (dataset.lam * dataset.n),
                    cov=compute_cov(dataset))


class TestCoinParameters:
    def test_p_uniform_examples(self):
        assert p_uniform(1, 1, 2, 2) == pytest.approx(0.5)
        assert p_uniform(123, 150, 123, 32561) == pytest.approx(32561 / 32711)
        assert p_uniform(2, 3, 4, 6) == pytest.approx(12 / 24)

    def test_presets(self):
        assert b_preset("minus003", 1000, 100) == pytest.approx(1000 / 1100 - 0.03)
        assert b_preset("minus011", 1000, 100) == pytest.approx(1000 / 1100 - 0.11)
        assert b_preset("third", 1000, 100) == pytest.approx(1000 / 1300)
        with pytest.raises(ValueError):
            b_preset("nope", 10, 1)

    def test_default_b_clamped(self):
        b = default_b(1, 1, 1, 1)
        assert 0.0 < b < 1.0
        assert default_b(10, 150, 10, 2000) == pytest.approx(2000 / 2150 - 0.01)

    def test_default_gamma(self):
        assert default_gamma(1e7) == 1.0
        assert default_gamma(50.0) == 1.8


class TestLinearBlockStep:
    def dataset(self):
        # identity features, lambda n = 1 so alpha_bar = A alpha and cov = I
        return GlmDataset(A=np.eye(2), y=np.array([1.0, -1.0]), lam=0.5)

    def test_hand_value(self):
        ds = self.dataset()
        state = consistent_state(ds, [1.0, 0.0], [0.0, 0.0])
        tcs_linear_block_step(state, ds, np.array([0]))
        assert state.w == pytest.approx([0.5, 0.0])
        assert state.alpha == pytest.approx([0.5, 0.0])
        assert state.alpha_bar == pytest.approx([0.5, 0.0])

    def test_zero_residual_is_noop(self):
        ds = self.dataset()
        state = TcsState.initial(ds)
        before = state.as_vector()
        tcs_linear_block_step(state, ds, np.array([0, 1]))
        assert np.array_equal(state.as_vector(), before)

    def test_full_block_zeroes_linear_residual(self, rng):
        ds = random_glm(rng, n=8, d=3, lam=0.2)
        state = consistent_state(ds, rng.standard_normal(8), rng.standard_normal(3))
        tcs_linear_block_step(state, ds, np.arange(3))
        residual = ds.A_dot(state.alpha) / (ds.lam * ds.n) - state.w
        assert np.max(np.abs(residual)) <= 1e-10

    def test_bad_subset(self):
        ds = self.dataset()
        state = TcsState.initial(ds)
        with pytest.raises(BadSubset):
            tcs_linear_block_step(state, ds, np.array([1, 0]))
        with pytest.raises(BadSubset):
            tcs_linear_block_step(state, ds, np.array([2]))


class TestNonlinearBlockStep:
    def test_zero_residual_is_noop(self, rng):
        ds = random_glm(rng, n=4, d=2, lam=0.5)
        # at w = 0 the dual residual vanishes when alpha_i = y_i / 2
        state = consistent_state(ds, ds.y / 2.0, np.zeros(2))
        before = state.as_vector()
        tcs_nonlinear_block_step(state, ds, np.arange(4), gamma=1.0)
        assert np.max(np.abs(state.as_vector() - before)) <= 1e-14

    def test_gamma_scales_displacement(self, rng):
        ds = random_glm(rng, n=5, d=3, lam=0.3)
        s1 = consistent_state(ds, np.zeros(5), np.zeros(3))
        s2 = consistent_state(ds, np.zeros(5), np.zeros(3))
        tcs_nonlinear_block_step(s1, ds, np.array([1, 3]), gamma=1.0)
        tcs_nonlinear_block_step(s2, ds, np.array([1, 3]), gamma=0.25)
        assert np.allclose(s2.as_vector(), 0.25 * s1.as_vector(), atol=1e-14)


class TestKaczmarzVariant:
    def test_nonlinear_hand_value(self):
        ds = GlmDataset(A=np.array([[1.0]]), y=np.array([1.0]), lam=1.0)
        state = consistent_state(ds, [0.0], [0.0])
        kaczmarz_tcs_step(state, ds, nonlinear=True, index=0)
        assert state.alpha[0] == pytest.approx(0.5 / 1.0625)
        assert state.w[0] == pytest.approx(0.25 * 0.5 / 1.0625)

    def test_singleton_equivalence_with_block_steps(self, rng):
        ds = random_glm(rng, n=6, d=4, lam=0.25)
        alpha0 = rng.standard_normal(6)
        w0 = rng.standard_normal(4)
        for nonlinear, index in [(True, 2), (False, 1), (True, 5), (False, 3)]:
            sk = consistent_state(ds, alpha0.copy(), w0.copy())
            sb = consistent_state(ds, alpha0.copy(), w0.copy())
            kaczmarz_tcs_step(sk, ds, nonlinear, index, gamma=0.8)
            if nonlinear:
                tcs_nonlinear_block_step(sb, ds, np.array([index]), gamma=0.8)
            else:
                tcs_linear_block_step(sb, ds, np.array([index]), gamma=0.8)
            assert np.max(np.abs(sk.as_vector() - sb.as_vector())) <= 1e-12
            assert np.max(np.abs(sk.alpha_bar - sb.alpha_bar)) <= 1e-12


class TestRunLoop:
    def test_alpha_bar_tracks_exact_value(self, rng):
        ds = random_glm(rng, n=30, d=6, lam=1.0 / 30)
        cfg = TcsConfig(tau_d=3, tau_n=5, tol=0.0, max_iters=10 ** 4,
                        eval_every=10 ** 4, seed=7)
        trace = tcs_run(ds, cfg)
        state = trace.final_state
        exact = ds.A_dot(state.alpha) / (ds.lam * ds.n)
        assert np.linalg.norm(state.alpha_bar - exact) <= \
            1e-7 * (1.0 + np.linalg.norm(state.alpha))

    def test_deterministic_per_seed(self, rng):
        ds = random_glm(rng, n=20, d=5)
        cfg = TcsConfig(tau_d=2, tau_n=4, tol=0.0, max_iters=500,
                        eval_every=100, seed=3)
        t1, t2 = tcs_run(ds, cfg), tcs_run(ds, cfg)
        assert np.array_equal(t1.final_x, t2.final_x)
        assert [r.grad_norm for r in t1.records] == [r.grad_norm for r in t2.records]

    def test_coin_frequency_matches_b(self, rng):
        ds = random_glm(rng, n=20, d=5)
        b = 0.6
        draws = 20000
        cfg = TcsConfig(tau_d=2, tau_n=3, b=b, tol=0.0, max_iters=draws,
                        eval_every=draws, seed=11, audit=True)
        trace = tcs_run(ds, cfg)
        frac = sum(a.kind == "nonlinear" for a in trace.audits) / draws
        se = np.sqrt(b * (1 - b) / draws)
        assert abs(frac - b) <= 3 * se

    def test_converges_on_small_instance(self, rng):
        ds = random_glm(rng, n=40, d=5, lam=1.0 / 40)
        cfg = TcsConfig(tau_d=5, tau_n=10, tol=1e-6, max_iters=10 ** 5,
                        eval_every=200, seed=1)
        trace = tcs_run(ds, cfg)
        assert trace.status == "converged"
        assert trace.records[-1].grad_norm <= 1e-6
        # effective-pass accounting: strictly increasing across evaluations
        passes = [r.passes for r in trace.records]
        assert all(b2 > a2 for a2, b2 in zip(passes, passes[1:]))

    def test_tau_clamped_with_warning(self, rng):
        ds = random_glm(rng, n=5, d=3)
        cfg = TcsConfig(tau_d=10, tau_n=10, tol=0.0, max_iters=10, eval_every=10)
        with pytest.warns(UserWarning):
            trace = tcs_run(ds, cfg)
        assert trace.iterations == 10

    def test_invalid_b_rejected(self, rng):
        ds = random_glm(rng, n=5, d=3)
        with pytest.raises(ValueError):
            tcs_run(ds, TcsConfig(tau_d=1, tau_n=1, b=1.0, max_iters=1))


class TestArmijo:
    def test_param_validation(self):
        with pytest.raises(ValueError):
            ArmijoParams(c=0.6)
        with pytest.raises(ValueError):
            ArmijoParams(beta=1.0)

    def test_linear_steps_take_no_function_evaluations(self, rng):
        ds = random_glm(rng, n=20, d=5)
        cfg = TcsConfig(tau_d=2, tau_n=3, tol=0.0, max_iters=400, eval_every=400,
                        seed=5, line_search=ArmijoParams(), audit=True)
        trace = tcs_armijo_run(ds, cfg)
        linear = [a for a in trace.audits if a.kind == "linear"]
        assert linear
        assert all(a.extra_evals == 0 and a.gamma == 1.0 for a in linear)

    def test_accepted_steps_pass_independent_recheck(self, rng):
        ds = random_glm(rng, n=20, d=5)
        cfg = TcsConfig(tau_d=2, tau_n=3, tol=0.0, max_iters=400, eval_every=400,
                        seed=5, line_search=ArmijoParams(gamma_init=8.0), audit=True)
        trace = tcs_armijo_run(ds, cfg)
        nonlinear = [a for a in trace.audits if a.kind == "nonlinear"]
        assert nonlinear
        assert all(a.accepted_ok for a in nonlinear)
        assert all(a.gamma <= 8.0 for a in nonlinear)
        # at least one step had to backtrack from the aggressive initial value
        assert any(a.extra_evals > 1 for a in nonlinear)

    def test_zero_residual_accepted_immediately(self, rng):
        ds = random_glm(rng, n=4, d=2, lam=0.5)
        state = consistent_state(ds, ds.y / 2.0, np.zeros(2))
        pieces = _prepare_nonlinear(state, ds, np.arange(4))
        audit = _armijo_nonlinear(state, ds, pieces, ArmijoParams(), audit=True)
        assert audit.extra_evals == 1
        assert audit.gamma == ArmijoParams().gamma_init
        assert audit.accepted_ok

    def test_ascent_direction_stalls(self, rng):
        ds = random_glm(rng, n=6, d=3, lam=0.3)
        state = consistent_state(ds, rng.standard_normal(6), rng.standard_normal(3))
        pieces = _prepare_nonlinear(state, ds, np.array([0, 2, 4]))
        pieces.y = -pieces.y          # flip into an ascent direction
        with pytest.raises(LineSearchStalled):
            _armijo_nonlinear(state, ds, pieces, ArmijoParams(), audit=False)
