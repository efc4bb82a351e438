import numpy as np
import pytest
from scipy.optimize import brentq

from fepid import (GeneralisedSignal, GenerativeModel, PrecisionState,
                   free_energy, grad_action, grad_log_precisions, grad_mu_x,
                   prediction_errors)

from conftest import assert_grad_close, central_diff, random_problem


def unit_problem(**kwargs):
    """p=3 model with unit rates and zero setpoint unless overridden."""
    defaults = dict(alpha=1.0, obs_gain=1.0,
                    setpoint=GeneralisedSignal.zeros(3), p=3)
    defaults.update(kwargs)
    return GenerativeModel(**defaults)


class TestPredictionErrors:
    def test_perfect_prediction(self):
        m = unit_problem()
        y = GeneralisedSignal([0.7, -0.2, 1.5])
        eps_z, _ = prediction_errors(m, y, y)
        np.testing.assert_array_equal(eps_z, np.zeros(3))

    def test_prior_fixed_point(self):
        m = unit_problem(setpoint=GeneralisedSignal.from_value(2.0))
        mu = GeneralisedSignal([2.0, 0.0, 0.0])
        _, eps_w = prediction_errors(m, GeneralisedSignal.zeros(3), mu)
        np.testing.assert_array_equal(eps_w, np.zeros(2))

    def test_hand_evaluation(self):
        m = unit_problem(alpha=2.0, setpoint=GeneralisedSignal([1.0, 0.0, 0.0]))
        eps_z, eps_w = prediction_errors(m, GeneralisedSignal([0.5, 0.0, 0.0]),
                                         GeneralisedSignal.zeros(3))
        np.testing.assert_array_equal(eps_z, [0.5, 0.0, 0.0])
        np.testing.assert_array_equal(eps_w, [-2.0, 0.0])

    def test_depth_mismatch(self):
        m = unit_problem()
        with pytest.raises(ValueError, match="depth"):
            prediction_errors(m, GeneralisedSignal([1.0]), GeneralisedSignal.zeros(3))


class TestFreeEnergy:
    def test_zero_at_perfect_prediction(self):
        m = unit_problem()
        pr = PrecisionState(np.zeros(3), np.zeros(2))
        fb = free_energy(m, GeneralisedSignal.zeros(3), GeneralisedSignal.zeros(3), pr)
        assert fb.total == 0.0
        # observation term alone vanishes whenever y matches the prediction
        y = GeneralisedSignal([1.0, 2.0, 3.0])
        assert free_energy(m, y, y, pr).f_obs == 0.0

    def test_single_order(self):
        m = GenerativeModel(setpoint=GeneralisedSignal.zeros(1), p=1)
        pr = PrecisionState(np.log([2.0]), np.zeros(0))
        fb = free_energy(m, GeneralisedSignal([1.0]), GeneralisedSignal([0.0]), pr)
        assert fb.total == pytest.approx(1.0)    # 1/2 * 2 * 1^2

    def test_hand_evaluation_with_hyperprior(self):
        m = unit_problem()
        pr = PrecisionState(
            log_pi_z=np.log([2.0, 1.0, 1.0]),
            log_pi_w=np.log([1.0, 1.0]),
            hyper_weight_z=[4.0, 0.0, 0.0],
            hyper_target_z=[3.0, 3.0, 3.0],
        )
        fb = free_energy(m, GeneralisedSignal([0.5, 0.0, 0.0]),
                         GeneralisedSignal.zeros(3), pr)
        assert fb.f_obs == pytest.approx(0.25)
        assert fb.f_hyper_z == pytest.approx(2.0)   # 1/2 * 4 * (2-3)^2
        assert fb.f_dyn == 0.0 and fb.f_log == 0.0 and fb.f_hyper_w == 0.0
        assert fb.total == pytest.approx(2.25)

    def test_decomposition_exact(self, rng):
        for _ in range(100):
            m, y, mu, pr = random_problem(rng)
            fb = free_energy(m, y, mu, pr, include_log_terms=True)
            assert fb.total == fb.f_obs + fb.f_dyn + fb.f_log + fb.f_hyper_z + fb.f_hyper_w

    def test_quadratic_parts_nonnegative(self, rng):
        for _ in range(100):
            m, y, mu, pr = random_problem(rng)
            fb = free_energy(m, y, mu, pr)
            assert fb.f_obs >= 0 and fb.f_dyn >= 0
            assert fb.f_hyper_z >= 0 and fb.f_hyper_w >= 0

    def test_two_channel_structural_independence(self, rng):
        # observation term blind to dynamics precisions and vice versa
        for _ in range(300):
            m, y, mu, pr = random_problem(rng)
            fb = free_energy(m, y, mu, pr)
            pr_w = PrecisionState(pr.log_pi_z, pr.log_pi_w + rng.uniform(-3, 3, pr.p - 1),
                                  pr.hyper_weight_z, pr.hyper_weight_w,
                                  pr.hyper_target_z, pr.hyper_target_w)
            pr_z = PrecisionState(pr.log_pi_z + rng.uniform(-3, 3, pr.p), pr.log_pi_w,
                                  pr.hyper_weight_z, pr.hyper_weight_w,
                                  pr.hyper_target_z, pr.hyper_target_w)
            assert free_energy(m, y, mu, pr_w).f_obs == fb.f_obs
            assert free_energy(m, y, mu, pr_z).f_dyn == fb.f_dyn

    def test_custom_hyper_map(self):
        m = unit_problem()
        pr = PrecisionState(np.log([2.0, 1.0, 1.0]), np.zeros(2),
                            hyper_weight_z=[1.0, 0.0, 0.0], hyper_target_z=[4.0, 1.0, 1.0])
        fb = free_energy(m, GeneralisedSignal.zeros(3), GeneralisedSignal.zeros(3), pr,
                         hyper_map_z=np.sqrt)
        assert fb.f_hyper_z == pytest.approx(0.0)   # pi=2 equals sqrt(4)


class TestGradMuX:
    def test_zero_at_minimum(self):
        m = unit_problem()
        pr = PrecisionState(np.zeros(3), np.zeros(2))
        g = grad_mu_x(m, GeneralisedSignal.zeros(3), GeneralisedSignal.zeros(3), pr)
        np.testing.assert_array_equal(g, np.zeros(3))

    def test_single_order(self):
        m = GenerativeModel(setpoint=GeneralisedSignal.zeros(1), p=1)
        pr = PrecisionState(np.log([3.0]), np.zeros(0))
        g = grad_mu_x(m, GeneralisedSignal([2.0]), GeneralisedSignal([0.5]), pr)
        # no dynamics channel at p=1: gradient is -pi_z0 * eps_z0
        assert g[0] == pytest.approx(-3.0 * 1.5)

    def test_matches_finite_differences(self, rng):
        for _ in range(100):
            m, y, mu, pr = random_problem(rng)
            analytic = grad_mu_x(m, y, mu, pr)
            for i in range(m.p):
                def f(v, i=i):
                    orders = mu.orders.copy()
                    orders[i] = v
                    return free_energy(m, y, GeneralisedSignal(orders), pr).total
                numeric = central_diff(f, mu.orders[i], 1e-6)
                assert_grad_close(analytic[i], numeric)


class TestGradAction:
    def test_zero_errors(self):
        m = unit_problem()
        pr = PrecisionState(np.zeros(3), np.zeros(2))
        y = GeneralisedSignal([0.3, 0.1, -0.2])
        assert grad_action(m, y, y, pr, np.ones(3)) == 0.0

    def test_single_term(self):
        m = unit_problem()
        pr = PrecisionState(np.log([3.0, 1.0, 1.0]), np.zeros(2))
        g = grad_action(m, GeneralisedSignal([0.2, 0.0, 0.0]),
                        GeneralisedSignal.zeros(3), pr, np.array([1.0, 0.0, 0.0]))
        assert g == pytest.approx(0.6)

    def test_matches_finite_differences(self, rng):
        for _ in range(100):
            m, y, mu, pr = random_problem(rng)
            dy_da = rng.uniform(-2, 2, m.p)
            analytic = grad_action(m, y, mu, pr, dy_da)

            def f(a):
                return free_energy(m, GeneralisedSignal(y.orders + dy_da * a), mu, pr).total
            numeric = central_diff(f, 0.0, 1e-6)
            assert_grad_close(analytic, numeric, rel=1e-5)


class TestGradLogPrecisions:
    def test_stationary_at_inverse_mse(self):
        pr = PrecisionState(np.log([4.0, 0.5, 1.0]), np.log([2.0, 3.0]))
        g_z, g_w = grad_log_precisions(pr, 1.0 / pr.pi_z, 1.0 / pr.pi_w)
        np.testing.assert_allclose(g_z, 0.0, atol=1e-14)
        np.testing.assert_allclose(g_w, 0.0, atol=1e-14)

    def test_hand_evaluation(self):
        pr = PrecisionState(np.zeros(1), np.zeros(0))
        g_z, _ = grad_log_precisions(pr, np.array([4.0]), np.zeros(0))
        assert g_z[0] == pytest.approx(1.5)     # 1 * (2 - 0.5)

    def test_matches_finite_differences(self, rng):
        for _ in range(100):
            m, y, mu, pr = random_problem(rng)
            eps_z, eps_w = prediction_errors(m, y, mu)
            g_z, g_w = grad_log_precisions(pr, eps_z**2, eps_w**2)

            def f_z(i, v):
                log_z = pr.log_pi_z.copy()
                log_z[i] = v
                pr2 = PrecisionState(log_z, pr.log_pi_w, pr.hyper_weight_z,
                                     pr.hyper_weight_w, pr.hyper_target_z, pr.hyper_target_w)
                return free_energy(m, y, mu, pr2, include_log_terms=True).total

            def f_w(i, v):
                log_w = pr.log_pi_w.copy()
                log_w[i] = v
                pr2 = PrecisionState(pr.log_pi_z, log_w, pr.hyper_weight_z,
                                     pr.hyper_weight_w, pr.hyper_target_z, pr.hyper_target_w)
                return free_energy(m, y, mu, pr2, include_log_terms=True).total

            for i in range(pr.p):
                numeric = central_diff(lambda v: f_z(i, v), pr.log_pi_z[i], 1e-6)
                assert_grad_close(g_z[i], numeric)
            for i in range(pr.p - 1):
                numeric = central_diff(lambda v: f_w(i, v), pr.log_pi_w[i], 1e-6)
                assert_grad_close(g_w[i], numeric)

    def test_stationary_precision_by_root_finding(self):
        # with no hyperprior the stationary precision is 1/<eps^2>;
        # with a dominant hyperprior it moves to the target
        mse = 0.37

        def grad_at(log_pi, weight, target):
            pr = PrecisionState(np.array([log_pi]), np.zeros(0),
                                hyper_weight_z=[weight], hyper_target_z=[target])
            g_z, _ = grad_log_precisions(pr, np.array([mse]), np.zeros(0))
            return g_z[0]

        root = brentq(lambda lp: grad_at(lp, 0.0, 1.0), -10, 10)
        assert np.exp(root) == pytest.approx(1.0 / mse, rel=1e-9)
        root = brentq(lambda lp: grad_at(lp, 1e9, 5.0), -10, 10)
        assert np.exp(root) == pytest.approx(5.0, rel=1e-6)


class TestPrecisionState:
    def test_positivity_structural(self):
        pr = PrecisionState(np.array([-50.0, 0.0, 50.0]), np.zeros(2))
        assert (pr.pi_z > 0).all()

    def test_channel_off_is_expressible(self):
        pr = PrecisionState.from_precisions([0.0, 1.0, 1.0], [1.0, 1.0])
        assert pr.pi_z[0] == 0.0
        assert pr.log_pi_z[0] == -np.inf

    def test_validation(self):
        with pytest.raises(ValueError):
            PrecisionState(np.zeros(3), np.zeros(1))    # wrong w length
        with pytest.raises(ValueError):
            PrecisionState(np.zeros(3), np.zeros(2), hyper_weight_z=[-1.0, 0, 0])
        with pytest.raises(ValueError):
            PrecisionState(np.zeros(3), np.zeros(2), hyper_target_z=[0.0, 1, 1])
        with pytest.raises(ValueError):
            PrecisionState(np.array([np.nan, 0, 0]), np.zeros(2))
