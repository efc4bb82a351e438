import math

import numpy as np
import pytest

from fepid import GeneralisedSignal, NoiseSpec, embed, sample_noise, shift


class TestShift:
    def test_definition(self):
        g = GeneralisedSignal([1.0, 2.0, 3.0])
        assert shift(g) == GeneralisedSignal([2.0, 3.0, 0.0])

    def test_zero_fixed_point(self):
        assert shift(GeneralisedSignal.zeros(3)) == GeneralisedSignal.zeros(3)

    @pytest.mark.parametrize("p", range(1, 7))
    def test_nilpotency(self, p, rng):
        g = GeneralisedSignal(rng.uniform(-5, 5, p))
        for _ in range(p):
            g = shift(g)
        assert g == GeneralisedSignal.zeros(p)

    def test_linearity(self, rng):
        for _ in range(200):
            p = int(rng.integers(1, 7))
            g1 = GeneralisedSignal(rng.uniform(-5, 5, p))
            g2 = GeneralisedSignal(rng.uniform(-5, 5, p))
            a, b = rng.uniform(-3, 3, 2)
            lhs = shift(a * g1 + b * g2)
            rhs = a * shift(g1) + b * shift(g2)
            np.testing.assert_allclose(lhs.orders, rhs.orders, rtol=0, atol=1e-12)


class TestEmbed:
    def test_linear_ramp(self):
        assert embed([0.0, 1.0, 2.0], dt=1.0, p=3) == GeneralisedSignal([2.0, 1.0, 0.0])

    def test_constant_signal(self):
        for dt in (0.1, 1.0, 3.0):
            g = embed([4.2, 4.2, 4.2], dt=dt, p=3)
            assert g == GeneralisedSignal([4.2, 0.0, 0.0])

    def test_quadratic_derivatives(self):
        # y(t) = t^2: first derivative within O(dt) of 2t, second exact
        dt = 0.1
        t_now = 2.0
        window = [(t_now + (k - 4) * dt) ** 2 for k in range(5)]
        g = embed(window, dt=dt, p=3)
        assert g.orders[0] == pytest.approx(t_now**2)
        assert abs(g.orders[1] - 2 * t_now) <= 2 * dt
        assert g.orders[2] == pytest.approx(2.0, abs=1e-9)

    @pytest.mark.parametrize("p", range(2, 7))
    def test_leading_order_exact_on_polynomials(self, p, rng):
        # the (p-1)-th difference recovers the top derivative of a
        # degree p-1 polynomial exactly, up to float round-off
        dt = 0.05
        coeffs = rng.uniform(-2, 2, p)    # c0 + c1 t + ... + c_{p-1} t^{p-1}
        ts = 1.0 + dt * np.arange(-(p + 2), 1)
        window = sum(c * ts**i for i, c in enumerate(coeffs))
        g = embed(window, dt=dt, p=p)
        top = coeffs[p - 1] * math.factorial(p - 1)
        assert g.orders[p - 1] == pytest.approx(top, rel=1e-9, abs=1e-9)

    def test_insufficient_window(self):
        with pytest.raises(ValueError, match="insufficient"):
            embed([1.0, 2.0], dt=0.1, p=3)

    def test_bad_dt(self):
        with pytest.raises(ValueError):
            embed([1.0, 2.0, 3.0], dt=0.0, p=3)


class TestSampleNoise:
    def test_zero_sigma(self):
        path = sample_noise(NoiseSpec(sigma=0.0), n=100, dt=0.1)
        assert np.array_equal(path, np.zeros(100))

    def test_white_std_monte_carlo(self):
        # sigma=1, dt=1: sample std should sit within 1% of 1 for n=1e5
        path = sample_noise(NoiseSpec(kind="white", sigma=1.0, seed=123), n=100_000, dt=1.0)
        assert 0.99 <= path.std() <= 1.01

    def test_white_density_scaling(self):
        # std scales as sigma/sqrt(dt) so Euler integration accumulates
        # variance sigma^2 per unit time
        path = sample_noise(NoiseSpec(kind="white", sigma=0.5, seed=3), n=200_000, dt=0.01)
        assert path.std() == pytest.approx(0.5 / np.sqrt(0.01), rel=0.02)

    def test_coloured_autocorrelation(self):
        dt, gamma = 0.01, 0.5
        n = 50_000
        lag = int(round(gamma / dt))
        coloured = sample_noise(NoiseSpec(kind="coloured", sigma=1.0, gamma=gamma, seed=5), n, dt)
        white = sample_noise(NoiseSpec(kind="white", sigma=1.0, seed=5), n, dt)

        def autocorr(x, k):
            x = x - x.mean()
            return float(np.dot(x[:-k], x[k:]) / np.dot(x, x))

        assert autocorr(coloured, lag) > 0.3
        assert abs(autocorr(white, lag)) < 0.05

    def test_coloured_std_rescaled(self):
        path = sample_noise(NoiseSpec(kind="coloured", sigma=0.3, gamma=0.2, seed=9),
                            n=20_000, dt=0.01)
        assert path.std() == pytest.approx(0.3, rel=1e-12)

    def test_determinism(self):
        spec = NoiseSpec(kind="coloured", sigma=1.0, gamma=0.3, seed=42)
        a = sample_noise(spec, 5000, 0.01)
        b = sample_noise(spec, 5000, 0.01)
        assert np.array_equal(a, b)

    def test_validation(self):
        with pytest.raises(ValueError):
            NoiseSpec(sigma=-1.0)
        with pytest.raises(ValueError):
            NoiseSpec(kind="coloured", gamma=0.0)
        with pytest.raises(ValueError):
            sample_noise(NoiseSpec(sigma=1.0), n=0, dt=0.1)
