"""Shared helpers: random model states and finite-difference oracles."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from fepid import GeneralisedSignal, GenerativeModel, PrecisionState

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


def random_problem(rng: np.random.Generator, p: int | None = None):
    """A random model, observation, expectation and precision state.

    Values are drawn from moderate ranges so finite differences are well
    conditioned; hyper weights are nonzero half the time.
    """
    if p is None:
        p = int(rng.integers(1, 5))
    m = GenerativeModel(
        alpha=float(rng.uniform(0.3, 3.0)),
        obs_gain=float(rng.uniform(0.5, 2.0)),
        setpoint=GeneralisedSignal(rng.uniform(-2, 2, p)),
        p=p,
    )
    y = GeneralisedSignal(rng.uniform(-3, 3, p))
    mu_x = GeneralisedSignal(rng.uniform(-3, 3, p))
    pr = PrecisionState(
        log_pi_z=rng.uniform(-2, 2, p),
        log_pi_w=rng.uniform(-2, 2, p - 1),
        hyper_weight_z=rng.uniform(0, 2, p) * rng.integers(0, 2, p),
        hyper_weight_w=rng.uniform(0, 2, p - 1) * rng.integers(0, 2, p - 1),
        hyper_target_z=rng.uniform(0.5, 3.0, p),
        hyper_target_w=rng.uniform(0.5, 3.0, p - 1),
    )
    return m, y, mu_x, pr


def central_diff(f, x0: float, h: float) -> float:
    return (f(x0 + h) - f(x0 - h)) / (2.0 * h)


def assert_grad_close(analytic: float, numeric: float, rel: float = 1e-6,
                      abs_tol: float = 1e-9):
    scale = max(abs(analytic), abs(numeric))
    if scale < abs_tol:
        assert abs(analytic - numeric) < abs_tol
    else:
        assert abs(analytic - numeric) <= rel * scale, (
            f"gradient mismatch: analytic={analytic!r} numeric={numeric!r}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
